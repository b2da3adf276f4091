#include "lefschetz/as_complex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <unordered_map>

#include <boost/random/sobol.hpp>

namespace lef {

namespace {

using TermList = std::vector<std::pair<GroupElement, double>>;

constexpr double kPi = 3.14159265358979323846;

// calls f(tuple, weight) for every choice of one term per list
template <class Fn>
void for_each_choice(const std::vector<TermList>& lists, std::vector<GroupElement>& tuple, Fn&& f) {
  const std::size_t m = lists.size();
  for (const auto& l : lists)
    if (l.empty()) return;
  std::vector<std::size_t> idx(m, 0);
  while (true) {
    double w = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      tuple[i] = lists[i][idx[i]].first;
      w *= lists[i][idx[i]].second;
    }
    f(tuple, w);
    std::size_t i = 0;
    while (i < m) {
      if (++idx[i] < lists[i].size()) break;
      idx[i] = 0;
      ++i;
    }
    if (i == m) return;
  }
}

SupportCertificate cutoff_support(const BumpCutoff& chi) { return {chi.center(), chi.radius()}; }

SupportCertificate merge_support(const SupportCertificate& a, const SupportCertificate& b) {
  if (!a.valid()) return b;
  if (!b.valid()) return a;
  double d2 = 0;
  for (std::size_t i = 0; i < a.center.size(); ++i) d2 += (a.center[i] - b.center[i]) * (a.center[i] - b.center[i]);
  return {a.center, std::max(a.radius, std::sqrt(d2) + b.radius)};
}

void require_support(const ExtendedASCochain& F, const char* op) {
  if (F.degree >= 0 && (!F.support.valid() || !F.group))
    throw ASError(std::string(op) + ": cochain '" + F.name + "' has no support certificate");
}

std::vector<double> drop_point(PointTuple x, int n, int i) {
  std::vector<double> out;
  out.reserve(x.size() - n);
  const int pts = static_cast<int>(x.size()) / n;
  for (int j = 0; j < pts; ++j)
    if (j != i) out.insert(out.end(), x.begin() + j * n, x.begin() + (j + 1) * n);
  return out;
}

}  // namespace

void ExtendedASCochain::candidates(const double* x0, std::vector<GroupElement>& out) const {
  if (!support.valid() || !group) throw ASError("cochain '" + name + "' has no support certificate");
  group->elements_near(x0, support.center.data(), support.radius, out);
}

InvariantASCochain psi_inv(const GroupCochain& c, CutoffPtr chi) {
  InvariantASCochain f;
  f.degree = c.degree;
  f.n = chi->dim();
  f.name = "psi_inv(" + c.name + ")";
  const int k = c.degree, n = f.n;
  f.eval = [c, chi, k, n](PointTuple x) -> Complex {
    std::vector<TermList> lists(k + 1);
    for (int i = 0; i <= k; ++i) chi->terms(x.data() + i * n, lists[i]);
    std::vector<GroupElement> tuple(k + 1);
    Complex s = 0.0;
    for_each_choice(lists, tuple, [&](const std::vector<GroupElement>& g, double w) { s += w * c.eval(g); });
    return s;
  };
  return f;
}

ExtendedASCochain psi_ext(const GroupCochain& c, CutoffPtr chi) {
  ExtendedASCochain F;
  F.degree = c.degree;
  F.n = chi->dim();
  F.name = "psi(" + c.name + ")";
  F.support = cutoff_support(*chi);
  F.group = chi->group_ptr();
  const int k = c.degree, n = F.n;
  F.eval = [c, chi, k, n](const GroupElement& eta, PointTuple x) -> Complex {
    double w0 = chi->translate(eta, x.data());
    if (w0 == 0.0) return 0.0;
    std::vector<TermList> lists(k);
    for (int i = 1; i <= k; ++i) chi->terms(x.data() + i * n, lists[i - 1]);
    std::vector<GroupElement> tuple(k + 1);
    tuple[0] = eta;
    if (k == 0) return w0 * c.eval(tuple);
    std::vector<GroupElement> rest(k);
    Complex s = 0.0;
    for_each_choice(lists, rest, [&](const std::vector<GroupElement>& g, double w) {
      std::copy(g.begin(), g.end(), tuple.begin() + 1);
      s += w * c.eval(tuple);
    });
    return w0 * s;
  };
  return F;
}

InvariantASCochain delta_inv(const InvariantASCochain& f) {
  InvariantASCochain out;
  out.degree = f.degree + 1;
  out.n = f.n;
  out.name = "delta(" + f.name + ")";
  const int n = f.n, k1 = f.degree + 1;
  out.eval = [f, n, k1](PointTuple x) -> Complex {
    Complex s = 0.0;
    for (int i = 0; i <= k1; ++i) {
      auto y = drop_point(x, n, i);
      s += (i % 2 == 0 ? 1.0 : -1.0) * f.eval(y);
    }
    return s;
  };
  return out;
}

ExtendedASCochain zero_extended(int degree, CutoffPtr chi) {
  ExtendedASCochain F;
  F.degree = degree;
  F.n = chi->dim();
  F.name = "0";
  F.support = cutoff_support(*chi);
  F.group = chi->group_ptr();
  F.eval = [](const GroupElement&, PointTuple) -> Complex { return 0.0; };
  return F;
}

ExtendedASCochain eps_ext(const ExtendedASCochain& F, CutoffPtr chi) {
  if (F.degree < 0) return zero_extended(0, chi);
  require_support(F, "eps_ext");
  ExtendedASCochain out;
  out.degree = F.degree + 1;
  out.n = F.n;
  out.name = "eps(" + F.name + ")";
  out.support = merge_support(F.support, cutoff_support(*chi));
  out.group = F.group;
  const int n = F.n, k1 = F.degree + 1;
  out.eval = [F, chi, n, k1](const GroupElement& eta, PointTuple x) -> Complex {
    Complex s = 0.0;
    double w0 = chi->translate(eta, x.data());
    if (w0 != 0.0) {
      PointTuple tail = x.subspan(n);
      std::vector<GroupElement> cand;
      F.candidates(tail.data(), cand);
      Complex e = 0.0;
      for (const auto& h : cand) e += F.eval(h, tail);
      s += w0 * e;
    }
    for (int i = 1; i <= k1; ++i) {
      auto y = drop_point(x, n, i);
      s += (i % 2 == 0 ? 1.0 : -1.0) * F.eval(eta, y);
    }
    return s;
  };
  return out;
}

ExtendedASCochain map_I(const InvariantASCochain& f, CutoffPtr chi) {
  ExtendedASCochain out;
  out.degree = f.degree;
  out.n = f.n;
  out.name = "I(" + f.name + ")";
  out.support = cutoff_support(*chi);
  out.group = chi->group_ptr();
  out.eval = [f, chi](const GroupElement& eta, PointTuple x) -> Complex {
    double w = chi->translate(eta, x.data());
    return w == 0.0 ? Complex(0.0) : w * f.eval(x);
  };
  return out;
}

InvariantASCochain map_P(const ExtendedASCochain& F) {
  require_support(F, "map_P");
  InvariantASCochain out;
  out.degree = F.degree;
  out.n = F.n;
  out.name = "P(" + F.name + ")";
  out.eval = [F](PointTuple x) -> Complex {
    std::vector<GroupElement> cand;
    F.candidates(x.data(), cand);
    Complex s = 0.0;
    for (const auto& h : cand) s += F.eval(h, x);
    return s;
  };
  return out;
}

ExtendedASCochain homotopy_H(const ExtendedASCochain& F) {
  ExtendedASCochain out;
  out.degree = F.degree - 1;
  out.n = F.n;
  out.name = "H(" + F.name + ")";
  out.support = F.support;
  out.group = F.group;
  if (F.degree <= 0) {
    out.eval = [](const GroupElement&, PointTuple) -> Complex { return 0.0; };
    return out;
  }
  const int n = F.n, k = F.degree;
  out.eval = [F, n, k](const GroupElement& eta, PointTuple x) -> Complex {
    Complex s = 0.0;
    std::vector<double> y((k + 1) * n);
    for (int i = 0; i < k; ++i) {
      // x_0..x_i, x_i, x_{i+1}..x_{k-1}
      std::copy(x.begin(), x.begin() + (i + 1) * n, y.begin());
      std::copy(x.begin() + i * n, x.end(), y.begin() + (i + 1) * n);
      s += (i % 2 == 0 ? 1.0 : -1.0) * F.eval(eta, y);
    }
    return s;
  };
  return out;
}

ExtendedASCochain linear_combination(const ExtendedASCochain& a, Complex sa, const ExtendedASCochain& b, Complex sb) {
  if (a.degree != b.degree) throw ASError("linear_combination: degree mismatch");
  ExtendedASCochain out;
  out.degree = a.degree;
  out.n = a.n;
  out.name = "lin(" + a.name + ", " + b.name + ")";
  out.support = merge_support(a.support, b.support);
  out.group = a.group ? a.group : b.group;
  out.eval = [a, b, sa, sb](const GroupElement& eta, PointTuple x) -> Complex {
    return sa * a.eval(eta, x) + sb * b.eval(eta, x);
  };
  return out;
}

// ---------------------------------------------------------------- kernels

EquivariantKernel GaussianTestKernel::kernel(double eta) const {
  if (!(s > 0)) throw ASError("Gaussian test kernel needs s > 0");
  if (!drift.empty() && static_cast<int>(drift.size()) != n) throw ASError("drift has the wrong dimension");
  EquivariantKernel K;
  K.name = "gauss";
  K.n = n;
  K.t = s;
  const CMatrix M = (matrix.size() == 0 ? CMatrix::Identity(1, 1) : matrix) * weight;
  K.size = static_cast<int>(M.rows());
  const double norm = std::pow(4.0 * kPi * s, -0.5 * n);
  std::vector<double> v = drift.empty() ? std::vector<double>(n, 0.0) : drift;
  const int nn = n;
  const double ss = s;
  K.eval = [M, v, norm, nn, ss](const double* x, const double* y, CMatrix& out) {
    double d2 = 0;
    for (int i = 0; i < nn; ++i) d2 += (x[i] - y[i] - v[i]) * (x[i] - y[i] - v[i]);
    out = M * (norm * std::exp(-d2 / (4.0 * ss)));
  };
  double vn = 0;
  for (double x : v) vn += x * x;
  const double shift = std::sqrt(vn / s);
  const double mn = M.operatorNorm(), pn = std::pow(4.0 * kPi, -0.5 * n);
  K.scaled_norm = [mn, pn, shift](double rho) {
    double d = std::max(0.0, rho - shift);
    return mn * pn * std::exp(-0.25 * d * d);
  };
  K.cert = certify(K.scaled_norm, 0.5 * n, eta);
  return K;
}

GaussianTestKernel GaussianTestKernel::compose(const GaussianTestKernel& o) const {
  if (n != o.n) throw ASError("Gaussian test kernels of different dimension");
  GaussianTestKernel out{n, s + o.s, weight * o.weight, {}, {}};
  if (matrix.size() || o.matrix.size()) {
    CMatrix a = matrix.size() ? matrix : CMatrix::Identity(o.matrix.rows(), o.matrix.rows());
    CMatrix b = o.matrix.size() ? o.matrix : CMatrix::Identity(a.rows(), a.rows());
    out.matrix = a * b;
  }
  if (!drift.empty() || !o.drift.empty()) {
    out.drift.assign(n, 0.0);
    for (int i = 0; i < n; ++i)
      out.drift[i] = (drift.empty() ? 0.0 : drift[i]) + (o.drift.empty() ? 0.0 : o.drift[i]);
  }
  return out;
}

std::vector<EquivariantKernel> test_kernels(const std::vector<GaussianTestKernel>& g, double eta) {
  std::vector<EquivariantKernel> out;
  for (const auto& k : g) out.push_back(k.kernel(eta));
  return out;
}

Complex hochschild_b_kernels(const std::function<Complex(const std::vector<GaussianTestKernel>&)>& rho,
                             const std::vector<GaussianTestKernel>& A) {
  const int m = static_cast<int>(A.size()) - 1;  // rho has degree m - 1
  if (m < 1) throw ASError("b needs at least two kernels");
  Complex s = 0.0;
  for (int i = 0; i < m; ++i) {
    std::vector<GaussianTestKernel> B;
    for (int j = 0; j < i; ++j) B.push_back(A[j]);
    B.push_back(A[i].compose(A[i + 1]));
    for (int j = i + 2; j <= m; ++j) B.push_back(A[j]);
    s += (i % 2 == 0 ? 1.0 : -1.0) * rho(B);
  }
  std::vector<GaussianTestKernel> B{A[m].compose(A[0])};
  for (int j = 1; j < m; ++j) B.push_back(A[j]);
  s += (m % 2 == 0 ? 1.0 : -1.0) * rho(B);
  return s;
}

// ---------------------------------------------------------------- quadrature helpers

namespace {

const Rule1D& reference_rule(int order) {
  static std::mutex mu;
  static std::map<int, Rule1D> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, gauss_legendre(order, -1.0, 1.0)).first;
  return it->second;
}

// Gauss–Legendre panels no longer than max_panel, split at the breakpoints
Rule1D panel_rule(double a, double b, std::vector<double> breaks, double max_panel, int order) {
  Rule1D out;
  if (!(b > a)) return out;
  const Rule1D& ref = reference_rule(order);
  std::sort(breaks.begin(), breaks.end());
  std::vector<double> pts{a};
  for (double x : breaks)
    if (x > pts.back() + 1e-12 && x < b - 1e-12) pts.push_back(x);
  pts.push_back(b);
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    double len = pts[k + 1] - pts[k];
    int m = std::max(1, static_cast<int>(std::ceil(len / max_panel - 1e-9)));
    double h = len / m;
    for (int p = 0; p < m; ++p) {
      double lo = pts[k] + p * h, half = 0.5 * h, mid = lo + half;
      for (std::size_t j = 0; j < ref.nodes.size(); ++j) {
        out.nodes.push_back(mid + half * ref.nodes[j]);
        out.weights.push_back(half * ref.weights[j]);
      }
    }
  }
  return out;
}

// orbit points g c ± r inside (a, b): the places where the cutoff is not smooth (n = 1)
std::vector<double> kinks_1d(const CrystallographicGroup& G, const std::vector<double>& c, double r, double a,
                             double b) {
  std::vector<double> out;
  double mid = 0.5 * (a + b);
  std::vector<GroupElement> near;
  G.elements_near(&mid, c.data(), 0.5 * (b - a) + r + 1e-9, near);
  for (const auto& g : near) {
    double gc;
    G.act(g, c.data(), &gc);
    for (double x : {gc - r, gc + r})
      if (x > a && x < b) out.push_back(x);
  }
  return out;
}

// distance beyond which the kernel profile stays below tol times its peak, in units of sqrt(t)
double kernel_reach(const EquivariantKernel& K, double tol) {
  if (!K.scaled_norm) throw ASError("kernel '" + K.name + "' has no decay profile");
  const double step = 0.01, rho_max = 80.0;
  double peak = 0, last = 0;
  std::vector<double> v;
  for (double rho = 0; rho <= rho_max; rho += step) v.push_back(K.scaled_norm(rho));
  for (double x : v) peak = std::max(peak, x);
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] > tol * peak) last = (i + 1) * step;
  return last * std::sqrt(K.t);
}

double default_panel(const std::vector<EquivariantKernel>& A, const PairingOptions& opt) {
  if (opt.max_panel > 0) return opt.max_panel;
  double t = std::numeric_limits<double>::infinity();
  for (const auto& K : A) t = std::min(t, K.t);
  return 2.0 * std::sqrt(t);
}

struct SobolStream {
  boost::random::sobol gen;
  std::vector<std::uint64_t> shift;
  SobolStream(int dim, std::mt19937_64& rng) : gen(dim), shift(dim) {
    for (auto& s : shift) s = rng();
  }
  void next(std::vector<double>& u) {
    for (std::size_t i = 0; i < u.size(); ++i) {
      std::uint64_t v = static_cast<std::uint64_t>(gen()) ^ shift[i];
      u[i] = std::ldexp(static_cast<double>(v >> 11), -53);
    }
  }
};

struct ComplexStats {
  std::vector<Complex> est;
  Complex mean() const {
    Complex m = 0.0;
    for (auto e : est) m += e;
    return m / static_cast<double>(est.size());
  }
  double error() const {
    if (est.size() < 2) return 0.0;
    Complex m = mean();
    double v = 0;
    for (auto e : est) v += std::norm(e - m);
    return std::sqrt(v / (est.size() - 1) / est.size());
  }
};

void check_kernels(const std::vector<EquivariantKernel>& A, int n) {
  if (A.empty()) throw ASError("no kernels");
  for (const auto& K : A) {
    if (K.n != n) throw ASError("kernel '" + K.name + "' has the wrong dimension");
    if (K.size != A[0].size) throw ASError("kernels of different fibre size");
  }
}

CMatrix fibre_action(const PairingOptions& opt, const GroupElement& g, int size) {
  if (!opt.action) return CMatrix::Identity(size, size);
  CMatrix S = opt.action(g);
  if (S.rows() != size || S.cols() != size) throw ASError("group action has the wrong fibre size");
  return S;
}

// ---------------------------------------------------------------- chain engine
//
// ∫ G(nu y_0, ..., nu y_k) tr[A_0(y_0, y_1) ... A_k(y_k, p y_0) S] dy with y_0 in the ball c ± r

struct ChainTerm {
  GroupElement p, nu;
  CMatrix S;
};

struct ChainSetup {
  const CrystallographicGroup* G = nullptr;
  int n = 1, k = 0, size = 1;
  std::vector<double> c;
  double r = 0;
  std::vector<const EquivariantKernel*> A;
  std::vector<double> L;     // reach of A_i
  std::vector<double> tail;  // sum_{j >= i} L_j
  std::vector<double> kink_c;
  double kink_r = 0;         // kinks of the integrand, n = 1
  double panel = 0.1;
};

using ChainIntegrand = std::function<Complex(const double* x)>;

Rule1D chain_rule(const ChainSetup& cs, double a, double b, int order) {
  std::vector<double> br;
  if (cs.n == 1 && cs.kink_r > 0) br = kinks_1d(*cs.G, cs.kink_c, cs.kink_r, a, b);
  return panel_rule(a, b, br, cs.panel, order);
}

Complex chain_tensor(const ChainSetup& cs, const ChainTerm& term, const ChainIntegrand& G, int order,
                     std::size_t& evals) {
  const int n = cs.n, k = cs.k;
  std::vector<double> y((k + 1) * n), x((k + 1) * n), py0(n);
  std::vector<CMatrix> P(k + 1);
  CMatrix K, last;
  Complex total = 0.0;
  bool identity_nu = is_identity(term.nu);

  std::function<void(int, double)> level = [&](int i, double wprev) {
    std::vector<double> lo(n), hi(n);
    for (int j = 0; j < n; ++j) {
      if (i == 0) {
        lo[j] = cs.c[j] - cs.r;
        hi[j] = cs.c[j] + cs.r;
      } else {
        lo[j] = std::max(y[(i - 1) * n + j] - cs.L[i - 1], py0[j] - cs.tail[i]);
        hi[j] = std::min(y[(i - 1) * n + j] + cs.L[i - 1], py0[j] + cs.tail[i]);
        if (!(hi[j] > lo[j])) return;
      }
    }
    std::vector<Rule1D> rules(n);
    for (int j = 0; j < n; ++j) {
      rules[j] = chain_rule(cs, lo[j], hi[j], order);
      if (rules[j].nodes.empty()) return;
    }
    std::vector<std::size_t> idx(n, 0);
    while (true) {
      double w = wprev;
      double* yi = y.data() + i * n;
      for (int j = 0; j < n; ++j) {
        yi[j] = rules[j].nodes[idx[j]];
        w *= rules[j].weights[idx[j]];
      }
      bool inside = true;
      if (i == 0) {
        double d2 = 0;
        for (int j = 0; j < n; ++j) d2 += (yi[j] - cs.c[j]) * (yi[j] - cs.c[j]);
        inside = d2 < cs.r * cs.r;
        if (inside) cs.G->act(term.p, yi, py0.data());
      }
      if (inside) {
        if (identity_nu)
          std::copy(yi, yi + n, x.data() + i * n);
        else
          cs.G->act(term.nu, yi, x.data() + i * n);
        if (i > 0) {
          cs.A[i - 1]->eval(y.data() + (i - 1) * n, yi, K);
          P[i] = (i == 1) ? K : CMatrix(P[i - 1] * K);
        }
        if (i == k) {
          cs.A[k]->eval(yi, py0.data(), last);
          Complex g = G(x.data());
          ++evals;
          if (g != 0.0) {
            Complex tr = (k == 0) ? (last * term.S).trace() : (P[k] * last * term.S).trace();
            total += w * g * tr;
          }
        } else {
          level(i + 1, w);
        }
      }
      int j = 0;
      while (j < n) {
        if (++idx[j] < rules[j].nodes.size()) break;
        idx[j] = 0;
        ++j;
      }
      if (j == n) return;
    }
  };
  level(0, 1.0);
  return total;
}

// triangular change of variables: y_0 uniform on the box, y_i uniform on its window given y_{i-1}
ComplexStats chain_qmc(const ChainSetup& cs, const ChainTerm& term, const ChainIntegrand& G,
                       const PairingOptions& opt, std::size_t& evals) {
  const int n = cs.n, k = cs.k, dim = (k + 1) * n;
  std::mt19937_64 rng(opt.seed);
  ComplexStats st;
  std::vector<double> u(dim), y(dim), x(dim), py0(n);
  CMatrix K, P;
  for (int rep = 0; rep < opt.qmc_replicates; ++rep) {
    SobolStream sob(dim, rng);
    Complex s = 0.0;
    for (std::size_t m = 0; m < opt.qmc_samples; ++m) {
      sob.next(u);
      double jac = 1.0;
      bool ok = true;
      for (int i = 0; i <= k && ok; ++i)
        for (int j = 0; j < n; ++j) {
          double lo, hi;
          if (i == 0) {
            lo = cs.c[j] - cs.r;
            hi = cs.c[j] + cs.r;
          } else {
            if (i == 1 && j == 0) cs.G->act(term.p, y.data(), py0.data());
            lo = std::max(y[(i - 1) * n + j] - cs.L[i - 1], py0[j] - cs.tail[i]);
            hi = std::min(y[(i - 1) * n + j] + cs.L[i - 1], py0[j] + cs.tail[i]);
            if (!(hi > lo)) {
              ok = false;
              break;
            }
          }
          y[i * n + j] = lo + u[i * n + j] * (hi - lo);
          jac *= hi - lo;
        }
      if (!ok) continue;
      double d2 = 0;
      for (int j = 0; j < n; ++j) d2 += (y[j] - cs.c[j]) * (y[j] - cs.c[j]);
      if (d2 >= cs.r * cs.r) continue;
      if (k == 0) cs.G->act(term.p, y.data(), py0.data());
      for (int i = 0; i <= k; ++i) cs.G->act(term.nu, y.data() + i * n, x.data() + i * n);
      Complex g = G(x.data());
      ++evals;
      if (g == 0.0) continue;
      P = CMatrix::Identity(cs.size, cs.size);
      for (int i = 0; i < k; ++i) {
        cs.A[i]->eval(y.data() + i * n, y.data() + (i + 1) * n, K);
        P = P * K;
      }
      cs.A[k]->eval(y.data() + k * n, py0.data(), K);
      s += jac * g * (P * K * term.S).trace();
    }
    st.est.push_back(s / static_cast<double>(opt.qmc_samples));
  }
  return st;
}

ChainSetup make_chain_setup(const CrystallographicGroup& G, const std::vector<double>& c, double r,
                            const std::vector<EquivariantKernel>& A, const PairingOptions& opt) {
  ChainSetup cs;
  cs.G = &G;
  cs.n = G.dim();
  cs.k = static_cast<int>(A.size()) - 1;
  cs.size = A[0].size;
  cs.c = c;
  cs.r = r;
  for (const auto& K : A) {
    cs.A.push_back(&K);
    cs.L.push_back(kernel_reach(K, opt.reach_tol));
  }
  cs.tail.assign(cs.k + 2, 0.0);
  for (int i = cs.k; i >= 0; --i) cs.tail[i] = cs.tail[i + 1] + cs.L[i];
  cs.panel = default_panel(A, opt);
  return cs;
}

double displacement(const CrystallographicGroup& G, const GroupElement& g, const std::vector<double>& c) {
  std::vector<double> gc = G.act(g, c);
  double d2 = 0;
  for (std::size_t i = 0; i < c.size(); ++i) d2 += (gc[i] - c[i]) * (gc[i] - c[i]);
  return std::sqrt(d2);
}

PairingValue run_chain(const ChainSetup& cs, const std::vector<ChainTerm>& terms, const ChainIntegrand& G,
                       const PairingOptions& opt) {
  PairingValue out;
  out.radius = opt.trunc_radius;
  out.terms = terms.size();
  const int dim = (cs.k + 1) * cs.n;
  const bool tensor = dim <= opt.max_tensor_dim;
  out.method = tensor ? "nested-gauss-legendre" : "sobol-qmc";
  Complex total = 0.0, coarse = 0.0;
  double qmc_err2 = 0.0;
  for (const auto& term : terms) {
    if (tensor) {
      total += chain_tensor(cs, term, G, opt.order, out.evaluations);
      if (opt.error_estimate) coarse += chain_tensor(cs, term, G, std::max(2, opt.order - 2), out.evaluations);
    } else {
      auto st = chain_qmc(cs, term, G, opt, out.evaluations);
      total += st.mean();
      qmc_err2 += st.error() * st.error();
    }
  }
  const double sign = (cs.k % 2 == 0) ? 1.0 : -1.0;
  out.value = sign * total;
  out.error = tensor ? (opt.error_estimate ? std::abs(total - coarse) : 0.0) : std::sqrt(qmc_err2);
  if (opt.tail) out.tail_bound = tail_bound(*opt.tail, opt.trunc_radius);
  return out;
}

}  // namespace

PairingValue rho_ext(const ExtendedASCochain& F, const ConjugacyContext& ctx, const std::vector<EquivariantKernel>& A,
                     const PairingOptions& opt) {
  require_support(F, "rho_ext");
  const auto& G = ctx.group();
  check_kernels(A, G.dim());
  if (static_cast<int>(A.size()) != F.degree + 1) throw ASError("rho_ext: need degree + 1 kernels");
  ChainSetup cs = make_chain_setup(G, F.support.center, F.support.radius, A, opt);
  cs.kink_c = F.support.center;
  cs.kink_r = F.support.radius;
  const double reach = 2.0 * F.support.radius + cs.tail[0];
  const CMatrix Sg = fibre_action(opt, ctx.gamma(), cs.size);
  std::vector<ChainTerm> terms;
  for (const auto& p : ctx.conjugacy_class(opt.trunc_radius)) {
    if (displacement(G, p, cs.c) > reach) continue;
    ChainTerm t;
    t.p = p;
    if (!ctx.find_conjugator(p, &t.nu)) continue;
    t.S = fibre_action(opt, inverse(t.nu), cs.size) * Sg * fibre_action(opt, t.nu, cs.size);
    terms.push_back(t);
  }
  const int pts = F.degree + 1, n = G.dim();
  // the integrand is handed nu y; F takes (nu, x)
  PairingValue total;
  total.radius = opt.trunc_radius;
  for (const auto& t : terms) {
    GroupElement nu = t.nu;
    ChainIntegrand g = [&F, nu, pts, n](const double* x) { return F.eval(nu, PointTuple(x, pts * n)); };
    PairingValue v = run_chain(cs, {t}, g, opt);
    total.value += v.value;
    total.error += v.error;
    total.evaluations += v.evaluations;
    total.method = v.method;
  }
  total.terms = terms.size();
  if (opt.tail) total.tail_bound = tail_bound(*opt.tail, opt.trunc_radius);
  return total;
}

PairingValue rho_inv(const InvariantASCochain& f, const ConjugacyContext& ctx, const BumpCutoff& chi,
                     const std::vector<EquivariantKernel>& A, const PairingOptions& opt) {
  const auto& G = ctx.group();
  check_kernels(A, G.dim());
  if (static_cast<int>(A.size()) != f.degree + 1) throw ASError("rho_inv: need degree + 1 kernels");
  ChainSetup cs = make_chain_setup(G, chi.center(), chi.radius(), A, opt);
  cs.kink_c = chi.center();
  cs.kink_r = chi.radius();
  const double reach = 2.0 * chi.radius() + cs.tail[0];
  std::vector<ChainTerm> terms;
  for (const auto& p : ctx.conjugacy_class(opt.trunc_radius)) {
    if (displacement(G, p, cs.c) > reach) continue;
    terms.push_back({p, G.identity(), fibre_action(opt, p, cs.size)});
  }
  const int pts = f.degree + 1, n = G.dim();
  ChainIntegrand g = [&f, &chi, pts, n](const double* x) {
    double w = chi.value(x);
    return w == 0.0 ? Complex(0.0) : w * f.eval(PointTuple(x, pts * n));
  };
  return run_chain(cs, terms, g, opt);
}

// ---------------------------------------------------------------- slot engine
//
// sum_e coef_e ∫_{B^{k+1}} prod chi(u_i) tr[A_0(u_0, g_0 u_1) S_0 ... A_k(u_k, g_k u_0) S_k]

namespace {

struct SlotEntry {
  Complex coef;
  std::vector<GroupElement> g;
  std::vector<CMatrix> S;  // empty: identity
};

struct SlotNodes {
  std::vector<double> u;  // Q x n
  std::vector<double> w;  // weight times chi(u)
  std::size_t count() const { return w.size(); }
};

SlotNodes slot_nodes(const BumpCutoff& chi, double panel, int order) {
  const auto& G = chi.group();
  const int n = G.dim();
  const double r = chi.radius();
  const auto& c = chi.center();
  std::vector<Rule1D> rules(n);
  for (int j = 0; j < n; ++j) {
    std::vector<double> br;
    if (n == 1) br = kinks_1d(G, c, r, c[0] - r, c[0] + r);
    rules[j] = panel_rule(c[j] - r, c[j] + r, br, panel, order);
  }
  SlotNodes out;
  std::vector<std::size_t> idx(n, 0);
  std::vector<double> x(n);
  while (true) {
    double w = 1.0;
    for (int j = 0; j < n; ++j) {
      x[j] = rules[j].nodes[idx[j]];
      w *= rules[j].weights[idx[j]];
    }
    double v = chi.value(x.data());
    if (v != 0.0) {
      out.u.insert(out.u.end(), x.begin(), x.end());
      out.w.push_back(w * v);
    }
    int j = 0;
    while (j < n) {
      if (++idx[j] < rules[j].nodes.size()) break;
      idx[j] = 0;
      ++j;
    }
    if (j == n) break;
  }
  return out;
}

// per slot: distinct (g, S) pairs
struct SlotKeys {
  std::vector<std::vector<std::pair<GroupElement, int>>> keys;  // slot -> (g, S index)
  std::vector<std::vector<CMatrix>> S;                          // slot -> distinct S
  std::vector<std::vector<int>> entry_key;                      // entry -> key per slot
};

SlotKeys index_slots(const std::vector<SlotEntry>& entries, int k) {
  SlotKeys sk;
  sk.keys.resize(k + 1);
  sk.S.resize(k + 1);
  std::vector<std::unordered_map<GroupElement, std::vector<int>, GroupElementHash>> lookup(k + 1);
  for (const auto& e : entries) {
    std::vector<int> key(k + 1);
    for (int i = 0; i <= k; ++i) {
      int s_idx = -1;
      if (!e.S.empty()) {
        for (std::size_t m = 0; m < sk.S[i].size(); ++m)
          if (sk.S[i][m] == e.S[i]) s_idx = static_cast<int>(m);
        if (s_idx < 0) {
          sk.S[i].push_back(e.S[i]);
          s_idx = static_cast<int>(sk.S[i].size()) - 1;
        }
      }
      int found = -1;
      for (int id : lookup[i][e.g[i]])
        if (sk.keys[i][id].second == s_idx) found = id;
      if (found < 0) {
        found = static_cast<int>(sk.keys[i].size());
        sk.keys[i].emplace_back(e.g[i], s_idx);
        lookup[i][e.g[i]].push_back(found);
      }
      key[i] = found;
    }
    sk.entry_key.push_back(key);
  }
  return sk;
}

Complex slot_diagonal(const std::vector<SlotEntry>& entries, const SlotNodes& nd, const EquivariantKernel& A,
                      const CrystallographicGroup& G, std::size_t& evals) {
  const int n = G.dim();
  Complex total = 0.0;
  CMatrix K;
  std::vector<double> gu(n);
  for (const auto& e : entries) {
    Complex s = 0.0;
    for (std::size_t a = 0; a < nd.count(); ++a) {
      const double* u = nd.u.data() + a * n;
      G.act(e.g[0], u, gu.data());
      A.eval(u, gu.data(), K);
      ++evals;
      s += nd.w[a] * (e.S.empty() ? K.trace() : (K * e.S[0]).trace());
    }
    total += e.coef * s;
  }
  return total;
}

Complex slot_matrix(const std::vector<SlotEntry>& entries, const SlotNodes& nd, const std::vector<EquivariantKernel>& A,
                    const CrystallographicGroup& G, int k, std::size_t& evals) {
  const int n = G.dim(), s = A[0].size;
  const int Q = static_cast<int>(nd.count()), D = Q * s;
  SlotKeys sk = index_slots(entries, k);
  std::vector<std::vector<CMatrix>> M(k + 1);
  std::vector<std::vector<bool>> built(k + 1);
  for (int i = 0; i <= k; ++i) {
    M[i].resize(sk.keys[i].size());
    built[i].assign(sk.keys[i].size(), false);
  }
  CMatrix K;
  std::vector<double> gu(Q * n);
  auto matrix = [&](int i, int id) -> const CMatrix& {
    if (built[i][id]) return M[i][id];
    const auto& [g, s_idx] = sk.keys[i][id];
    for (int b = 0; b < Q; ++b) G.act(g, nd.u.data() + b * n, gu.data() + b * n);
    CMatrix& out = M[i][id];
    out.resize(D, D);
    for (int a = 0; a < Q; ++a)
      for (int b = 0; b < Q; ++b) {
        A[i].eval(nd.u.data() + a * n, gu.data() + b * n, K);
        ++evals;
        out.block(a * s, b * s, s, s) = nd.w[a] * (s_idx < 0 ? K : CMatrix(K * sk.S[i][s_idx]));
      }
    built[i][id] = true;
    return out;
  };
  std::vector<std::size_t> order(entries.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return sk.entry_key[a] < sk.entry_key[b]; });
  std::vector<CMatrix> prefix(k);
  std::vector<int> prev;
  Complex total = 0.0;
  for (std::size_t e : order) {
    const auto& key = sk.entry_key[e];
    int from = 0;
    if (!prev.empty())
      while (from < k && key[from] == prev[from]) ++from;
    for (int i = from; i < k; ++i) prefix[i] = (i == 0) ? matrix(0, key[0]) : CMatrix(prefix[i - 1] * matrix(i, key[i]));
    prev = key;
    const CMatrix& last = matrix(k, key[k]);
    Complex tr = (prefix[k - 1].cwiseProduct(last.transpose())).sum();
    total += entries[e].coef * tr;
  }
  return total;
}

ComplexStats slot_qmc(const std::vector<SlotEntry>& entries, const BumpCutoff& chi,
                      const std::vector<EquivariantKernel>& A, int k, const PairingOptions& opt, std::size_t& evals) {
  const auto& G = chi.group();
  const int n = G.dim(), dim = (k + 1) * n;
  const double r = chi.radius();
  const auto& c = chi.center();
  SlotKeys sk = index_slots(entries, k);
  std::mt19937_64 rng(opt.seed);
  double vol = std::pow(2.0 * r, dim);
  std::vector<double> u(dim), x(dim), gu(n), chiv(k + 1);
  std::vector<std::vector<CMatrix>> Kc(k + 1);
  std::vector<std::vector<bool>> have(k + 1);
  for (int i = 0; i <= k; ++i) Kc[i].resize(sk.keys[i].size());
  ComplexStats st;
  CMatrix K, P;
  for (int rep = 0; rep < opt.qmc_replicates; ++rep) {
    SobolStream sob(dim, rng);
    Complex s = 0.0;
    for (std::size_t m = 0; m < opt.qmc_samples; ++m) {
      sob.next(u);
      double w = vol;
      for (int i = 0; i <= k && w != 0.0; ++i) {
        for (int j = 0; j < n; ++j) x[i * n + j] = c[j] - r + 2.0 * r * u[i * n + j];
        w *= chi.value(x.data() + i * n);
      }
      if (w == 0.0) continue;
      for (int i = 0; i <= k; ++i) have[i].assign(sk.keys[i].size(), false);
      auto kern = [&](int i, int id) -> const CMatrix& {
        if (!have[i][id]) {
          const auto& [g, s_idx] = sk.keys[i][id];
          G.act(g, x.data() + ((i + 1) % (k + 1)) * n, gu.data());
          A[i].eval(x.data() + i * n, gu.data(), K);
          ++evals;
          Kc[i][id] = s_idx < 0 ? K : CMatrix(K * sk.S[i][s_idx]);
          have[i][id] = true;
        }
        return Kc[i][id];
      };
      Complex acc = 0.0;
      for (std::size_t e = 0; e < entries.size(); ++e) {
        const auto& key = sk.entry_key[e];
        P = kern(0, key[0]);
        for (int i = 1; i <= k; ++i) P = P * kern(i, key[i]);
        acc += entries[e].coef * P.trace();
      }
      s += w * acc;
    }
    st.est.push_back(s / static_cast<double>(opt.qmc_samples));
  }
  return st;
}

PairingValue run_slots(const std::vector<SlotEntry>& entries, const BumpCutoff& chi,
                       const std::vector<EquivariantKernel>& A, const PairingOptions& opt, double sign) {
  PairingValue out;
  out.radius = opt.trunc_radius;
  out.terms = entries.size();
  out.antisymmetrized = opt.antisymmetrize;
  const int k = static_cast<int>(A.size()) - 1;
  const auto& G = chi.group();
  const double panel = default_panel(A, opt);
  if (entries.empty()) {
    out.method = "empty";
  } else {
    SlotNodes nd = slot_nodes(chi, panel, opt.order);
    const bool tensor_ok = nd.count() * A[0].size <= opt.max_matrix;
    if (k == 0 || tensor_ok) {
      auto pass = [&](const SlotNodes& s) {
        return k == 0 ? slot_diagonal(entries, s, A[0], G, out.evaluations)
                      : slot_matrix(entries, s, A, G, k, out.evaluations);
      };
      Complex v = pass(nd);
      out.value = v;
      if (opt.error_estimate) out.error = std::abs(v - pass(slot_nodes(chi, panel, std::max(2, opt.order - 2))));
      out.method = k == 0 ? "diagonal-gauss-legendre" : "node-matrix-trace";
    } else {
      auto st = slot_qmc(entries, chi, A, k, opt, out.evaluations);
      out.value = st.mean();
      out.error = st.error();
      out.method = "sobol-qmc";
    }
  }
  out.value *= sign;
  if (opt.tail) out.tail_bound = tail_bound(*opt.tail, opt.trunc_radius);
  return out;
}

// slot sets: g with |g c - c| < 2r + L_i
std::vector<std::vector<GroupElement>> slot_sets(const BumpCutoff& chi, const std::vector<EquivariantKernel>& A,
                                                 const PairingOptions& opt) {
  std::vector<std::vector<GroupElement>> out(A.size());
  const auto& c = chi.center();
  for (std::size_t i = 0; i < A.size(); ++i)
    chi.group().elements_near(c.data(), c.data(), 2.0 * chi.radius() + kernel_reach(A[i], opt.reach_tol), out[i]);
  return out;
}

int length_or_max(const CrystallographicGroup& G, const GroupElement& g) {
  return G.has_length(g) ? G.word_length(g) : std::numeric_limits<int>::max() / 4;
}

int permutation_sign(const std::vector<int>& p) {
  int s = 1;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j)
      if (p[i] > p[j]) s = -s;
  return s;
}

}  // namespace

PairingValue phi_pairing(const CyclicCochain& phi, const ConjugacyContext& ctx, const BumpCutoff& chi,
                         const std::vector<EquivariantKernel>& A, const PairingOptions& opt) {
  const auto& G = ctx.group();
  check_kernels(A, G.dim());
  const int k = static_cast<int>(A.size()) - 1;
  if (phi.degree != k) throw ASError("phi_pairing: need degree + 1 kernels");
  auto sets = slot_sets(chi, A, opt);
  std::vector<SlotEntry> entries;
  std::vector<GroupElement> g(k + 1);
  std::vector<std::size_t> idx(k + 1, 0);
  for (const auto& s : sets)
    if (s.empty()) return run_slots({}, chi, A, opt, 1.0);
  while (true) {
    int len = 0;
    for (int i = 0; i <= k; ++i) {
      g[i] = sets[i][idx[i]];
      len += length_or_max(G, g[i]);
    }
    if (len <= opt.trunc_radius) {
      Complex v = phi.eval(g);
      if (v != 0.0) {
        SlotEntry e{v, g, {}};
        if (opt.action)
          for (int i = 0; i <= k; ++i) e.S.push_back(fibre_action(opt, g[i], A[0].size));
        entries.push_back(std::move(e));
      }
    }
    int i = 0;
    while (i <= k) {
      if (++idx[i] < sets[i].size()) break;
      idx[i] = 0;
      ++i;
    }
    if (i > k) break;
  }
  return run_slots(entries, chi, A, opt, 1.0);
}

PairingValue rho_psi_tuples(const GroupCochain& c, const ConjugacyContext& ctx, const BumpCutoff& chi,
                            const std::vector<EquivariantKernel>& A, const PairingOptions& opt) {
  const auto& G = ctx.group();
  check_kernels(A, G.dim());
  const int k = static_cast<int>(A.size()) - 1;
  if (c.degree != k) throw ASError("rho_psi_tuples: need degree + 1 kernels");
  auto sets = slot_sets(chi, A, opt);
  std::vector<std::unordered_map<GroupElement, int, GroupElementHash>> allowed(k + 1);
  for (int i = 0; i <= k; ++i)
    for (const auto& g : sets[i]) allowed[i][g] = length_or_max(G, g);
  const int size = A[0].size;
  const GroupElement gamma = ctx.gamma();

  std::vector<int> perm(k + 1);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<int>> perms;
  if (opt.antisymmetrize) {
    do perms.push_back(perm);
    while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    perms.push_back(perm);
  }
  double fact = 1;
  for (int i = 2; i <= k + 1; ++i) fact *= i;
  const double pweight = opt.antisymmetrize ? 1.0 / fact : 1.0;

  std::vector<SlotEntry> entries;
  // slots from a tuple J: g_i = J_i^{-1} J_{i+1}, g_k = J_k^{-1} gamma J_0
  auto add_entry = [&](const std::vector<GroupElement>& J, Complex coef) {
    SlotEntry e;
    e.coef = coef;
    e.g.resize(k + 1);
    for (int i = 0; i <= k; ++i) {
      e.g[i] = i < k ? compose(inverse(J[i]), J[i + 1]) : compose(inverse(J[k]), compose(gamma, J[0]));
      if (!allowed[i].count(e.g[i])) return;
    }
    if (opt.action) {
      for (int i = 0; i <= k; ++i) {
        CMatrix right = i < k ? fibre_action(opt, J[i + 1], size)
                              : CMatrix(fibre_action(opt, gamma, size) * fibre_action(opt, J[0], size));
        e.S.push_back(fibre_action(opt, inverse(J[i]), size) * right);
      }
    }
    entries.push_back(std::move(e));
  };

  std::vector<GroupElement> I(k + 1), J(k + 1);
  for (const auto& p : ctx.conjugacy_class(opt.trunc_radius)) {
    GroupElement g0;
    if (!ctx.find_conjugator(p, &g0)) continue;
    if (ctx.group_cutoff(g0) != 1.0) continue;
    I[0] = g0;
    // increments g_0..g_{k-1}; the closing slot is determined by p
    std::function<void(int, int, const GroupElement&)> rec = [&](int i, int used, const GroupElement& prod) {
      if (i == k) {
        GroupElement last = compose(inverse(prod), p);
        auto it = allowed[k].find(last);
        if (it == allowed[k].end() || used + it->second > opt.trunc_radius) return;
        Complex v = c.eval(I);
        if (v == 0.0) return;
        for (const auto& pm : perms) {
          for (int j = 0; j <= k; ++j) J[j] = I[pm[j]];
          add_entry(J, v * (pweight * permutation_sign(pm)));
        }
        return;
      }
      for (const auto& [g, len] : allowed[i]) {
        if (used + len > opt.trunc_radius) continue;
        I[i + 1] = compose(I[i], g);
        rec(i + 1, used + len, compose(prod, g));
      }
    };
    rec(0, 0, G.identity());
  }
  // deterministic entry order
  std::sort(entries.begin(), entries.end(), [](const SlotEntry& a, const SlotEntry& b) {
    return std::lexicographical_compare(a.g.begin(), a.g.end(), b.g.begin(), b.g.end(), canonical_less);
  });
  return run_slots(entries, chi, A, opt, (k % 2 == 0) ? 1.0 : -1.0);
}

// ---------------------------------------------------------------- tails

double tail_bound(const TailConstants& tc, int N) {
  const int k = tc.degree;
  double Cg = tc.C, Kg = tc.K;
  if (k >= 1) {
    double kf = 1;
    for (int i = 2; i <= k; ++i) kf *= i;
    Cg = std::pow(tc.C, k + 1) * std::pow(static_cast<double>(k), k) / kf;
    Kg = tc.K + 1.0;
  }
  const double q = Kg + tc.K_c - tc.rate * tc.tau;
  if (q >= 0) return std::numeric_limits<double>::infinity();
  const double pre = std::pow(tc.volume, k + 1) * tc.A_c * tc.kernel_factor * Cg;
  // exponents combined to stay finite when each factor alone would overflow
  const double log_bound = std::log(pre) + tc.rate * (k + 1) * tc.kappa + q * (N + 1) - std::log1p(-std::exp(q));
  return std::exp(log_bound);
}

TailConstants tail_constants(const ConjugacyContext& ctx, const BumpCutoff& chi,
                             const std::vector<EquivariantKernel>& A, double A_c, double K_c, int ms_radius,
                             double ms_step) {
  const auto& G = ctx.group();
  TailConstants tc;
  tc.degree = static_cast<int>(A.size()) - 1;
  tc.kernel_factor = A.empty() ? 1.0 : A[0].size;
  tc.rate = std::numeric_limits<double>::infinity();
  for (const auto& K : A) {
    tc.kernel_factor *= K.cert.alpha * std::pow(K.t, -K.cert.beta);
    tc.rate = std::min(tc.rate, K.cert.eta / std::sqrt(K.t));
  }
  Box F;
  for (int i = 0; i < G.dim(); ++i) {
    F.lo.push_back(chi.center()[i] - chi.radius());
    F.hi.push_back(chi.center()[i] + chi.radius());
  }
  const int msr = std::min(ms_radius, G.ball_radius());
  // the scan is the expensive part and depends only on the group and the box
  static std::mutex mu;
  static std::map<std::pair<std::string, std::vector<double>>, MilnorSvarc> cache;
  std::pair<std::string, std::vector<double>> key{G.name(), {static_cast<double>(msr), ms_step}};
  key.second.insert(key.second.end(), F.lo.begin(), F.lo.end());
  key.second.insert(key.second.end(), F.hi.begin(), F.hi.end());
  MilnorSvarc ms;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) {
      ms = it->second;
    } else {
      ms = milnor_svarc_constants(G, F, msr, ms_step);
      cache.emplace(key, ms);
    }
  }
  tc.tau = ms.tau;
  tc.kappa = ms.kappa;
  auto gf = fit_growth(G);
  tc.C = gf.C;
  tc.K = gf.K;
  tc.A_c = A_c;
  tc.K_c = K_c;
  tc.volume = std::pow(2.0 * chi.radius(), G.dim());
  return tc;
}

// ---------------------------------------------------------------- localization

namespace {

std::vector<Mask> subsets_of_size(int a, int k) {
  std::vector<Mask> out;
  for (Mask m = 0; m < (1u << a); ++m)
    if (mask_degree(m) == k) out.push_back(m);
  return out;
}

std::vector<int> mask_indices(Mask m) {
  std::vector<int> out;
  for (int j = 0; j < 32; ++j)
    if (m & (1u << j)) out.push_back(j);
  return out;
}

double determinant(std::vector<double> M, int k) {
  if (k == 0) return 1.0;
  Eigen::MatrixXd E(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) E(i, j) = M[i * k + j];
  return E.determinant();
}

}  // namespace

ExteriorElement lambda_fixed(const InvariantASCochain& f, const FixedComponent& comp, const std::vector<double>& x,
                             double h) {
  const int n = f.n, k = f.degree, a = comp.a;
  if (static_cast<int>(x.size()) != n) throw ASError("lambda_fixed: point has the wrong dimension");
  if (!on_component(comp, x.data(), 1e-9)) throw ASError("lambda_fixed: point is not on the fixed set");
  ExteriorElement out(a, 1);
  if (k > a) return out;
  if (k == 0) return ExteriorElement::scalar(a, f.eval(x));
  if (h <= 0) h = 2e-3;
  std::vector<int> perm(k);
  std::vector<double> X((k + 1) * n);
  for (Mask m : subsets_of_size(a, k)) {
    auto I = mask_indices(m);
    auto mixed = [&](double step) {
      Complex total = 0.0;
      std::iota(perm.begin(), perm.end(), 0);
      do {
        const double sg = permutation_sign(perm);
        Complex d = 0.0;
        for (int s = 0; s < (1 << k); ++s) {
          double sign = 1.0;
          std::copy(x.begin(), x.end(), X.begin());
          for (int i = 0; i < k; ++i) {
            double e = (s >> i & 1) ? -step : step;
            if (s >> i & 1) sign = -sign;
            int col = I[perm[i]];
            for (int r = 0; r < n; ++r) X[(i + 1) * n + r] = x[r] + e * comp.tangent[r * a + col];
          }
          d += sign * f.eval(X);
        }
        total += sg * d / std::pow(2.0 * step, k);
      } while (std::next_permutation(perm.begin(), perm.end()));
      return total;
    };
    Complex coarse = mixed(h), fine = mixed(0.5 * h);
    out += ExteriorElement::basis(a, m, (4.0 * fine - coarse) / 3.0);
  }
  return out;
}

ExteriorElement psi_gamma(const GroupCochain& c, const BumpCutoff& chi, const FixedComponent& comp,
                          const std::vector<double>& x) {
  const int n = chi.dim(), k = c.degree, a = comp.a;
  if (static_cast<int>(x.size()) != n) throw ASError("psi_gamma: point has the wrong dimension");
  if (!on_component(comp, x.data(), 1e-9)) throw ASError("psi_gamma: point is not on the fixed set");
  ExteriorElement out(a, 1);
  if (k > a) return out;
  TermList terms;
  chi.terms(x.data(), terms);
  // tangential derivatives of chi(g^{-1} x) for every supporting g
  std::vector<std::vector<double>> dchi(terms.size(), std::vector<double>(a, 0.0));
  std::vector<double> grad(n);
  for (std::size_t m = 0; m < terms.size(); ++m) {
    chi.translate_gradient(terms[m].first, x.data(), grad.data());
    for (int j = 0; j < a; ++j)
      for (int r = 0; r < n; ++r) dchi[m][j] += grad[r] * comp.tangent[r * a + j];
  }
  const auto masks = subsets_of_size(a, k);
  std::vector<Complex> coeff(masks.size(), 0.0);
  std::vector<std::size_t> idx(k + 1, 0);
  std::vector<GroupElement> tuple(k + 1);
  if (terms.empty()) return out;
  while (true) {
    for (int i = 0; i <= k; ++i) tuple[i] = terms[idx[i]].first;
    Complex v = c.eval(tuple);
    if (v != 0.0) {
      v *= terms[idx[0]].second;
      for (std::size_t mi = 0; mi < masks.size(); ++mi) {
        auto I = mask_indices(masks[mi]);
        std::vector<double> M(k * k);
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < k; ++j) M[i * k + j] = dchi[idx[i + 1]][I[j]];
        coeff[mi] += v * determinant(M, k);
      }
    }
    int i = 0;
    while (i <= k) {
      if (++idx[i] < terms.size()) break;
      idx[i] = 0;
      ++i;
    }
    if (i > k) break;
  }
  for (std::size_t mi = 0; mi < masks.size(); ++mi) out += ExteriorElement::basis(a, masks[mi], coeff[mi]);
  return out;
}

}  // namespace lef
