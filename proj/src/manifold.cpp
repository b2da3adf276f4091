#include "lefschetz/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <random>

#include <Eigen/Dense>
#include <boost/math/special_functions/legendre.hpp>
#include <boost/random/sobol.hpp>

namespace lef {

BumpProfile parse_profile(const std::string& name) {
  if (name == "poly" || name == "polynomial") return BumpProfile::Poly;
  if (name == "smooth" || name == "exp") return BumpProfile::Smooth;
  throw ManifoldError("unknown bump profile '" + name + "'");
}

std::string profile_name(BumpProfile p) { return p == BumpProfile::Poly ? "poly" : "smooth"; }

double profile_value(BumpProfile p, double s) {
  if (s >= 1.0) return 0.0;
  double u = 1.0 - s * s;
  if (p == BumpProfile::Poly) return u * u * u;
  return std::exp(1.0 - 1.0 / u);
}

double profile_derivative(BumpProfile p, double s) {
  if (s >= 1.0) return 0.0;
  double u = 1.0 - s * s;
  if (p == BumpProfile::Poly) return -6.0 * s * u * u;
  return std::exp(1.0 - 1.0 / u) * (-2.0 * s / (u * u));
}

BumpCutoff::BumpCutoff(std::shared_ptr<const CrystallographicGroup> G, double support_radius, BumpProfile profile,
                       std::vector<double> center)
    : G_(std::move(G)), r_(support_radius), profile_(profile), c_(std::move(center)) {
  if (!(r_ > 0)) throw ManifoldError("support radius must be positive");
  const int n = G_->dim();
  if (c_.empty()) {
    // a point off every mirror and rotation center of the catalog groups, in lattice coordinates
    static const double generic[kMaxDim] = {0.25, 0.1, 0.05};
    Box cell = G_->unit_cell();
    for (int i = 0; i < n; ++i) c_.push_back(cell.lo[i] + generic[i] * (cell.hi[i] - cell.lo[i]));
  }
  if (static_cast<int>(c_.size()) != n) throw ManifoldError("bump center has wrong dimension");
  if (covering_margin(n == 1 ? 400 : (n == 2 ? 60 : 16)) <= 1e-12)
    throw ManifoldError("bump does not cover fundamental domain");
}

double BumpCutoff::seed(const double* y) const {
  double d2 = 0;
  for (int i = 0; i < dim(); ++i) d2 += (y[i] - c_[i]) * (y[i] - c_[i]);
  return profile_value(profile_, std::sqrt(d2) / r_);
}

namespace {

struct Orbit {
  double phi;
  double dphi[kMaxDim];
};

// phi(g^{-1} x) = profile(|x - g c| / r) and its x-gradient
Orbit orbit_term(const CrystallographicGroup& G, BumpProfile p, double r, const std::vector<double>& c,
                 const GroupElement& g, const double* x, bool want_grad) {
  double gc[kMaxDim];
  G.act(g, c.data(), gc);
  double d2 = 0;
  for (int i = 0; i < G.dim(); ++i) d2 += (x[i] - gc[i]) * (x[i] - gc[i]);
  double d = std::sqrt(d2);
  Orbit o{};
  o.phi = profile_value(p, d / r);
  if (want_grad && d > 0 && d < r) {
    double f = profile_derivative(p, d / r) / (r * d);
    for (int i = 0; i < G.dim(); ++i) o.dphi[i] = f * (x[i] - gc[i]);
  }
  return o;
}

}  // namespace

void BumpCutoff::support_elements(const double* x, std::vector<GroupElement>& out) const {
  G_->elements_near(x, c_.data(), r_, out);
}

double BumpCutoff::denominator(const double* x) const {
  thread_local std::vector<GroupElement> near;
  support_elements(x, near);
  double s = 0;
  for (const auto& g : near) s += orbit_term(*G_, profile_, r_, c_, g, x, false).phi;
  return s;
}

double BumpCutoff::translate(const GroupElement& g, const double* x) const {
  double phi = orbit_term(*G_, profile_, r_, c_, g, x, false).phi;
  if (phi == 0.0) return 0.0;
  return phi / denominator(x);
}

double BumpCutoff::value(const double* x) const { return translate(G_->identity(), x); }

void BumpCutoff::translate_gradient(const GroupElement& g, const double* x, double* grad) const {
  const int n = dim();
  Orbit o = orbit_term(*G_, profile_, r_, c_, g, x, true);
  for (int i = 0; i < n; ++i) grad[i] = 0.0;
  if (o.phi == 0.0) return;
  std::vector<GroupElement> near;
  support_elements(x, near);
  double S = 0, dS[kMaxDim] = {0, 0, 0};
  for (const auto& h : near) {
    Orbit q = orbit_term(*G_, profile_, r_, c_, h, x, true);
    S += q.phi;
    for (int i = 0; i < n; ++i) dS[i] += q.dphi[i];
  }
  for (int i = 0; i < n; ++i) grad[i] = o.dphi[i] / S - o.phi * dS[i] / (S * S);
}

void BumpCutoff::gradient(const double* x, double* grad) const { translate_gradient(G_->identity(), x, grad); }

void BumpCutoff::terms(const double* x, std::vector<std::pair<GroupElement, double>>& out) const {
  out.clear();
  thread_local std::vector<GroupElement> near;
  support_elements(x, near);
  double S = 0;
  for (const auto& g : near) {
    double phi = orbit_term(*G_, profile_, r_, c_, g, x, false).phi;
    if (phi > 0) {
      out.emplace_back(g, phi);
      S += phi;
    }
  }
  for (auto& [g, v] : out) v /= S;
}

double BumpCutoff::partition_residual(const double* x) const {
  std::vector<std::pair<GroupElement, double>> t;
  terms(x, t);
  NeumaierSum s;
  for (const auto& p : t) s.add(p.second);
  return std::fabs(s.value() - 1.0);
}

double BumpCutoff::covering_margin(int per_axis) const {
  const int n = dim();
  Box cell = G_->unit_cell();
  double worst = std::numeric_limits<double>::infinity();
  std::vector<int> idx(n, 0);
  double x[kMaxDim];
  while (true) {
    for (int i = 0; i < n; ++i) x[i] = cell.lo[i] + (cell.hi[i] - cell.lo[i]) * idx[i] / per_axis;
    worst = std::min(worst, denominator(x));
    int i = 0;
    while (i < n) {
      if (++idx[i] <= per_axis) break;
      idx[i] = 0;
      ++i;
    }
    if (i == n) break;
  }
  return worst;
}

// ---------------------------------------------------------------- fixed sets

namespace {

std::optional<FixedComponent> solve_fixed(const CrystallographicGroup& G, const GroupElement& g) {
  const int n = G.dim();
  auto L = G.cartesian_linear(g);
  auto v = G.cartesian_translation(g);
  Eigen::MatrixXd M(n, n), A(n, n);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      A(i, j) = L[i * kMaxDim + j];
      M(i, j) = A(i, j) - (i == j ? 1.0 : 0.0);
    }
    rhs(i) = -v[i];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::VectorXd p = svd.solve(rhs);
  if ((M * p - rhs).norm() > 1e-9) return std::nullopt;
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < n; ++i)
    if (sv(i) > 1e-9) ++rank;
  FixedComponent c;
  c.a = n - rank;
  c.point.assign(p.data(), p.data() + n);
  const Eigen::MatrixXd& V = svd.matrixV();
  // columns rank..n-1 span ker(M): tangent; columns 0..rank-1: normal
  c.tangent.assign(n * c.a, 0.0);
  c.normal.assign(n * rank, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < c.a; ++j) c.tangent[i * c.a + j] = V(i, rank + j);
    for (int j = 0; j < rank; ++j) c.normal[i * rank + j] = V(i, j);
  }
  Eigen::MatrixXd N = V.leftCols(rank);
  Eigen::MatrixXd GN = N.transpose() * A * N;
  c.normal_action.assign(GN.data(), GN.data() + rank * rank);
  // row major copy
  for (int i = 0; i < rank; ++i)
    for (int j = 0; j < rank; ++j) c.normal_action[i * rank + j] = GN(i, j);
  if (rank > 0) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(GN);
    std::vector<double> positive, minus_one;
    for (int i = 0; i < rank; ++i) {
      std::complex<double> lam = es.eigenvalues()(i);
      double th = std::arg(lam);
      if (std::fabs(std::fabs(th) - M_PI) < 1e-9)
        minus_one.push_back(M_PI);
      else if (th > 0)
        positive.push_back(th);
    }
    std::sort(positive.begin(), positive.end());
    c.angles = positive;
    c.angles.insert(c.angles.end(), minus_one.begin(), minus_one.end());
  }
  return c;
}

}  // namespace

FixedPointSet fixed_point_components(const CrystallographicGroup& G, const GroupElement& gamma) {
  if (element_order(gamma, 64) == 0) throw ManifoldError("gamma is not a torsion element");
  FixedPointSet fps;
  fps.n = G.dim();
  if (auto c = solve_fixed(G, gamma)) fps.components.push_back(*c);
  return fps;
}

bool on_component(const FixedComponent& c, const double* x, double tol) {
  const int n = static_cast<int>(c.point.size());
  const int k = n - c.a;
  for (int j = 0; j < k; ++j) {
    double s = 0;
    for (int i = 0; i < n; ++i) s += c.normal[i * k + j] * (x[i] - c.point[i]);
    if (std::fabs(s) > tol) return false;
  }
  return true;
}

std::vector<std::pair<GroupElement, FixedComponent>> conjugate_fixed_sets(const ConjugacyContext& ctx,
                                                                          const Box& window, int max_len) {
  const auto& G = ctx.group();
  std::vector<std::pair<GroupElement, FixedComponent>> out;
  for (const auto& p : ctx.conjugacy_class(max_len)) {
    auto c = solve_fixed(G, p);
    if (!c) continue;
    // a point component meets the window iff its point does; higher components: closest point to window center
    std::vector<double> mid(G.dim());
    for (int i = 0; i < G.dim(); ++i) mid[i] = 0.5 * (window.lo[i] + window.hi[i]);
    std::vector<double> q = c->point;
    for (int j = 0; j < c->a; ++j) {
      double s = 0;
      for (int i = 0; i < G.dim(); ++i) s += c->tangent[i * c->a + j] * (mid[i] - c->point[i]);
      for (int i = 0; i < G.dim(); ++i) q[i] += s * c->tangent[i * c->a + j];
    }
    bool inside = true;
    for (int i = 0; i < G.dim(); ++i) inside = inside && q[i] >= window.lo[i] - 1e-12 && q[i] <= window.hi[i] + 1e-12;
    if (inside) out.emplace_back(p, *c);
  }
  return out;
}

FixedSetCutoff::FixedSetCutoff(const FixedPointSet& fps, const ConjugacyContext& ctx, const BumpCutoff& chi)
    : ctx_(&ctx), chi_(&chi), fps_(fps) {
  if (fps_.empty()) throw ManifoldError("fixed set is empty");
  const int n = fps_.n;
  for (const auto& comp : fps_.components) {
    Box w;
    if (comp.a == 0) {
      windows_.push_back(w);
      continue;
    }
    // scan each tangent direction for the extent of the support
    double diam = 0;
    Box cell = chi.group().unit_cell();
    for (int i = 0; i < n; ++i) diam += (cell.hi[i] - cell.lo[i]) * (cell.hi[i] - cell.lo[i]);
    double reach = std::sqrt(diam) * (1 + chi.group().ball_radius() / 2) + chi.radius();
    double step = chi.radius() / 16;
    w.lo.assign(comp.a, 0.0);
    w.hi.assign(comp.a, 0.0);
    for (int j = 0; j < comp.a; ++j) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (double s = -reach; s <= reach; s += step) {
        std::vector<double> x = comp.point;
        for (int i = 0; i < n; ++i) x[i] += s * comp.tangent[i * comp.a + j];
        if (value(x.data()) > 0) {
          lo = std::min(lo, s);
          hi = std::max(hi, s);
        }
      }
      if (!(lo <= hi)) throw ManifoldError("chi_gamma has no support on the scanned window");
      w.lo[j] = lo - step;
      w.hi[j] = hi + step;
    }
    windows_.push_back(w);
  }
}

double FixedSetCutoff::value(const double* x) const {
  std::vector<std::pair<GroupElement, double>> t;
  chi_->terms(x, t);
  NeumaierSum s;
  for (const auto& [g, v] : t)
    if (ctx_->group_cutoff(g) == 1.0) s.add(v);
  return s.value();
}

// ---------------------------------------------------------------- quadrature

Rule1D gauss_legendre(int order, double a, double b) {
  if (order < 1) throw ManifoldError("Gauss-Legendre order must be >= 1");
  static std::mutex mu;
  static std::map<int, Rule1D> cache;
  Rule1D ref;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(order);
    if (it != cache.end()) ref = it->second;
  }
  if (ref.nodes.empty()) {
    auto zeros = boost::math::legendre_p_zeros<double>(order);
    for (double z : zeros) {
      double dp = boost::math::legendre_p_prime(order, z);
      double w = 2.0 / ((1.0 - z * z) * dp * dp);
      if (z == 0.0) {
        ref.nodes.push_back(0.0);
        ref.weights.push_back(w);
      } else {
        ref.nodes.push_back(-z);
        ref.weights.push_back(w);
        ref.nodes.push_back(z);
        ref.weights.push_back(w);
      }
    }
    std::vector<std::size_t> perm(ref.nodes.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::sort(perm.begin(), perm.end(), [&](std::size_t i, std::size_t j) { return ref.nodes[i] < ref.nodes[j]; });
    Rule1D sorted;
    for (auto i : perm) {
      sorted.nodes.push_back(ref.nodes[i]);
      sorted.weights.push_back(ref.weights[i]);
    }
    ref = sorted;
    std::lock_guard<std::mutex> lock(mu);
    cache.emplace(order, ref);
  }
  Rule1D out;
  double h = 0.5 * (b - a), m = 0.5 * (a + b);
  for (std::size_t i = 0; i < ref.nodes.size(); ++i) {
    out.nodes.push_back(m + h * ref.nodes[i]);
    out.weights.push_back(h * ref.weights[i]);
  }
  return out;
}

Rule1D composite_gauss_legendre(double a, double b, std::vector<double> breaks, int panels, int order) {
  if (!(b > a)) throw ManifoldError("empty interval");
  if (panels < 1) throw ManifoldError("panel count must be >= 1");
  std::vector<double> pts{a};
  std::sort(breaks.begin(), breaks.end());
  for (double x : breaks)
    if (x > a + 1e-14 && x < b - 1e-14 && x > pts.back() + 1e-14) pts.push_back(x);
  pts.push_back(b);
  Rule1D out;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    double h = (pts[k + 1] - pts[k]) / panels;
    for (int p = 0; p < panels; ++p) {
      Rule1D r = gauss_legendre(order, pts[k] + p * h, pts[k] + (p + 1) * h);
      out.nodes.insert(out.nodes.end(), r.nodes.begin(), r.nodes.end());
      out.weights.insert(out.weights.end(), r.weights.begin(), r.weights.end());
    }
  }
  return out;
}

Rule1D midpoint_rule(double a, double b, int points) {
  if (points < 1) throw ManifoldError("midpoint rule needs >= 1 point");
  Rule1D r;
  double h = (b - a) / points;
  for (int i = 0; i < points; ++i) {
    r.nodes.push_back(a + (i + 0.5) * h);
    r.weights.push_back(h);
  }
  return r;
}

double integrate_tensor(const ScalarField& f, const Box& box, const std::vector<Rule1D>& rules) {
  const int n = box.dim();
  if (static_cast<int>(rules.size()) != n) throw ManifoldError("one rule per axis required");
  std::vector<std::size_t> idx(n, 0);
  std::vector<double> x(n);
  NeumaierSum s;
  for (int i = 0; i < n; ++i)
    if (rules[i].nodes.empty()) return 0.0;
  while (true) {
    double w = 1.0;
    for (int i = 0; i < n; ++i) {
      x[i] = rules[i].nodes[idx[i]];
      w *= rules[i].weights[idx[i]];
    }
    double v = f(x);
    if (!std::isfinite(v)) throw ManifoldError("non-finite integrand sample");
    s.add(w * v);
    int i = 0;
    while (i < n) {
      if (++idx[i] < rules[i].nodes.size()) break;
      idx[i] = 0;
      ++i;
    }
    if (i == n) break;
  }
  return s.value();
}

QuadResult integrate_qmc(const ScalarField& f, const Box& box, std::size_t samples, int replicates,
                         std::uint64_t seed) {
  const int n = box.dim();
  if (replicates < 2) throw ManifoldError("QMC error estimate needs >= 2 replicates");
  std::mt19937_64 rng(seed);
  double vol = 1.0;
  for (int i = 0; i < n; ++i) vol *= box.hi[i] - box.lo[i];
  std::vector<double> est;
  std::vector<double> x(n);
  std::vector<std::uint64_t> raw(n);
  for (int r = 0; r < replicates; ++r) {
    std::vector<std::uint64_t> shift(n);
    for (auto& s : shift) s = rng();
    boost::random::sobol gen(n);
    NeumaierSum s;
    for (std::size_t k = 0; k < samples; ++k) {
      for (int i = 0; i < n; ++i) {
        std::uint64_t v = static_cast<std::uint64_t>(gen()) ^ shift[i];
        double u = std::ldexp(static_cast<double>(v >> 11), -53);
        x[i] = box.lo[i] + u * (box.hi[i] - box.lo[i]);
      }
      double v = f(x);
      if (!std::isfinite(v)) throw ManifoldError("non-finite integrand sample");
      s.add(v);
    }
    est.push_back(vol * s.value() / static_cast<double>(samples));
  }
  double mean = 0;
  for (double e : est) mean += e;
  mean /= replicates;
  double var = 0;
  for (double e : est) var += (e - mean) * (e - mean);
  var /= (replicates - 1);
  return {mean, std::sqrt(var / replicates), samples * replicates};
}

QuadResult integrate(const ScalarField& f, const QuadratureGrid& grid) {
  const int n = grid.box.dim();
  if (n == 0) throw ManifoldError("empty integration box");
  if (grid.rule == RuleKind::QuasiMonteCarlo)
    return integrate_qmc(f, grid.box, grid.samples, grid.replicates, grid.seed);
  auto rules_at = [&](int res) {
    std::vector<Rule1D> rules;
    for (int i = 0; i < n; ++i) {
      if (grid.rule == RuleKind::Midpoint)
        rules.push_back(midpoint_rule(grid.box.lo[i], grid.box.hi[i], res));
      else
        rules.push_back(composite_gauss_legendre(grid.box.lo[i], grid.box.hi[i], {}, res, grid.order));
    }
    return rules;
  };
  double coarse = integrate_tensor(f, grid.box, rules_at(grid.resolution));
  double fine = integrate_tensor(f, grid.box, rules_at(2 * grid.resolution));
  std::size_t per = grid.rule == RuleKind::Midpoint ? 1 : grid.order;
  std::size_t evals = 1, evals2 = 1;
  for (int i = 0; i < n; ++i) {
    evals *= per * grid.resolution;
    evals2 *= per * 2 * grid.resolution;
  }
  return {fine, std::fabs(fine - coarse), evals + evals2};
}

}  // namespace lef
