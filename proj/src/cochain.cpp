#include "lefschetz/cochain.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace lef {

Complex GroupCochain::operator()(GroupTuple g) const {
  if (static_cast<int>(g.size()) != degree + 1)
    throw CochainError("cochain '" + name + "' of degree " + std::to_string(degree) + " got " +
                       std::to_string(g.size()) + " arguments");
  return eval(g);
}

Complex CyclicCochain::operator()(GroupTuple g) const {
  if (static_cast<int>(g.size()) != degree + 1)
    throw CochainError("cyclic cochain '" + name + "' of degree " + std::to_string(degree) + " got " +
                       std::to_string(g.size()) + " arguments");
  return eval(g);
}

namespace {

int permutation_sign(const std::vector<int>& p) {
  int s = 1;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j)
      if (p[i] > p[j]) s = -s;
  return s;
}

std::string tuple_text(const CrystallographicGroup& G, GroupTuple t) {
  std::string s = "(";
  for (std::size_t i = 0; i < t.size(); ++i) s += (i ? ", " : "") + G.describe(t[i]);
  return s + ")";
}

bool close(Complex a, Complex b, bool exact) {
  if (exact) return a == b;
  return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(a) + std::abs(b));
}

}  // namespace

GroupCochain lott_delta(const GroupCochain& c) {
  GroupCochain d;
  d.degree = c.degree + 1;
  d.name = "delta(" + c.name + ")";
  d.support_hint = c.support_hint;
  d.integral = c.integral;
  d.eval = [c](GroupTuple g) {
    std::vector<GroupElement> sub(g.size() - 1);
    Complex s = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (std::size_t j = 0, k = 0; j < g.size(); ++j)
        if (j != i) sub[k++] = g[j];
      Complex v = c.eval(sub);
      s += (i % 2 == 0) ? v : -v;
    }
    return s;
  };
  return d;
}

GroupCochain antisymmetrize(const GroupCochain& c) {
  GroupCochain a = c;
  a.name = "alt(" + c.name + ")";
  a.integral = false;
  a.eval = [c](GroupTuple g) {
    std::vector<int> p(g.size());
    std::iota(p.begin(), p.end(), 0);
    std::vector<GroupElement> h(g.size());
    Complex s = 0;
    double count = 0;
    do {
      for (std::size_t i = 0; i < p.size(); ++i) h[i] = g[p[i]];
      s += static_cast<double>(permutation_sign(p)) * c.eval(h);
      count += 1;
    } while (std::next_permutation(p.begin(), p.end()));
    return s / count;
  };
  return a;
}

std::vector<std::vector<GroupElement>> random_tuples(const CrystallographicGroup& G, int length, int radius,
                                                     std::size_t count, std::uint64_t seed) {
  auto ball = G.ball_view(radius);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, ball.size() - 1);
  std::vector<std::vector<GroupElement>> out(count, std::vector<GroupElement>(length));
  for (auto& t : out)
    for (auto& g : t) g = ball[pick(rng)];
  return out;
}

namespace {

// all tuples of ball(radius)^{length} when small enough, else a deterministic sample
std::vector<std::vector<GroupElement>> sweep_tuples(const CrystallographicGroup& G, int length, int radius,
                                                    std::size_t max_tuples, std::uint64_t seed) {
  auto ball = G.ball_view(radius);
  double total = std::pow(static_cast<double>(ball.size()), length);
  if (total > static_cast<double>(max_tuples)) return random_tuples(G, length, radius, max_tuples, seed);
  std::vector<std::vector<GroupElement>> out;
  std::vector<std::size_t> idx(length, 0);
  while (true) {
    std::vector<GroupElement> t(length);
    for (int i = 0; i < length; ++i) t[i] = ball[idx[i]];
    out.push_back(std::move(t));
    int i = 0;
    while (i < length) {
      if (++idx[i] < ball.size()) break;
      idx[i] = 0;
      ++i;
    }
    if (i == length) break;
  }
  return out;
}

}  // namespace

CheckResult lott_check(const GroupCochain& c, const ConjugacyContext& ctx, int radius, int z_radius,
                       std::size_t max_tuples, std::uint64_t seed) {
  const auto& G = ctx.group();
  CheckResult res;
  auto zs = ctx.centralizer_in_ball(std::min(z_radius, G.ball_radius()));
  auto fail = [&](const std::string& what, GroupTuple t, double r) {
    res.max_residual = std::max(res.max_residual, r);
    if (res.pass) {
      res.pass = false;
      res.witness = what + " fails at " + tuple_text(G, t);
    }
  };
  for (const auto& t : sweep_tuples(G, c.degree + 1, radius, max_tuples, seed)) {
    try {
      Complex v = c(t);
      std::vector<GroupElement> u = t;
      for (int i = 0; i + 1 <= c.degree; ++i) {
        std::swap(u[i], u[i + 1]);
        Complex w = c(u);
        std::swap(u[i], u[i + 1]);
        double r = std::abs(w + v);
        res.max_residual = std::max(res.max_residual, r);
        if (!close(w, -v, c.integral)) fail("antisymmetry", t, r);
      }
      for (const auto& z : zs) {
        for (std::size_t i = 0; i < t.size(); ++i) u[i] = compose(z, t[i]);
        Complex w = c(u);
        double r = std::abs(w - v);
        res.max_residual = std::max(res.max_residual, r);
        if (!close(w, v, c.integral)) fail("Z_gamma invariance (z=" + G.describe(z) + ")", t, r);
      }
      u = t;
      u[0] = compose(ctx.gamma(), t[0]);
      Complex w = c(u);
      double r = std::abs(w - v);
      res.max_residual = std::max(res.max_residual, r);
      if (!close(w, v, c.integral)) fail("gamma invariance in slot 0", t, r);
      ++res.checked;
    } catch (const UnreachableError&) {
    }
  }
  return res;
}

CyclicCochain lott_to_cyclic(const GroupCochain& c, std::shared_ptr<const ConjugacyContext> ctx) {
  CyclicCochain phi;
  phi.degree = c.degree;
  phi.name = "tau(" + c.name + ")";
  phi.local = true;
  phi.integral = c.integral;
  const double sign = (c.degree % 2 == 0) ? 1.0 : -1.0;
  phi.eval = [c, ctx, sign](GroupTuple g) -> Complex {
    GroupElement p = g[0];
    for (std::size_t i = 1; i < g.size(); ++i) p = compose(p, g[i]);
    GroupElement eta;
    if (!ctx->find_conjugator(p, &eta)) return 0.0;
    std::vector<GroupElement> args(g.size());
    args[0] = eta;
    for (std::size_t i = 1; i < g.size(); ++i) args[i] = compose(args[i - 1], g[i - 1]);
    return sign * c.eval(args);
  };
  return phi;
}

CheckResult tau_well_defined(const GroupCochain& c, const ConjugacyContext& ctx,
                             const std::vector<std::vector<GroupElement>>& tuples) {
  CheckResult res;
  std::vector<GroupElement> zs;
  for (const auto& z : ctx.centralizer_in_ball(std::min(2, ctx.group().ball_radius())))
    if (!is_identity(z)) zs.push_back(z);
  for (const auto& g : tuples) {
    GroupElement p = g[0];
    for (std::size_t i = 1; i < g.size(); ++i) p = compose(p, g[i]);
    GroupElement eta;
    if (!ctx.find_conjugator(p, &eta)) continue;
    for (const auto& z : zs) {
      GroupElement eta2 = compose(z, eta);
      std::vector<GroupElement> a(g.size()), b(g.size());
      a[0] = eta;
      b[0] = eta2;
      for (std::size_t i = 1; i < g.size(); ++i) {
        a[i] = compose(a[i - 1], g[i - 1]);
        b[i] = compose(b[i - 1], g[i - 1]);
      }
      try {
        Complex va = c(a), vb = c(b);
        double r = std::abs(va - vb);
        res.max_residual = std::max(res.max_residual, r);
        if (!close(va, vb, c.integral) && res.pass) {
          res.pass = false;
          res.witness = "eta choice changes tau at " + tuple_text(ctx.group(), g);
        }
        ++res.checked;
      } catch (const UnreachableError&) {
      }
    }
  }
  return res;
}

CyclicCochain hochschild_b(const CyclicCochain& phi) {
  CyclicCochain b;
  b.degree = phi.degree + 1;
  b.name = "b(" + phi.name + ")";
  b.local = phi.local;
  b.integral = phi.integral;
  b.eval = [phi](GroupTuple a) {
    const std::size_t m = a.size();  // k + 2
    std::vector<GroupElement> h(m - 1);
    Complex s = 0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
      for (std::size_t j = 0; j < i; ++j) h[j] = a[j];
      h[i] = compose(a[i], a[i + 1]);
      for (std::size_t j = i + 2; j < m; ++j) h[j - 1] = a[j];
      Complex v = phi.eval(h);
      s += (i % 2 == 0) ? v : -v;
    }
    h[0] = compose(a[m - 1], a[0]);
    for (std::size_t j = 1; j + 1 < m; ++j) h[j] = a[j];
    Complex v = phi.eval(h);
    s += ((m - 1) % 2 == 0) ? v : -v;
    return s;
  };
  return b;
}

CyclicCochain delocalized_trace(std::shared_ptr<const ConjugacyContext> ctx) {
  CyclicCochain phi;
  phi.degree = 0;
  phi.name = "trace<gamma>";
  phi.integral = true;
  phi.eval = [ctx](GroupTuple g) -> Complex { return ctx->find_conjugator(g[0], nullptr) ? 1.0 : 0.0; };
  return phi;
}

CheckResult cyclicity_check(const CyclicCochain& phi, const std::vector<std::vector<GroupElement>>& tuples,
                            double tol) {
  CheckResult res;
  const double sign = (phi.degree % 2 == 0) ? 1.0 : -1.0;
  for (const auto& t : tuples) {
    std::vector<GroupElement> r(t.size());
    r[0] = t.back();
    for (std::size_t i = 0; i + 1 < t.size(); ++i) r[i + 1] = t[i];
    Complex a = phi(r), b = sign * phi(t);
    double d = std::abs(a - b);
    res.max_residual = std::max(res.max_residual, d);
    if (d > tol && res.pass) {
      res.pass = false;
      res.witness = "cyclic rotation changes the value";
    }
    ++res.checked;
  }
  return res;
}

GrowthCheck eg_verify(const GroupCochain& c, const ConjugacyContext& ctx, double A, double K, int radius,
                      std::size_t max_tuples, std::uint64_t seed) {
  if (!(A > 0) || !(K > 0)) throw CochainError("growth constants must be positive");
  GrowthCheck res;
  for (const auto& t : sweep_tuples(ctx.group(), c.degree + 1, radius, max_tuples, seed)) {
    int len;
    Complex v;
    try {
      len = ctx.tuple_length(t);
      v = c(t);
    } catch (const UnreachableError&) {
      continue;
    }
    double ratio = std::abs(v) / (A * std::exp(K * len));
    ++res.checked;
    if (ratio > res.max_ratio) res.max_ratio = ratio;
    if (ratio > 1.0 && res.pass) {
      res.pass = false;
      std::ostringstream os;
      os << "|c| = " << std::abs(v) << " exceeds A e^{K|I|} with |I| = " << len << " at "
         << tuple_text(ctx.group(), t);
      res.witness = os.str();
    }
  }
  return res;
}

// ---------------------------------------------------------------- library

namespace {

double dinf_s(const GroupElement& g) {
  return g.a(0, 0) * boost::rational_cast<double>(g.translation(0));
}

void require_dinf_reflection(const ConjugacyContext& ctx) {
  const auto& G = ctx.group();
  if (G.dim() != 1 || G.point_group_order() != 2 || linear_is_identity(ctx.gamma()))
    throw CochainError("cochain needs D-infinity with gamma a reflection");
}

void require_lattice_identity(const ConjugacyContext& ctx, int n) {
  const auto& G = ctx.group();
  if (G.point_group_order() != 1 || !is_identity(ctx.gamma()) || (n > 0 && G.dim() != n))
    throw CochainError("cochain needs a lattice group Z^n with gamma = e");
}

}  // namespace

GroupCochain constant_cochain(Complex value) {
  GroupCochain c;
  c.degree = 0;
  c.name = "constant";
  c.integral = value.imag() == 0 && std::floor(value.real()) == value.real();
  c.eval = [value](GroupTuple) { return value; };
  return c;
}

GroupCochain zero_cochain(int degree) {
  GroupCochain c;
  c.degree = degree;
  c.name = "zero";
  c.integral = true;
  c.eval = [](GroupTuple) { return Complex(0.0); };
  return c;
}

GroupCochain dinf_shift_cochain(std::shared_ptr<const ConjugacyContext> ctx) {
  require_dinf_reflection(*ctx);
  GroupCochain c;
  c.degree = 1;
  c.name = "dinf_shift";
  c.integral = ctx->group().denominator() == 1;
  c.support_hint = ctx->group().ball_radius();
  c.eval = [](GroupTuple g) { return Complex(dinf_s(g[1]) - dinf_s(g[0])); };
  return c;
}

GroupCochain conj_length_cochain(std::shared_ptr<const ConjugacyContext> ctx, int degree) {
  if (degree != 0 && degree != 1) throw CochainError("conj_length exists in degrees 0 and 1");
  GroupCochain c;
  c.degree = degree;
  c.name = "conj_length";
  c.integral = true;
  c.support_hint = ctx->group().ball_radius() / 3;
  auto f = [ctx](const GroupElement& g) {
    return static_cast<double>(ctx->group().word_length(compose(inverse(g), compose(ctx->gamma(), g))));
  };
  if (degree == 0)
    c.eval = [f](GroupTuple g) { return Complex(f(g[0])); };
  else
    c.eval = [f](GroupTuple g) { return Complex(f(g[1]) - f(g[0])); };
  return c;
}

GroupCochain exp_conj_length_cochain(std::shared_ptr<const ConjugacyContext> ctx, double a) {
  GroupCochain c;
  c.degree = 0;
  c.name = "exp_conj_length";
  c.support_hint = ctx->group().ball_radius() / 3;
  c.eval = [ctx, a](GroupTuple g) {
    return Complex(std::exp(a * ctx->group().word_length(compose(inverse(g[0]), compose(ctx->gamma(), g[0])))));
  };
  return c;
}

GroupCochain homomorphism_cochain(std::shared_ptr<const ConjugacyContext> ctx, std::vector<double> h) {
  require_lattice_identity(*ctx, 0);
  const int n = ctx->group().dim();
  if (static_cast<int>(h.size()) != n) throw CochainError("homomorphism needs one coefficient per lattice axis");
  GroupCochain c;
  c.degree = 1;
  c.name = "homomorphism";
  c.support_hint = ctx->group().ball_radius();
  c.integral = std::all_of(h.begin(), h.end(), [](double v) { return std::floor(v) == v; });
  c.eval = [h, n](GroupTuple g) {
    double s = 0;
    for (int i = 0; i < n; ++i)
      s += h[i] * boost::rational_cast<double>(g[1].translation(i) - g[0].translation(i));
    return Complex(s);
  };
  return c;
}

GroupCochain area_cocycle(std::shared_ptr<const ConjugacyContext> ctx) {
  require_lattice_identity(*ctx, 2);
  GroupCochain c;
  c.degree = 2;
  c.name = "area";
  c.integral = true;
  c.support_hint = ctx->group().ball_radius();
  c.eval = [](GroupTuple g) {
    long long ax = g[1].t[0] - g[0].t[0], ay = g[1].t[1] - g[0].t[1];
    long long bx = g[2].t[0] - g[0].t[0], by = g[2].t[1] - g[0].t[1];
    long long d = g[0].den;
    return Complex(static_cast<double>(ax * by - ay * bx) / static_cast<double>(d * d));
  };
  return c;
}

GroupCochain dinf_degree2_cocycle(std::shared_ptr<const ConjugacyContext> ctx) {
  require_dinf_reflection(*ctx);
  GroupCochain c;
  c.degree = 2;
  c.name = "dinf_degree2";
  c.integral = ctx->group().denominator() == 1;
  c.support_hint = ctx->group().ball_radius();
  auto b = [](const GroupElement& x, const GroupElement& y) {
    double s0 = dinf_s(x), s1 = dinf_s(y);
    return s0 * s1 * s1 - s1 * s0 * s0;
  };
  c.eval = [b](GroupTuple g) { return Complex(b(g[1], g[2]) - b(g[0], g[2]) + b(g[0], g[1])); };
  return c;
}

GroupCochain broken_cochain(int degree) {
  GroupCochain c;
  c.degree = degree;
  c.name = "broken";
  c.integral = false;
  c.eval = [](GroupTuple g) {
    double s = 0;
    for (std::size_t i = 0; i < g.size(); ++i)
      s += static_cast<double>(i + 1) * boost::rational_cast<double>(g[i].translation(0));
    return Complex(s + 0.5);
  };
  return c;
}

namespace {

struct TupleLess {
  bool operator()(const std::vector<GroupElement>& a, const std::vector<GroupElement>& b) const {
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
      if (canonical_less(a[i], b[i])) return true;
      if (canonical_less(b[i], a[i])) return false;
    }
    return a.size() < b.size();
  }
};

// canonical representative under permutations, the diagonal Z_gamma action and <gamma> in each slot
std::pair<std::vector<GroupElement>, int> canonical_tuple(const ConjugacyContext& ctx, GroupTuple t) {
  std::vector<GroupElement> powers{ctx.group().identity()};
  for (int j = 1; j < ctx.order(); ++j) powers.push_back(compose(ctx.gamma(), powers.back()));
  auto reduce = [&](const GroupElement& g) {
    GroupElement best = g;
    for (const auto& p : powers) {
      GroupElement h = compose(p, g);
      if (canonical_less(h, best)) best = h;
    }
    return best;
  };
  std::vector<int> p(t.size());
  std::iota(p.begin(), p.end(), 0);
  std::vector<GroupElement> best;
  int best_sign = 0;
  bool ambiguous = false;
  do {
    const GroupElement& first = t[p[0]];
    GroupElement z = compose(ctx.coset_rep(first), inverse(first));
    std::vector<GroupElement> u(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) u[i] = reduce(compose(z, t[p[i]]));
    int sign = permutation_sign(p);
    if (best.empty() || TupleLess{}(u, best)) {
      best = u;
      best_sign = sign;
      ambiguous = false;
    } else if (!TupleLess{}(best, u) && sign != best_sign) {
      ambiguous = true;
    }
  } while (std::next_permutation(p.begin(), p.end()));
  return {best, ambiguous ? 0 : best_sign};
}

}  // namespace

GroupCochain table_cochain(std::shared_ptr<const ConjugacyContext> ctx, int degree,
                           const std::vector<TableEntry>& entries) {
  auto table = std::make_shared<std::map<std::vector<GroupElement>, Complex, TupleLess>>();
  for (const auto& e : entries) {
    if (static_cast<int>(e.tuple.size()) != degree + 1) throw CochainError("table entry has wrong length");
    auto [key, sign] = canonical_tuple(*ctx, e.tuple);
    if (sign == 0) {
      if (std::abs(e.value) != 0.0) throw CochainError("table entry is forced to vanish by antisymmetry");
      continue;
    }
    Complex v = static_cast<double>(sign) * e.value;
    auto it = table->find(key);
    if (it != table->end() && std::abs(it->second - v) > 1e-12)
      throw CochainError("table entries are inconsistent under the invariances");
    (*table)[key] = v;
  }
  GroupCochain c;
  c.degree = degree;
  c.name = "table";
  c.support_hint = ctx->group().ball_radius();
  c.eval = [ctx, table](GroupTuple g) -> Complex {
    auto [key, sign] = canonical_tuple(*ctx, g);
    if (sign == 0) return 0.0;
    auto it = table->find(key);
    return it == table->end() ? Complex(0.0) : static_cast<double>(sign) * it->second;
  };
  return c;
}

std::vector<std::string> library_names() {
  return {"constant", "zero", "dinf_shift", "conj_length", "exp_conj_length", "homomorphism", "area", "dinf_degree2"};
}

GroupCochain library_cochain(const std::string& name, std::shared_ptr<const ConjugacyContext> ctx, int degree,
                             const std::vector<double>& params) {
  if (name == "constant") return constant_cochain(params.empty() ? 1.0 : params[0]);
  if (name == "zero") return zero_cochain(degree);
  if (name == "dinf_shift") return dinf_shift_cochain(ctx);
  if (name == "conj_length") return conj_length_cochain(ctx, degree);
  if (name == "exp_conj_length") return exp_conj_length_cochain(ctx, params.empty() ? 1.0 : params[0]);
  if (name == "homomorphism") {
    std::vector<double> h = params;
    if (h.empty()) h.assign(ctx->group().dim(), 1.0);
    return homomorphism_cochain(ctx, h);
  }
  if (name == "area") return area_cocycle(ctx);
  if (name == "dinf_degree2") return dinf_degree2_cocycle(ctx);
  throw CochainError("unknown cochain '" + name + "'");
}

}  // namespace lef
