#include "lefschetz/group.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>

namespace lef {

namespace {

std::atomic<int> next_group_id{1};

long long lcm_ll(long long a, long long b) { return a / std::gcd(a, b) * b; }

int det_int(const std::array<int, kMaxDim * kMaxDim>& A, int n) {
  auto e = [&](int i, int j) { return A[i * kMaxDim + j]; };
  if (n == 1) return e(0, 0);
  if (n == 2) return e(0, 0) * e(1, 1) - e(0, 1) * e(1, 0);
  return e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1)) - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0)) +
         e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0));
}

std::array<int, kMaxDim * kMaxDim> inverse_int(const std::array<int, kMaxDim * kMaxDim>& A, int n) {
  std::array<int, kMaxDim * kMaxDim> R{};
  int d = det_int(A, n);
  if (d != 1 && d != -1) throw GroupError("linear part is not unimodular");
  auto e = [&](int i, int j) { return A[i * kMaxDim + j]; };
  if (n == 1) {
    R[0] = d;
  } else if (n == 2) {
    R[0] = e(1, 1) * d;
    R[1] = -e(0, 1) * d;
    R[kMaxDim] = -e(1, 0) * d;
    R[kMaxDim + 1] = e(0, 0) * d;
  } else {
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        int r0 = (j + 1) % 3, r1 = (j + 2) % 3, c0 = (i + 1) % 3, c1 = (i + 2) % 3;
        R[i * kMaxDim + j] = (e(r0, c0) * e(r1, c1) - e(r0, c1) * e(r1, c0)) * d;
      }
    }
  }
  return R;
}

void invert_real(const double* M, double* out, int n) {
  // Gauss-Jordan on n <= 3
  double a[kMaxDim][2 * kMaxDim] = {};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a[i][j] = M[i * kMaxDim + j];
    a[i][n + i] = 1.0;
  }
  for (int c = 0; c < n; ++c) {
    int p = c;
    for (int r = c + 1; r < n; ++r)
      if (std::fabs(a[r][c]) > std::fabs(a[p][c])) p = r;
    if (std::fabs(a[p][c]) < 1e-14) throw GroupError("lattice basis is singular");
    for (int j = 0; j < 2 * n; ++j) std::swap(a[c][j], a[p][j]);
    double piv = a[c][c];
    for (int j = 0; j < 2 * n; ++j) a[c][j] /= piv;
    for (int r = 0; r < n; ++r) {
      if (r == c) continue;
      double f = a[r][c];
      for (int j = 0; j < 2 * n; ++j) a[r][j] -= f * a[c][j];
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out[i * kMaxDim + j] = a[i][n + j];
}

}  // namespace

Rational parse_rational(const std::string& text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  if (s.empty()) throw GroupError("empty rational");
  auto slash = s.find('/');
  try {
    std::size_t used = 0;
    if (slash == std::string::npos) {
      long long p = std::stoll(s, &used);
      if (used != s.size()) throw GroupError("bad rational '" + text + "'");
      return Rational(p);
    }
    long long p = std::stoll(s.substr(0, slash), &used);
    if (used != slash) throw GroupError("bad rational '" + text + "'");
    std::string qs = s.substr(slash + 1);
    long long q = std::stoll(qs, &used);
    if (used != qs.size() || q == 0) throw GroupError("bad rational '" + text + "'");
    return Rational(p, q);
  } catch (const std::logic_error&) {
    throw GroupError("bad rational '" + text + "'");
  }
}

std::string to_string(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

std::size_t GroupElementHash::operator()(const GroupElement& g) const noexcept {
  std::size_t h = static_cast<std::size_t>(g.group_id) * 0x9E3779B97F4A7C15ULL;
  auto mix = [&h](long long v) {
    h ^= static_cast<std::size_t>(v) + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
  };
  for (int i = 0; i < g.n; ++i) {
    for (int j = 0; j < g.n; ++j) mix(g.a(i, j));
    mix(g.t[i]);
  }
  return h;
}

bool canonical_less(const GroupElement& a, const GroupElement& b) {
  for (int i = 0; i < a.n; ++i)
    for (int j = 0; j < a.n; ++j)
      if (a.a(i, j) != b.a(i, j)) return a.a(i, j) < b.a(i, j);
  for (int i = 0; i < a.n; ++i)
    if (a.t[i] != b.t[i]) return a.t[i] < b.t[i];
  return false;
}

GroupElement compose(const GroupElement& a, const GroupElement& b) {
  if (a.group_id != b.group_id || a.n != b.n) throw GroupError("compose: elements belong to different groups");
  GroupElement c;
  c.n = a.n;
  c.group_id = a.group_id;
  c.den = a.den;
  for (int i = 0; i < a.n; ++i) {
    long long s = a.t[i];
    for (int j = 0; j < a.n; ++j) {
      int acc = 0;
      for (int k = 0; k < a.n; ++k) acc += a.a(i, k) * b.a(k, j);
      c.A[i * kMaxDim + j] = acc;
      s += static_cast<long long>(a.a(i, j)) * b.t[j];
    }
    c.t[i] = s;
  }
  return c;
}

GroupElement inverse(const GroupElement& g) {
  GroupElement r;
  r.n = g.n;
  r.group_id = g.group_id;
  r.den = g.den;
  r.A = inverse_int(g.A, g.n);
  for (int i = 0; i < g.n; ++i) {
    long long s = 0;
    for (int j = 0; j < g.n; ++j) s -= static_cast<long long>(r.a(i, j)) * g.t[j];
    r.t[i] = s;
  }
  return r;
}

bool linear_is_identity(const GroupElement& g) {
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      if (g.a(i, j) != (i == j ? 1 : 0)) return false;
  return true;
}

bool is_identity(const GroupElement& g) {
  if (!linear_is_identity(g)) return false;
  for (int i = 0; i < g.n; ++i)
    if (g.t[i] != 0) return false;
  return true;
}

int element_order(const GroupElement& g, int max_order) {
  GroupElement p = g;
  for (int k = 1; k <= max_order; ++k) {
    if (is_identity(p)) return k;
    p = compose(p, g);
  }
  return 0;
}

CrystallographicGroup::CrystallographicGroup(const GroupSpec& spec)
    : name_(spec.name), n_(spec.n), id_(next_group_id++), radius_(spec.ball_radius) {
  if (n_ < 1 || n_ > kMaxDim) throw GroupError("group dimension must be 1.." + std::to_string(kMaxDim));
  if (static_cast<int>(spec.lattice.size()) != n_) throw GroupError("lattice needs n basis rows");
  if (spec.point_group.empty()) throw GroupError("point group is empty");
  if (radius_ < 0) throw GroupError("ball radius must be >= 0");

  for (int i = 0; i < n_; ++i) {
    if (static_cast<int>(spec.lattice[i].size()) != n_) throw GroupError("lattice row has wrong length");
    for (int j = 0; j < n_; ++j) B_[i * kMaxDim + j] = boost::rational_cast<double>(spec.lattice[i][j]);
  }
  invert_real(B_.data(), Binv_.data(), n_);
  {
    double M[kMaxDim * kMaxDim];
    std::copy(B_.begin(), B_.end(), M);
    double det = 1.0;
    // |det B| by elimination
    for (int c = 0; c < n_; ++c) {
      int p = c;
      for (int r = c + 1; r < n_; ++r)
        if (std::fabs(M[r * kMaxDim + c]) > std::fabs(M[p * kMaxDim + c])) p = r;
      if (p != c) {
        for (int j = 0; j < n_; ++j) std::swap(M[c * kMaxDim + j], M[p * kMaxDim + j]);
        det = -det;
      }
      det *= M[c * kMaxDim + c];
      for (int r = c + 1; r < n_; ++r) {
        double f = M[r * kMaxDim + c] / M[c * kMaxDim + c];
        for (int j = c; j < n_; ++j) M[r * kMaxDim + j] -= f * M[c * kMaxDim + j];
      }
    }
    covolume_ = std::fabs(det);
  }

  den_ = 1;
  for (const auto& op : spec.point_group) {
    if (static_cast<int>(op.matrix.size()) != n_ * n_ || static_cast<int>(op.shift.size()) != n_)
      throw GroupError("point op '" + op.name + "' has wrong size");
    for (const auto& s : op.shift) den_ = lcm_ll(den_, s.denominator());
  }
  for (const auto& op : spec.point_group) {
    GroupElement g;
    g.n = n_;
    g.group_id = id_;
    g.den = den_;
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) g.A[i * kMaxDim + j] = op.matrix[i * n_ + j];
      g.t[i] = (op.shift[i] * Rational(den_)).numerator();
    }
    int d = det_int(g.A, n_);
    if (d != 1 && d != -1) throw GroupError("point op '" + op.name + "' is not unimodular");
    auto L = cartesian_linear(g);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) {
        double s = 0;
        for (int k = 0; k < n_; ++k) s += L[i * kMaxDim + k] * L[j * kMaxDim + k];
        if (std::fabs(s - (i == j ? 1.0 : 0.0)) > 1e-9)
          throw GroupError("point op '" + op.name + "' is not orthogonal in Cartesian coordinates");
      }
    for (const auto& r : reps_)
      if (r.A == g.A) throw GroupError("point op '" + op.name + "' repeats a linear part");
    reps_.push_back(g);
    rep_names_.push_back(op.name);
  }
  if (!linear_is_identity(reps_[0])) throw GroupError("first point op must be the identity");
  // closure modulo the lattice
  for (const auto& a : reps_)
    for (const auto& b : reps_)
      if (!contains(compose(a, b))) throw GroupError("point group data is not closed modulo the lattice");

  for (const auto& tok : spec.generators) {
    GroupElement g = named(tok);
    for (const GroupElement& h : {g, inverse(g)}) {
      if (is_identity(h)) continue;
      if (std::find(gens_.begin(), gens_.end(), h) == gens_.end()) {
        gens_.push_back(h);
        gen_names_.push_back(describe(h));
      }
    }
  }
  if (gens_.empty()) throw GroupError("generating set is empty");
  build_ball();
}

GroupElement CrystallographicGroup::identity() const {
  GroupElement g;
  g.n = n_;
  g.group_id = id_;
  g.den = den_;
  for (int i = 0; i < n_; ++i) g.A[i * kMaxDim + i] = 1;
  return g;
}

GroupElement CrystallographicGroup::translation(std::span<const long long> m) const {
  GroupElement g = identity();
  for (int i = 0; i < n_; ++i) g.t[i] = m[i] * den_;
  return g;
}

GroupElement CrystallographicGroup::element(int point_index, std::span<const long long> m) const {
  if (point_index < 0 || point_index >= point_group_order()) throw GroupError("point index out of range");
  return compose(translation(m), reps_[point_index]);
}

GroupElement CrystallographicGroup::named(const std::string& token) const {
  std::string base = token;
  bool inv = false;
  if (base.size() > 3 && base.substr(base.size() - 3) == "^-1") {
    inv = true;
    base = base.substr(0, base.size() - 3);
  }
  GroupElement g;
  bool found = false;
  if (base == "e") {
    g = identity();
    found = true;
  }
  if (!found && base.size() >= 2 && base[0] == 't') {
    try {
      std::size_t used = 0;
      int idx = std::stoi(base.substr(1), &used);
      if (used == base.size() - 1 && idx >= 1 && idx <= n_) {
        std::vector<long long> m(n_, 0);
        m[idx - 1] = 1;
        g = translation(m);
        found = true;
      }
    } catch (const std::logic_error&) {
    }
  }
  if (!found) {
    for (std::size_t i = 0; i < rep_names_.size(); ++i)
      if (rep_names_[i] == base) {
        g = reps_[i];
        found = true;
      }
  }
  if (!found) throw GroupError("unknown element name '" + token + "' in group " + name_);
  return inv ? inverse(g) : g;
}

GroupElement CrystallographicGroup::word(const std::string& text) const {
  std::istringstream in(text);
  std::string tok;
  GroupElement g = identity();
  while (in >> tok) g = compose(g, named(tok));
  return g;
}

std::pair<int, std::vector<long long>> CrystallographicGroup::decompose(const GroupElement& g) const {
  if (g.group_id != id_) throw GroupError("element belongs to another group");
  for (int f = 0; f < point_group_order(); ++f) {
    if (reps_[f].A != g.A) continue;
    std::vector<long long> m(n_);
    for (int i = 0; i < n_; ++i) {
      long long d = g.t[i] - reps_[f].t[i];
      if (d % den_ != 0) throw GroupError("element is not in the group: translation off the lattice coset");
      m[i] = d / den_;
    }
    return {f, m};
  }
  throw GroupError("element is not in the group: linear part not in the point group");
}

bool CrystallographicGroup::contains(const GroupElement& g) const {
  if (g.group_id != id_) return false;
  for (const auto& r : reps_) {
    if (r.A != g.A) continue;
    for (int i = 0; i < n_; ++i)
      if ((g.t[i] - r.t[i]) % den_ != 0) return false;
    return true;
  }
  return false;
}

void CrystallographicGroup::to_lattice(const double* x, double* u) const {
  // x = B^T u  =>  u = B^{-T} x
  for (int i = 0; i < n_; ++i) {
    double s = 0;
    for (int j = 0; j < n_; ++j) s += Binv_[j * kMaxDim + i] * x[j];
    u[i] = s;
  }
}

void CrystallographicGroup::to_cartesian(const double* u, double* x) const {
  for (int i = 0; i < n_; ++i) {
    double s = 0;
    for (int j = 0; j < n_; ++j) s += B_[j * kMaxDim + i] * u[j];
    x[i] = s;
  }
}

void CrystallographicGroup::act(const GroupElement& g, const double* x, double* out) const {
  double u[kMaxDim], w[kMaxDim];
  to_lattice(x, u);
  for (int i = 0; i < n_; ++i) {
    double s = static_cast<double>(g.t[i]) / static_cast<double>(den_);
    for (int j = 0; j < n_; ++j) s += g.a(i, j) * u[j];
    w[i] = s;
  }
  to_cartesian(w, out);
}

std::vector<double> CrystallographicGroup::act(const GroupElement& g, const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != n_) throw GroupError("act: point has wrong dimension");
  std::vector<double> out(n_);
  act(g, x.data(), out.data());
  return out;
}

std::array<double, kMaxDim * kMaxDim> CrystallographicGroup::cartesian_linear(const GroupElement& g) const {
  // B^T A B^{-T}
  std::array<double, kMaxDim * kMaxDim> T{}, R{};
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) {
      double s = 0;
      for (int k = 0; k < n_; ++k) s += g.a(i, k) * Binv_[j * kMaxDim + k];
      T[i * kMaxDim + j] = s;
    }
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) {
      double s = 0;
      for (int k = 0; k < n_; ++k) s += B_[k * kMaxDim + i] * T[k * kMaxDim + j];
      R[i * kMaxDim + j] = s;
    }
  return R;
}

std::array<double, kMaxDim> CrystallographicGroup::cartesian_translation(const GroupElement& g) const {
  double u[kMaxDim];
  for (int i = 0; i < n_; ++i) u[i] = static_cast<double>(g.t[i]) / static_cast<double>(den_);
  std::array<double, kMaxDim> x{};
  to_cartesian(u, x.data());
  return x;
}

Box CrystallographicGroup::unit_cell() const {
  Box b;
  b.lo.assign(n_, std::numeric_limits<double>::infinity());
  b.hi.assign(n_, -std::numeric_limits<double>::infinity());
  for (int corner = 0; corner < (1 << n_); ++corner) {
    double u[kMaxDim], x[kMaxDim];
    for (int i = 0; i < n_; ++i) u[i] = (corner >> i) & 1;
    to_cartesian(u, x);
    for (int i = 0; i < n_; ++i) {
      b.lo[i] = std::min(b.lo[i], x[i]);
      b.hi[i] = std::max(b.hi[i], x[i]);
    }
  }
  return b;
}

void CrystallographicGroup::build_ball() {
  ball_.clear();
  shell_end_.clear();
  length_.clear();
  GroupElement e = identity();
  ball_.push_back(e);
  length_[e] = 0;
  shell_end_.push_back(1);
  std::size_t shell_begin = 0;
  for (int r = 1; r <= radius_; ++r) {
    std::vector<GroupElement> next;
    for (std::size_t i = shell_begin; i < ball_.size(); ++i) {
      for (const auto& s : gens_) {
        GroupElement h = compose(ball_[i], s);
        if (length_.emplace(h, r).second) next.push_back(h);
      }
    }
    std::sort(next.begin(), next.end(), canonical_less);
    shell_begin = ball_.size();
    ball_.insert(ball_.end(), next.begin(), next.end());
    shell_end_.push_back(ball_.size());
  }
}

int CrystallographicGroup::word_length(const GroupElement& g) const {
  auto it = length_.find(g);
  if (it == length_.end()) {
    if (!contains(g)) throw GroupError("word_length: element is not in the group");
    throw UnreachableError("unreachable within radius " + std::to_string(radius_) + ": " + describe(g));
  }
  return it->second;
}

bool CrystallographicGroup::has_length(const GroupElement& g) const { return length_.count(g) != 0; }

std::span<const GroupElement> CrystallographicGroup::ball_view(int r) const {
  if (r < 0) throw GroupError("negative radius");
  if (r > radius_) throw UnreachableError("ball radius " + std::to_string(r) + " exceeds table radius " +
                                          std::to_string(radius_));
  return std::span<const GroupElement>(ball_.data(), shell_end_[r]);
}

std::vector<GroupElement> CrystallographicGroup::enumerate_ball(int r) const {
  auto v = ball_view(r);
  return std::vector<GroupElement>(v.begin(), v.end());
}

std::vector<std::size_t> CrystallographicGroup::sphere_sizes() const {
  std::vector<std::size_t> out;
  std::size_t prev = 0;
  for (auto e : shell_end_) {
    out.push_back(e - prev);
    prev = e;
  }
  return out;
}

void CrystallographicGroup::elements_near(const double* x, const double* c, double r,
                                          std::vector<GroupElement>& out) const {
  out.clear();
  double ux[kMaxDim], uc[kMaxDim];
  to_lattice(x, ux);
  to_lattice(c, uc);
  double bound[kMaxDim];
  for (int i = 0; i < n_; ++i) {
    double s = 0;
    for (int j = 0; j < n_; ++j) s += Binv_[j * kMaxDim + i] * Binv_[j * kMaxDim + i];
    bound[i] = r * std::sqrt(s) + 1e-12;
  }
  const double r2 = r * r;
  for (const auto& f : reps_) {
    double w[kMaxDim];
    for (int i = 0; i < n_; ++i) {
      double s = static_cast<double>(f.t[i]) / static_cast<double>(den_);
      for (int j = 0; j < n_; ++j) s += f.a(i, j) * uc[j];
      w[i] = ux[i] - s;
    }
    long long lo[kMaxDim], hi[kMaxDim], m[kMaxDim];
    for (int i = 0; i < n_; ++i) {
      lo[i] = static_cast<long long>(std::ceil(w[i] - bound[i]));
      hi[i] = static_cast<long long>(std::floor(w[i] + bound[i]));
      if (lo[i] > hi[i]) goto next_rep;
      m[i] = lo[i];
    }
    while (true) {
      double du[kMaxDim], dx[kMaxDim];
      for (int i = 0; i < n_; ++i) du[i] = w[i] - static_cast<double>(m[i]);
      to_cartesian(du, dx);
      double d2 = 0;
      for (int i = 0; i < n_; ++i) d2 += dx[i] * dx[i];
      if (d2 < r2) {
        GroupElement g = f;
        for (int i = 0; i < n_; ++i) g.t[i] += m[i] * den_;
        out.push_back(g);
      }
      int i = 0;
      while (i < n_) {
        if (++m[i] <= hi[i]) break;
        m[i] = lo[i];
        ++i;
      }
      if (i == n_) break;
    }
  next_rep:;
  }
}

std::string CrystallographicGroup::describe(const GroupElement& g) const {
  std::ostringstream os;
  os << "(A=[";
  for (int i = 0; i < g.n; ++i) {
    if (i) os << ';';
    for (int j = 0; j < g.n; ++j) os << (j ? "," : "") << g.a(i, j);
  }
  os << "] t=[";
  for (int i = 0; i < g.n; ++i) os << (i ? "," : "") << to_string(g.translation(i));
  os << "])";
  return os.str();
}

namespace {

PointOp op(const std::string& name, std::vector<int> m, std::vector<Rational> s) { return PointOp{name, std::move(m), std::move(s)}; }

std::vector<Rational> zeros(int n) { return std::vector<Rational>(n, Rational(0)); }

std::vector<std::vector<Rational>> unit_lattice(int n) {
  std::vector<std::vector<Rational>> L(n, std::vector<Rational>(n, Rational(0)));
  for (int i = 0; i < n; ++i) L[i][i] = 1;
  return L;
}

}  // namespace

std::vector<std::string> catalog_names() { return {"Z", "Z2", "Z3", "Dinf", "p2", "Z2xZ2", "p4", "pm"}; }

GroupSpec catalog_spec(const std::string& name, int ball_radius) {
  GroupSpec s;
  s.name = name;
  s.ball_radius = ball_radius;
  if (name == "Z" || name == "Z2" || name == "Z3") {
    s.n = name == "Z" ? 1 : name[1] - '0';
    s.lattice = unit_lattice(s.n);
    std::vector<int> I(s.n * s.n, 0);
    for (int i = 0; i < s.n; ++i) I[i * s.n + i] = 1;
    s.point_group = {op("e", I, zeros(s.n))};
    for (int i = 1; i <= s.n; ++i) s.generators.push_back("t" + std::to_string(i));
  } else if (name == "Dinf") {
    s.n = 1;
    s.lattice = unit_lattice(1);
    s.point_group = {op("e", {1}, zeros(1)), op("r", {-1}, zeros(1))};
    s.generators = {"t1", "r"};
  } else if (name == "p2" || name == "Z2xZ2") {
    s.n = 2;
    s.lattice = unit_lattice(2);
    s.point_group = {op("e", {1, 0, 0, 1}, zeros(2)), op("r", {-1, 0, 0, -1}, zeros(2))};
    s.generators = {"t1", "t2", "r"};
  } else if (name == "p4") {
    s.n = 2;
    s.lattice = unit_lattice(2);
    s.point_group = {op("e", {1, 0, 0, 1}, zeros(2)), op("rho", {0, -1, 1, 0}, zeros(2)),
                     op("r", {-1, 0, 0, -1}, zeros(2)), op("rho3", {0, 1, -1, 0}, zeros(2))};
    s.generators = {"t1", "t2", "rho"};
  } else if (name == "pm") {
    s.n = 2;
    s.lattice = unit_lattice(2);
    s.point_group = {op("e", {1, 0, 0, 1}, zeros(2)), op("m", {1, 0, 0, -1}, zeros(2))};
    s.generators = {"t1", "t2", "m"};
  } else {
    throw GroupError("unknown catalog group '" + name + "'");
  }
  return s;
}

std::shared_ptr<CrystallographicGroup> make_group(const std::string& name, int ball_radius) {
  return std::make_shared<CrystallographicGroup>(catalog_spec(name, ball_radius));
}

namespace {

std::vector<std::vector<double>> grid_points(const Box& F, double step) {
  int n = F.dim();
  std::vector<std::vector<double>> axes(n);
  for (int i = 0; i < n; ++i) {
    if (!(F.hi[i] >= F.lo[i])) throw GroupError("degenerate box");
    int cnt = std::max(1, static_cast<int>(std::floor((F.hi[i] - F.lo[i]) / step + 1e-9)));
    for (int k = 0; k <= cnt; ++k) axes[i].push_back(F.lo[i] + (F.hi[i] - F.lo[i]) * k / cnt);
  }
  std::vector<std::vector<double>> pts{{}};
  for (int i = 0; i < n; ++i) {
    std::vector<std::vector<double>> next;
    for (const auto& p : pts)
      for (double v : axes[i]) {
        auto q = p;
        q.push_back(v);
        next.push_back(q);
      }
    pts.swap(next);
  }
  return pts;
}

struct DistRow {
  int len;
  double dmin, dmax;
  GroupElement g;
};

std::vector<DistRow> distance_rows(const CrystallographicGroup& G, const Box& F, int radius, double step) {
  if (F.dim() != G.dim() || F.lo.empty()) throw GroupError("empty or mismatched box");
  auto pts = grid_points(F, step);
  std::vector<DistRow> rows;
  std::vector<double> gy(pts.size() * G.dim());
  for (const auto& g : G.ball_view(radius)) {
    for (std::size_t k = 0; k < pts.size(); ++k) G.act(g, pts[k].data(), &gy[k * G.dim()]);
    double dmin = std::numeric_limits<double>::infinity(), dmax = 0;
    for (const auto& x : pts)
      for (std::size_t k = 0; k < pts.size(); ++k) {
        double d2 = 0;
        for (int i = 0; i < G.dim(); ++i) {
          double d = x[i] - gy[k * G.dim() + i];
          d2 += d * d;
        }
        double d = std::sqrt(d2);
        dmin = std::min(dmin, d);
        dmax = std::max(dmax, d);
      }
    rows.push_back({G.word_length(g), dmin, dmax, g});
  }
  return rows;
}

}  // namespace

bool milnor_svarc_holds(const CrystallographicGroup& G, const Box& F, double tau, double kappa, int radius,
                        double step, std::string* witness) {
  if (!(tau > 0) || !(kappa > 0)) throw GroupError("tau and kappa must be positive");
  for (const auto& row : distance_rows(G, F, radius, step)) {
    bool upper = row.len / tau + kappa > row.dmax;
    bool lower = row.dmin >= tau * row.len - kappa;
    if (!upper || !lower) {
      if (witness) {
        std::ostringstream os;
        os << (upper ? "lower" : "upper") << " bound fails at g=" << G.describe(row.g) << " l=" << row.len
           << " dmin=" << row.dmin << " dmax=" << row.dmax;
        *witness = os.str();
      }
      return false;
    }
  }
  return true;
}

MilnorSvarc milnor_svarc_constants(const CrystallographicGroup& G, const Box& F, int radius, double step) {
  auto rows = distance_rows(G, F, radius, step);
  double ratio_lo = std::numeric_limits<double>::infinity(), ratio_hi = 0;
  int outer = 0;
  for (const auto& r : rows) outer = std::max(outer, r.len);
  for (const auto& r : rows)
    if (r.len == outer && outer > 0) {
      ratio_lo = std::min(ratio_lo, r.dmin / r.len);
      ratio_hi = std::max(ratio_hi, r.dmax / r.len);
    }
  double tau_cap = 1.0;
  for (const auto& r : rows)
    if (r.len > 0) tau_cap = std::max(tau_cap, r.dmax / r.len);
  // largest admissible tau: the tail bounds decay like exp(-eta tau N)
  double best_tau = 0.5, best_kappa = std::numeric_limits<double>::infinity();
  for (int k = 400; k >= 1; --k) {
    double tau = tau_cap * k / 400.0;
    if (outer > 0 && (tau > 0.9 * ratio_lo || 1.0 / tau < 1.1 * ratio_hi)) continue;
    double kappa = 0;
    for (const auto& r : rows) kappa = std::max({kappa, tau * r.len - r.dmin, r.dmax - r.len / tau});
    best_kappa = std::max(kappa, 0.0) + 1e-6;
    best_tau = tau;
    break;
  }
  if (!std::isfinite(best_kappa)) throw GroupError("no admissible Milnor-Svarc constants on this ball");
  return {best_tau, best_kappa, radius, step};
}

GrowthFit fit_growth(const CrystallographicGroup& G) {
  // |ball(a+b)| <= |ball(a)| |ball(b)| gives |ball(m)| <= |ball(m0)|^{ceil(m/m0)} <= C e^{K m}
  // with C = |ball(m0)|, K = log|ball(m0)| / m0; m0 = the tabulated radius
  GrowthFit f;
  const int m0 = G.ball_radius();
  if (m0 < 1) {
    f.C = 1.0;
    f.K = std::log(1.0 + 2.0 * G.generators().size());
    return f;
  }
  const double b = static_cast<double>(G.ball_view(m0).size());
  f.C = b;
  f.K = std::log(b) / m0;
  return f;
}

ConjugacyContext::ConjugacyContext(std::shared_ptr<const CrystallographicGroup> G, const GroupElement& gamma)
    : G_(std::move(G)), gamma_(gamma) {
  if (!G_->contains(gamma_)) throw GroupError("gamma is not an element of " + G_->name());
  order_ = element_order(gamma_, 64);
  if (order_ == 0) throw GroupError("gamma is not a torsion element");
  for (const auto& h : G_->ball_view(G_->ball_radius())) {
    GroupElement key = compose(inverse(h), compose(gamma_, h));
    rep_of_conjugate_.emplace(key, h);
  }
}

bool ConjugacyContext::in_centralizer(const GroupElement& g) const { return compose(g, gamma_) == compose(gamma_, g); }

const GroupElement& ConjugacyContext::coset_rep(const GroupElement& g) const {
  GroupElement key = compose(inverse(g), compose(gamma_, g));
  auto it = rep_of_conjugate_.find(key);
  if (it == rep_of_conjugate_.end())
    throw UnreachableError("coset of " + G_->describe(g) + " has no representative within the tabulated ball");
  return it->second;
}

double ConjugacyContext::group_cutoff(const GroupElement& g) const { return coset_rep(g) == g ? 1.0 : 0.0; }

std::vector<GroupElement> ConjugacyContext::centralizer_in_ball(int r) const {
  std::vector<GroupElement> out;
  for (const auto& g : G_->ball_view(r))
    if (in_centralizer(g)) out.push_back(g);
  return out;
}

std::vector<GroupElement> ConjugacyContext::coset_reps(int r) const {
  std::vector<GroupElement> out;
  for (const auto& g : G_->ball_view(r))
    if (group_cutoff(g) == 1.0) out.push_back(g);
  return out;
}

std::vector<GroupElement> ConjugacyContext::conjugacy_class(int max_len) const {
  std::vector<GroupElement> out;
  GroupElement eta;
  for (const auto& g : G_->ball_view(max_len))
    if (find_conjugator(g, &eta)) out.push_back(g);
  return out;
}

bool ConjugacyContext::find_conjugator(const GroupElement& p, GroupElement* eta) const {
  auto it = rep_of_conjugate_.find(p);
  if (it != rep_of_conjugate_.end()) {
    if (eta) *eta = it->second;
    return true;
  }
  return exact_conjugator(p, eta);
}

bool ConjugacyContext::exact_conjugator(const GroupElement& p, GroupElement* eta) const {
  // eta = t_m p_f with gamma eta = eta p:  A_g A_f = A_f A_p,  (A_g - I) m den = A_f t_p + s_f - A_g s_f - t_g
  auto& mu = search_cache_->mu;
  auto& cache = search_cache_->map;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(p);
    if (it != cache.end()) {
      if (it->second.first && eta) *eta = it->second.second;
      return it->second.first;
    }
  }
  const int n = G_->dim();
  const long long den = G_->denominator();
  bool found = false;
  GroupElement result;
  for (const auto& f : G_->point_reps()) {
    GroupElement lhs = compose(gamma_, f), rhs = compose(f, p);
    if (lhs.A != rhs.A) continue;
    std::array<long long, kMaxDim> w{};
    long long wmax = 0;
    for (int i = 0; i < n; ++i) {
      w[i] = rhs.t[i] - lhs.t[i];  // = (A_g - I) m den
      wmax = std::max(wmax, std::llabs(w[i]));
    }
    long long B = wmax / den + 3;
    std::array<long long, kMaxDim> m{};
    for (int i = 0; i < n; ++i) m[i] = -B;
    while (true) {
      bool ok = true;
      for (int i = 0; i < n && ok; ++i) {
        long long s = -m[i];
        for (int j = 0; j < n; ++j) s += gamma_.a(i, j) * m[j];
        ok = s * den == w[i];
      }
      if (ok) {
        GroupElement cand = compose(G_->translation(std::span<const long long>(m.data(), n)), f);
        if (compose(inverse(cand), compose(gamma_, cand)) == p) {
          found = true;
          result = cand;
          break;
        }
      }
      int i = 0;
      while (i < n) {
        if (++m[i] <= B) break;
        m[i] = -B;
        ++i;
      }
      if (i == n) break;
    }
    if (found) break;
  }
  {
    std::lock_guard<std::mutex> lock(mu);
    if (cache.size() > 200000) cache.clear();
    cache.emplace(p, std::make_pair(found, result));
  }
  if (found && eta) *eta = result;
  return found;
}

int ConjugacyContext::tuple_length(std::span<const GroupElement> I) const {
  if (I.empty()) throw GroupError("empty tuple");
  int s = 0;
  for (std::size_t i = 0; i + 1 < I.size(); ++i) s += G_->word_length(compose(inverse(I[i]), I[i + 1]));
  s += G_->word_length(compose(inverse(I.back()), compose(gamma_, I.front())));
  return s;
}

}  // namespace lef
