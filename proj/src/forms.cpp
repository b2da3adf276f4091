#include "lefschetz/forms.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <memory>
#include <sstream>

namespace lef {

namespace {
constexpr std::complex<double> kI(0.0, 1.0);
}

int mask_degree(Mask m) { return std::popcount(m); }

int wedge_sign(Mask a, Mask b) {
  if (a & b) return 0;
  // count pairs (i in a, j in b) with i > j
  int inv = 0;
  for (Mask bb = b; bb; bb &= bb - 1) {
    int j = std::countr_zero(bb);
    inv += std::popcount(a >> (j + 1));
  }
  return (inv % 2) ? -1 : 1;
}

std::string mask_text(Mask m) {
  if (m == 0) return "1";
  std::string s;
  for (int i = 0; m >> i; ++i)
    if ((m >> i) & 1u) s += (s.empty() ? "" : "^") + std::string("dx") + std::to_string(i + 1);
  return s;
}

ExteriorElement::ExteriorElement(int cap, int d) : cap_(cap), d_(d) {
  if (cap < 0 || cap > 16) throw FormError("form cap must be in 0..16");
  if (d < 1) throw FormError("coefficient dimension must be >= 1");
}

ExteriorElement ExteriorElement::scalar(int cap, std::complex<double> v) {
  ExteriorElement e(cap, 1);
  e.add_term(0, CMatrix::Constant(1, 1, v));
  return e;
}

ExteriorElement ExteriorElement::constant(int cap, const CMatrix& m) {
  if (m.rows() != m.cols()) throw FormError("coefficient must be square");
  ExteriorElement e(cap, static_cast<int>(m.rows()));
  e.add_term(0, m);
  return e;
}

ExteriorElement ExteriorElement::identity(int cap, int d) { return constant(cap, CMatrix::Identity(d, d)); }

ExteriorElement ExteriorElement::basis(int cap, Mask m, const CMatrix& coeff) {
  ExteriorElement e(cap, static_cast<int>(coeff.rows()));
  e.add_term(m, coeff);
  return e;
}

ExteriorElement ExteriorElement::basis(int cap, Mask m, std::complex<double> v) {
  return basis(cap, m, CMatrix::Constant(1, 1, v));
}

ExteriorElement ExteriorElement::monomial(int cap, const std::vector<int>& indices, std::complex<double> v) {
  ExteriorElement e = scalar(cap, v);
  for (int i : indices) {
    if (i < 1 || i > cap) throw FormError("form index out of range");
    e = wedge(e, basis(cap, 1u << (i - 1), 1.0));
  }
  return e;
}

CMatrix ExteriorElement::coefficient(Mask m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? CMatrix::Zero(d_, d_) : it->second;
}

std::complex<double> ExteriorElement::scalar_coefficient(Mask m) const {
  if (d_ != 1) throw FormError("scalar_coefficient on a matrix-valued form");
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second(0, 0);
}

void ExteriorElement::add_term(Mask m, const CMatrix& c) {
  if (c.rows() != d_ || c.cols() != d_) throw FormError("coefficient has wrong size");
  if (cap_ < 32 && (m >> cap_) != 0) return;  // above the cap
  auto it = terms_.find(m);
  if (it == terms_.end())
    terms_.emplace(m, c);
  else
    it->second += c;
}

ExteriorElement ExteriorElement::degree_part(int k) const {
  ExteriorElement e(cap_, d_);
  for (const auto& [m, c] : terms_)
    if (mask_degree(m) == k) e.terms_.emplace(m, c);
  return e;
}

int ExteriorElement::min_degree(double tol) const {
  int best = cap_ + 1;
  for (const auto& [m, c] : terms_)
    if (c.cwiseAbs().maxCoeff() > tol) best = std::min(best, mask_degree(m));
  return best;
}

bool ExteriorElement::is_zero(double tol) const { return max_abs() <= tol; }

double ExteriorElement::max_abs() const {
  double m = 0;
  for (const auto& [k, c] : terms_)
    if (c.size()) m = std::max(m, c.cwiseAbs().maxCoeff());
  return m;
}

void ExteriorElement::require_same(const ExteriorElement& o) const {
  if (cap_ != o.cap_) throw FormError("form cap mismatch");
  if (d_ != o.d_) throw FormError("coefficient dimension mismatch");
}

ExteriorElement ExteriorElement::operator+(const ExteriorElement& o) const {
  ExteriorElement r = *this;
  r += o;
  return r;
}

ExteriorElement& ExteriorElement::operator+=(const ExteriorElement& o) {
  require_same(o);
  for (const auto& [m, c] : o.terms_) add_term(m, c);
  return *this;
}

ExteriorElement ExteriorElement::operator-() const { return *this * -1.0; }

ExteriorElement ExteriorElement::operator-(const ExteriorElement& o) const { return *this + (-o); }

ExteriorElement ExteriorElement::operator*(std::complex<double> s) const {
  ExteriorElement r = *this;
  for (auto& [m, c] : r.terms_) c *= s;
  return r;
}

ExteriorElement ExteriorElement::entry(int i, int j) const {
  ExteriorElement e(cap_, 1);
  for (const auto& [m, c] : terms_) e.terms_.emplace(m, CMatrix::Constant(1, 1, c(i, j)));
  return e;
}

ExteriorElement ExteriorElement::trace() const {
  ExteriorElement e(cap_, 1);
  for (const auto& [m, c] : terms_) e.terms_.emplace(m, CMatrix::Constant(1, 1, c.trace()));
  return e;
}

std::string ExteriorElement::to_string(int precision) const {
  std::ostringstream os;
  os << std::setprecision(precision);
  bool first = true;
  for (const auto& [m, c] : terms_) {
    if (c.cwiseAbs().maxCoeff() == 0.0) continue;
    if (!first) os << " + ";
    first = false;
    if (d_ == 1)
      os << "(" << c(0, 0).real() << (c(0, 0).imag() < 0 ? "" : "+") << c(0, 0).imag() << "i)";
    else
      os << "[matrix " << d_ << "x" << d_ << "]";
    os << " " << mask_text(m);
  }
  return first ? "0" : os.str();
}

ExteriorElement wedge(const ExteriorElement& a, const ExteriorElement& b) {
  if (a.cap() != b.cap()) throw FormError("form cap mismatch");
  if (a.dim() != b.dim()) throw FormError("coefficient dimension mismatch");
  ExteriorElement r(a.cap(), a.dim());
  for (const auto& [ma, A] : a.terms())
    for (const auto& [mb, B] : b.terms()) {
      int s = wedge_sign(ma, mb);
      if (s == 0) continue;
      r.add_term(ma | mb, static_cast<double>(s) * (A * B));
    }
  return r;
}

double max_abs_diff(const ExteriorElement& a, const ExteriorElement& b) { return (a - b).max_abs(); }

ExteriorElement nilpotent_series(const std::vector<std::complex<double>>& coeffs, const ExteriorElement& N) {
  if (!N.coefficient(0).isZero(0.0)) throw FormError("series argument has a degree-0 part");
  ExteriorElement result(N.cap(), N.dim());
  ExteriorElement power = ExteriorElement::identity(N.cap(), N.dim());
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    if (k > 0) power = wedge(power, N);
    if (power.is_zero()) break;
    result += power * coeffs[k];
  }
  return result;
}

std::vector<std::complex<double>> series_inverse(const std::vector<std::complex<double>>& c) {
  if (c.empty() || c[0] == 0.0) throw FormError("series not invertible");
  std::vector<std::complex<double>> r(c.size());
  r[0] = 1.0 / c[0];
  for (std::size_t n = 1; n < c.size(); ++n) {
    std::complex<double> s = 0;
    for (std::size_t k = 1; k <= n; ++k) s += c[k] * r[n - k];
    r[n] = -s / c[0];
  }
  return r;
}

std::vector<std::complex<double>> exp_coefficients(int len) {
  std::vector<std::complex<double>> c(len);
  double f = 1;
  for (int k = 0; k < len; ++k) {
    if (k > 0) f *= k;
    c[k] = 1.0 / f;
  }
  return c;
}

std::vector<std::complex<double>> log1p_coefficients(int len) {
  std::vector<std::complex<double>> c(len, 0.0);
  for (int k = 1; k < len; ++k) c[k] = ((k % 2) ? 1.0 : -1.0) / k;
  return c;
}

std::vector<std::complex<double>> x_over_sinh_coefficients(int len) {
  // sinh x / x = sum_m x^{2m} / (2m+1)!
  std::vector<std::complex<double>> s(len, 0.0);
  double f = 1;
  for (int k = 0; k < len; ++k) {
    if (k > 0) f *= static_cast<double>(k + 1);
    if (k % 2 == 0) s[k] = 1.0 / f;
  }
  return series_inverse(s);
}

namespace {

int series_length(const ExteriorElement& X) {
  int md = std::max(1, X.min_degree());
  return X.cap() / md + 2;
}

ExteriorElement split_scalar(const ExteriorElement& X, CMatrix* X0) {
  *X0 = X.coefficient(0);
  ExteriorElement N = X;
  N.add_term(0, -*X0);
  return N;
}

}  // namespace

ExteriorElement form_exp(const ExteriorElement& X) {
  CMatrix X0;
  ExteriorElement N = split_scalar(X, &X0);
  ExteriorElement eN = nilpotent_series(exp_coefficients(series_length(N)), N);
  if (X0.isZero(0.0)) return eN;
  // exp(X0 + N) = exp(X0) exp(N) needs [X0, N] = 0
  for (const auto& [m, c] : N.terms())
    if (!(X0 * c - c * X0).isZero(1e-14)) throw FormError("form_exp: degree-0 part does not commute");
  Eigen::ComplexEigenSolver<CMatrix> es(X0);
  CMatrix E = es.eigenvectors() * es.eigenvalues().array().exp().matrix().asDiagonal() * es.eigenvectors().inverse();
  return wedge(ExteriorElement::constant(X.cap(), E), eN);
}

ExteriorElement form_log1p(const ExteriorElement& N) {
  return nilpotent_series(log1p_coefficients(series_length(N)), N);
}

ExteriorElement form_inverse(const ExteriorElement& X) {
  CMatrix X0;
  ExteriorElement N = split_scalar(X, &X0);
  Eigen::FullPivLU<CMatrix> lu(X0);
  if (!lu.isInvertible()) throw FormError("form_inverse: degree-0 part is singular");
  CMatrix X0i = lu.inverse();
  // (X0 + N)^{-1} = (1 + X0^{-1} N)^{-1} X0^{-1}
  ExteriorElement M = wedge(ExteriorElement::constant(X.cap(), X0i), N);
  int len = series_length(M);
  std::vector<std::complex<double>> geo(len);
  for (int k = 0; k < len; ++k) geo[k] = (k % 2) ? -1.0 : 1.0;
  return wedge(nilpotent_series(geo, M), ExteriorElement::constant(X.cap(), X0i));
}

ExteriorElement sqrt_det_x_over_sinh(const ExteriorElement& X) {
  ExteriorElement F = nilpotent_series(x_over_sinh_coefficients(series_length(X)), X);
  ExteriorElement L = form_log1p(F - ExteriorElement::identity(X.cap(), X.dim())).trace();
  return form_exp(L * 0.5);
}

ExteriorElement inv_sqrt_det_one_minus(const Eigen::MatrixXd& Q, const ExteriorElement& Y) {
  const int k = static_cast<int>(Q.rows());
  if (Q.cols() != k || Y.dim() != k) throw FormError("normal data size mismatch");
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(k, k);
  Eigen::EigenSolver<Eigen::MatrixXd> es(Q);
  for (int i = 0; i < k; ++i)
    if (std::abs(es.eigenvalues()(i) - 1.0) < 1e-10) throw FormError("degenerate normal action");
  double det = (I - Q).determinant();
  if (!(det > 0)) throw FormError("degenerate normal action");
  const int cap = Y.cap();
  if (k == 0) return ExteriorElement::scalar(cap, 1.0);
  CMatrix A = ((I - Q).inverse() * Q).cast<std::complex<double>>();
  // 1 - e^{-Y}
  ExteriorElement one_minus = ExteriorElement::identity(cap, k) - form_exp(-Y);
  ExteriorElement M = wedge(ExteriorElement::constant(cap, A), one_minus);
  ExteriorElement L = form_log1p(M).trace();
  return form_exp(L * -0.5) * (1.0 / std::sqrt(det));
}

ExteriorElement analytic_series(const std::string& fn, const ExteriorElement& X) {
  if (fn == "exp") return form_exp(X);
  if (fn == "log1p") return form_log1p(X);
  if (fn == "xsinhx" || fn == "sqrt_det_x_over_sinh") return sqrt_det_x_over_sinh(X);
  if (fn == "inverse") return form_inverse(X);
  throw FormError("unknown analytic function '" + fn + "'");
}

CurvatureData CurvatureData::flat(int a, const Eigen::MatrixXd& normal_rotation, const CMatrix& gamma_V) {
  CurvatureData cd;
  cd.a = a;
  cd.R_tangent = ExteriorElement(a, std::max(1, a));
  int k = static_cast<int>(normal_rotation.rows());
  cd.R_normal = ExteriorElement(a, std::max(1, k));
  cd.normal_rotation = normal_rotation;
  cd.F_V = ExteriorElement(a, static_cast<int>(gamma_V.rows()));
  cd.gamma_V = gamma_V;
  return cd;
}

void CurvatureData::validate() const {
  auto antisym = [](const ExteriorElement& R) {
    for (const auto& [m, c] : R.terms())
      if (!(c + c.transpose()).isZero(1e-12)) return false;
    return true;
  };
  if (R_tangent.cap() != a || R_normal.cap() != a || F_V.cap() != a) throw FormError("curvature caps must equal a");
  if (!antisym(R_tangent) || !antisym(R_normal)) throw FormError("curvature matrices must be antisymmetric");
  const int k = static_cast<int>(normal_rotation.rows());
  if (k > 0) {
    Eigen::MatrixXd I = Eigen::MatrixXd::Identity(k, k);
    if (!(normal_rotation.transpose() * normal_rotation - I).isZero(1e-10))
      throw FormError("normal rotation is not orthogonal");
    if (R_normal.dim() != k) throw FormError("normal curvature has wrong size");
  }
  if (gamma_V.rows() != F_V.dim()) throw FormError("auxiliary twist size mismatch");
}

ExteriorElement a_hat_form(const ExteriorElement& R_tangent) {
  const std::complex<double> s = 1.0 / (4.0 * M_PI * kI);
  return sqrt_det_x_over_sinh(R_tangent * s);
}

ExteriorElement as_gamma_form(const CurvatureData& cd) {
  cd.validate();
  const int a = cd.a;
  const std::complex<double> s = 1.0 / (2.0 * M_PI * kI);
  ExteriorElement ahat = a > 0 ? a_hat_form(cd.R_tangent) : ExteriorElement::scalar(a, 1.0);
  ExteriorElement normal = cd.normal_rotation.rows() > 0
                               ? inv_sqrt_det_one_minus(cd.normal_rotation, cd.R_normal * s)
                               : ExteriorElement::scalar(a, 1.0);
  ExteriorElement ch = wedge(ExteriorElement::constant(a, cd.gamma_V), form_exp(cd.F_V * -s)).trace();
  return wedge(wedge(ahat, normal), ch);
}

// ---------------------------------------------------------------- Getzler orders

namespace {

struct GNode {
  enum Kind { Atom, Prod, Sum, Comm } kind = Atom;
  std::string atom;
  std::vector<std::shared_ptr<GNode>> kids;
};
using GPtr = std::shared_ptr<GNode>;

const std::map<std::string, int>& atom_orders() {
  static const std::map<std::string, int> m{
      {"dx", 1}, {"dt", 2},  {"cl", 1},  {"x", -1},  {"f", 0},   {"cdf", 1},
      {"D2", 2}, {"H", -2},  {"Hh", -2}, {"H3", -2}, {"R34", 2}, {"Q", -4},
  };
  return m;
}

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}
  GPtr parse() {
    GPtr e = sum();
    skip();
    if (pos_ != s_.size()) throw FormError("unexpected '" + s_.substr(pos_) + "' in Getzler word");
    return e;
  }

 private:
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool peek(char c) {
    skip();
    return pos_ < s_.size() && s_[pos_] == c;
  }
  GPtr sum() {
    auto n = std::make_shared<GNode>();
    n->kind = GNode::Sum;
    n->kids.push_back(prod());
    while (peek('+') || peek('-')) {
      ++pos_;
      n->kids.push_back(prod());
    }
    return n->kids.size() == 1 ? n->kids[0] : n;
  }
  GPtr prod() {
    auto n = std::make_shared<GNode>();
    n->kind = GNode::Prod;
    while (true) {
      skip();
      if (pos_ >= s_.size() || s_[pos_] == ')' || s_[pos_] == ']' || s_[pos_] == ',' || s_[pos_] == '+' ||
          s_[pos_] == '-')
        break;
      if (s_[pos_] == '*') {
        ++pos_;
        continue;
      }
      n->kids.push_back(factor());
    }
    if (n->kids.empty()) throw FormError("empty product in Getzler word");
    return n->kids.size() == 1 ? n->kids[0] : n;
  }
  GPtr factor() {
    skip();
    if (s_[pos_] == '(') {
      ++pos_;
      GPtr e = sum();
      expect(')');
      return e;
    }
    if (s_[pos_] == '[') {
      ++pos_;
      auto n = std::make_shared<GNode>();
      n->kind = GNode::Comm;
      n->kids.push_back(sum());
      expect(',');
      n->kids.push_back(sum());
      expect(']');
      return n;
    }
    std::size_t b = pos_;
    while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (b == pos_) throw FormError("unexpected character in Getzler word");
    auto n = std::make_shared<GNode>();
    n->atom = s_.substr(b, pos_ - b);
    if (!atom_orders().count(n->atom)) throw FormError("unknown Getzler atom '" + n->atom + "'");
    return n;
  }
  void expect(char c) {
    if (!peek(c)) throw FormError(std::string("expected '") + c + "' in Getzler word");
    ++pos_;
  }
  const std::string& s_;
  std::size_t pos_ = 0;
};

int add_orders(int a, int b) {
  if (a == kGetzlerVanishes || b == kGetzlerVanishes) return kGetzlerVanishes;
  return a + b;
}

int order_of(const GPtr& n);

bool is_resolvent(const std::string& a) { return a == "H" || a == "Hh" || a == "H3"; }
bool is_multiplier(const std::string& a) { return a == "f" || a == "cdf"; }

int comm_order(const GPtr& A, const GPtr& X) {
  // Leibniz in the second slot
  if (X->kind == GNode::Prod) {
    int best = kGetzlerVanishes;
    for (std::size_t i = 0; i < X->kids.size(); ++i) {
      int o = comm_order(A, X->kids[i]);
      for (std::size_t j = 0; j < X->kids.size(); ++j)
        if (j != i) o = add_orders(o, order_of(X->kids[j]));
      best = std::max(best, o);
    }
    return best;
  }
  if (X->kind == GNode::Sum) {
    int best = kGetzlerVanishes;
    for (const auto& k : X->kids) best = std::max(best, comm_order(A, k));
    return best;
  }
  if (A->kind == GNode::Prod) {
    int best = kGetzlerVanishes;
    for (std::size_t i = 0; i < A->kids.size(); ++i) {
      int o = comm_order(A->kids[i], X);
      for (std::size_t j = 0; j < A->kids.size(); ++j)
        if (j != i) o = add_orders(o, order_of(A->kids[j]));
      best = std::max(best, o);
    }
    return best;
  }
  if (A->kind == GNode::Sum) {
    int best = kGetzlerVanishes;
    for (const auto& k : A->kids) best = std::max(best, comm_order(k, X));
    return best;
  }
  if (A->kind == GNode::Comm || X->kind == GNode::Comm)
    throw FormError("nested commutators are not catalogued");
  const std::string& a = A->atom;
  const std::string& x = X->atom;
  if (a == "Q") {
    // Q = Hh H3
    auto hh = std::make_shared<GNode>();
    hh->atom = "Hh";
    auto h3 = std::make_shared<GNode>();
    h3->atom = "H3";
    auto p = std::make_shared<GNode>();
    p->kind = GNode::Prod;
    p->kids = {hh, h3};
    return comm_order(p, X);
  }
  if (x == "Q" || (is_resolvent(x) && !is_resolvent(a)) || (x == "D2" && a != "D2") || (x == "R34" && a != "R34"))
    return comm_order(X, A);  // [A, X] = -[X, A]
  if (is_multiplier(a) && is_multiplier(x)) {
    if (a == "f" || x == "f") return kGetzlerVanishes;  // scalar functions commute with everything here
    throw FormError("[cdf, cdf] is not catalogued");
  }
  if (a == "D2" || a == "R34") {
    // [D^2, f] has order 1, [D^2, c(df)] order 2
    if (x == "f") return 1;
    if (x == "cdf") return 2;
    if (x == "D2" || x == "R34") return kGetzlerVanishes;
    throw FormError("[" + a + ", " + x + "] is not catalogued");
  }
  if (is_resolvent(a)) {
    if (is_resolvent(x)) return kGetzlerVanishes;
    // [R, X] = R [X, D^2-part] R up to sign
    auto d2 = std::make_shared<GNode>();
    d2->atom = "D2";
    int inner = comm_order(d2, X);
    if (inner == kGetzlerVanishes) return inner;
    return atom_orders().at(a) + inner + atom_orders().at(a);
  }
  throw FormError("[" + a + ", " + x + "] is not catalogued");
}

int order_of(const GPtr& n) {
  switch (n->kind) {
    case GNode::Atom:
      return atom_orders().at(n->atom);
    case GNode::Prod: {
      int s = 0;
      for (const auto& k : n->kids) s = add_orders(s, order_of(k));
      return s;
    }
    case GNode::Sum: {
      int best = kGetzlerVanishes;
      for (const auto& k : n->kids) best = std::max(best, order_of(k));
      return best;
    }
    case GNode::Comm:
      return comm_order(n->kids[0], n->kids[1]);
  }
  return kGetzlerVanishes;
}

}  // namespace

int getzler_order(const std::string& expr) {
  std::string copy = expr;
  Parser p(copy);
  return order_of(p.parse());
}

std::vector<std::string> getzler_atoms() {
  std::vector<std::string> out;
  for (const auto& [k, v] : atom_orders()) out.push_back(k);
  return out;
}

bool getzler_vanishes(const std::vector<int>& orders, int k) {
  long s = 0;
  for (int o : orders) {
    if (o == kGetzlerVanishes) return true;
    s += o;
  }
  return s < -2L * k;
}

}  // namespace lef
