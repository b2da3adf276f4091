#include "lefschetz/heat.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "lefschetz/manifold.hpp"

namespace lef {

namespace {

constexpr std::complex<double> kI(0.0, 1.0);

using CVector = Eigen::VectorXcd;

// z coth z and z / sinh z, with their series near 0
std::complex<double> z_coth(std::complex<double> z) {
  if (std::abs(z) < 1e-4) return 1.0 + z * z / 3.0;
  return z * std::cosh(z) / std::sinh(z);
}

std::complex<double> z_over_sinh(std::complex<double> z) {
  if (std::abs(z) < 1e-4) return 1.0 - z * z / 6.0;
  return z / std::sinh(z);
}

// G = pref exp(-(x^T A x + y^T A y - 2 y^T B x) / 4t)
struct MehlerParts {
  std::complex<double> pref;
  CMatrix A, B;
  double t = 0.0;

  std::complex<double> operator()(const double* x, const double* y, int n) const {
    std::complex<double> q = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) q += A(i, j) * (x[i] * x[j] + y[i] * y[j]) - 2.0 * B(i, j) * y[i] * x[j];
    return pref * std::exp(-q / (4.0 * t));
  }
};

MehlerParts mehler_parts(const CMatrix& R, double t) {
  if (!(t > 0)) throw HeatError("heat time must be positive");
  const int n = static_cast<int>(R.rows());
  if (R.cols() != n) throw HeatError("Mehler matrix must be square");
  MehlerParts p;
  p.t = t;
  CMatrix M = R * (t / 2.0);
  Eigen::ComplexEigenSolver<CMatrix> es(M);
  const CMatrix& V = es.eigenvectors();
  CMatrix Vi = V.inverse();
  CVector coth(n), sh(n), ex(n);
  std::complex<double> log_det = 0.0;
  for (int i = 0; i < n; ++i) {
    std::complex<double> z = es.eigenvalues()(i);
    coth(i) = z_coth(z);
    sh(i) = z_over_sinh(z);
    ex(i) = std::exp(z);
    log_det += std::log(sh(i));
  }
  p.A = V * coth.asDiagonal() * Vi;
  p.B = V * (sh.array() * ex.array()).matrix().asDiagonal() * Vi;
  p.pref = std::pow(4.0 * M_PI * t, -0.5 * n) * std::exp(0.5 * log_det);
  return p;
}

std::vector<std::complex<double>> series_product(const std::vector<std::complex<double>>& a,
                                                 const std::vector<std::complex<double>>& b) {
  std::vector<std::complex<double>> r(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; i + j < a.size(); ++j) r[i + j] += a[i] * b[j];
  return r;
}

double spectral_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues()(0);
}

// fixed 8-point rule on [1/2, 3/2] for the s-average
const Rule1D& s_rule() {
  static const Rule1D r = gauss_legendre(8, 0.5, 1.5);
  return r;
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix r(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return r;
}

}  // namespace

double gaussian_heat_kernel(const double* x, const double* y, double t, int n) {
  if (!(t > 0)) throw HeatError("heat time must be positive");
  double d2 = 0;
  for (int i = 0; i < n; ++i) d2 += (x[i] - y[i]) * (x[i] - y[i]);
  return std::pow(4.0 * M_PI * t, -0.5 * n) * std::exp(-d2 / (4.0 * t));
}

double gaussian_heat_kernel(const std::vector<double>& x, const std::vector<double>& y, double t) {
  if (x.size() != y.size()) throw HeatError("point dimension mismatch");
  return gaussian_heat_kernel(x.data(), y.data(), t, static_cast<int>(x.size()));
}

void gaussian_heat_gradient(const double* x, const double* y, double t, int n, double* grad) {
  double k = gaussian_heat_kernel(x, y, t, n);
  for (int i = 0; i < n; ++i) grad[i] = -(x[i] - y[i]) / (2.0 * t) * k;
}

// ---------------------------------------------------------------- Mehler

std::complex<double> mehler_kernel(const CMatrix& R, const std::vector<double>& x, const std::vector<double>& y,
                                   double t) {
  const int n = static_cast<int>(R.rows());
  if (static_cast<int>(x.size()) != n || static_cast<int>(y.size()) != n) throw HeatError("point dimension mismatch");
  return mehler_parts(R, t)(x.data(), y.data(), n);
}

double mehler_kernel(const Eigen::MatrixXd& R, const std::vector<double>& x, const std::vector<double>& y, double t) {
  return mehler_kernel(CMatrix(R.cast<std::complex<double>>()), x, y, t).real();
}

double mehler_pde_residual(const Eigen::MatrixXd& R, const std::vector<double>& x, const std::vector<double>& y,
                           double t, double h) {
  const int n = static_cast<int>(R.rows());
  auto G = [&](const std::vector<double>& p, double s) { return mehler_kernel(R, p, y, s); };
  // fourth-order central stencils
  auto d1 = [&](auto f, double step) {
    return (-f(2 * step) + 8 * f(step) - 8 * f(-step) + f(-2 * step)) / (12 * step);
  };
  auto d2 = [&](auto f, double step) {
    return (-f(2 * step) + 16 * f(step) - 30 * f(0.0) + 16 * f(-step) - f(-2 * step)) / (12 * step * step);
  };
  const double g0 = G(x, t);
  const double ht = h * t;
  double dt = d1([&](double e) { return G(x, t + e); }, ht);
  double rhs = 0;
  for (int i = 0; i < n; ++i) {
    auto along = [&](double e) {
      std::vector<double> p = x;
      p[i] += e;
      return G(p, t);
    };
    double a = 0;
    for (int j = 0; j < n; ++j) a += 0.25 * R(i, j) * x[j];
    rhs += d2(along, h) + 2.0 * a * d1(along, h) + a * a * g0;
  }
  double scale = std::max(std::abs(g0), std::abs(dt));
  if (scale == 0) scale = 1;
  return std::abs(dt - rhs) / scale;
}

ExteriorElement mehler_kernel_form(const ExteriorElement& R, const std::vector<double>& x,
                                   const std::vector<double>& y, double t) {
  if (!(t > 0)) throw HeatError("heat time must be positive");
  const int n = R.dim();
  const int cap = R.cap();
  if (static_cast<int>(x.size()) != n || static_cast<int>(y.size()) != n) throw HeatError("point dimension mismatch");
  if (!R.coefficient(0).isZero(0.0)) throw HeatError("form-valued R must have no degree-0 part");
  ExteriorElement M = R * (t / 2.0);
  const int len = cap / 2 + 2;
  std::vector<std::complex<double>> cosh_c(len, 0.0);
  double f = 1;
  for (int k = 0; k < len; ++k) {
    if (k > 0) f *= k;
    if (k % 2 == 0) cosh_c[k] = 1.0 / f;
  }
  std::vector<std::complex<double>> xs = x_over_sinh_coefficients(len);
  ExteriorElement A = nilpotent_series(series_product(cosh_c, xs), M);
  ExteriorElement B = wedge(nilpotent_series(xs, M), form_exp(M));
  ExteriorElement theta(cap, 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      theta += A.entry(i, j) * (x[i] * x[j] + y[i] * y[j]);
      theta += B.entry(i, j) * (-2.0 * y[i] * x[j]);
    }
  ExteriorElement det = sqrt_det_x_over_sinh(M);
  return wedge(det, form_exp(theta * (-1.0 / (4.0 * t)))) * std::pow(4.0 * M_PI * t, -0.5 * n);
}

ExteriorElement mehler_kernel_form_contour(const Eigen::MatrixXd& R0, const ExteriorElement& omega,
                                           const std::vector<double>& x, const std::vector<double>& y, double t,
                                           int points, double radius) {
  if (omega.dim() != 1) throw HeatError("omega must be a scalar form");
  if (!omega.coefficient(0).isZero(0.0)) throw HeatError("omega must have no degree-0 part");
  const int cap = omega.cap();
  const int kmax = cap / 2 + 1;
  std::vector<std::complex<double>> taylor(kmax + 1, 0.0);
  CMatrix R0c = R0.cast<std::complex<double>>();
  for (int j = 0; j < points; ++j) {
    double th = 2.0 * M_PI * j / points;
    std::complex<double> s = radius * std::exp(kI * th);
    std::complex<double> g = mehler_kernel(CMatrix(R0c * s), x, y, t);
    for (int k = 0; k <= kmax; ++k) taylor[k] += g * std::exp(-kI * (th * k));
  }
  ExteriorElement out(cap, 1);
  ExteriorElement power = ExteriorElement::scalar(cap, 1.0);
  for (int k = 0; k <= kmax; ++k) {
    if (k > 0) power = wedge(power, omega);
    out += power * (taylor[k] / (static_cast<double>(points) * std::pow(radius, k)));
  }
  return out;
}

ExteriorElement model_fixed_point_integral(const ExteriorElement& R_tan, const ExteriorElement& R_norm,
                                           const Eigen::MatrixXd& gamma_N, double s, double t) {
  if (!(s > 0) || !(t > 0)) throw HeatError("s and t must be positive");
  const double u = s * t;
  const int cap = std::max(R_tan.cap(), R_norm.cap());
  // forms on M^gamma: the cap is the fixed-set dimension
  const int a = R_tan.cap();
  const int k = static_cast<int>(gamma_N.rows());
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(k, k);
  double det = k > 0 ? (I - gamma_N).determinant() : 1.0;
  if (!(det > 1e-12)) throw HeatError("degenerate normal action");
  ExteriorElement tan = a > 0 ? sqrt_det_x_over_sinh(R_tan * (u / 2.0)) : ExteriorElement::scalar(cap, 1.0);
  ExteriorElement nor = k > 0 ? inv_sqrt_det_one_minus(gamma_N, R_norm * u) : ExteriorElement::scalar(cap, 1.0);
  return wedge(tan, nor) * (std::pow(4.0 * M_PI * u, -0.5 * a) / std::sqrt(det));
}

double model_fixed_point_numeric(const Eigen::MatrixXd& R_norm, const Eigen::MatrixXd& gamma_N, double u) {
  const int k = static_cast<int>(gamma_N.rows());
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(k, k);
  double det = (I - gamma_N).determinant();
  if (!(det > 1e-12)) throw HeatError("degenerate normal action");
  CMatrix E = CMatrix(-u * R_norm.cast<std::complex<double>>());
  Eigen::ComplexEigenSolver<CMatrix> es(E);
  CMatrix expE = es.eigenvectors() * es.eigenvalues().array().exp().matrix().asDiagonal() *
                 es.eigenvectors().inverse();
  std::complex<double> d2 = (CMatrix(I.cast<std::complex<double>>()) - gamma_N.cast<std::complex<double>>() * expE)
                                .determinant();
  return (1.0 / std::sqrt(det) / std::sqrt(d2)).real();
}

double normal_fiber_integral(const Eigen::MatrixXd& R_norm, const Eigen::MatrixXd& gamma_N, double u, int panels,
                             int order) {
  const int k = static_cast<int>(gamma_N.rows());
  if (k == 0) return 1.0;
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(k, k);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(I - gamma_N);
  double smin = svd.singularValues()(k - 1);
  if (!(smin > 1e-8)) throw HeatError("degenerate normal action");
  MehlerParts G = mehler_parts(CMatrix(R_norm.cast<std::complex<double>>()), u);
  const double L = std::sqrt(4.0 * u * 45.0) / smin;
  Box box{std::vector<double>(k, -L), std::vector<double>(k, L)};
  std::vector<Rule1D> rules(k, composite_gauss_legendre(-L, L, {}, panels, order));
  auto f = [&](std::span<const double> v) {
    std::vector<double> gv(k, 0.0);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) gv[i] += gamma_N(i, j) * v[j];
    return G(v.data(), gv.data(), k).real();
  };
  return integrate_tensor(f, box, rules);
}

// ---------------------------------------------------------------- Connes–Moscovici entries

HIdentity cm_h_identity(double x, double t) {
  if (!(t > 0)) throw HeatError("heat time must be positive");
  if (x < 0) throw HeatError("x must be nonnegative");
  HIdentity r;
  const double tx = t * x;
  r.lhs = tx == 0 ? 1.0 : -std::expm1(-tx) / tx * std::exp(-tx / 2.0);
  auto f = [tx](double s) { return std::exp(-s * tx); };
  r.rhs = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.5, 1.5, 20, 1e-15);
  return r;
}

double DecayCertificate::bound(double d, double t) const {
  return alpha * std::pow(t, -beta) * std::exp(-eta * d / std::sqrt(t));
}

CMatrix EquivariantKernel::operator()(const double* x, const double* y) const {
  CMatrix out(size, size);
  eval(x, y, out);
  return out;
}

FlatDiracModel::FlatDiracModel(std::shared_ptr<const CrystallographicGroup> G, int aux_dim, int sign, double eta_dec)
    : group(std::move(G)), n(group->dim()), aux(aux_dim), spin_sign(sign), eta(eta_dec) {
  if (n != 2) throw HeatError("flat Dirac model is implemented for n = 2");
  if (aux < 1) throw HeatError("auxiliary dimension must be positive");
  if (spin_sign != 1 && spin_sign != -1) throw HeatError("spin lift sign must be +1 or -1");
}

CMatrix FlatDiracModel::clifford(int j) const {
  CMatrix c(2, 2);
  if (j == 0)
    c << 0.0, kI, kI, 0.0;
  else if (j == 1)
    c << 0.0, 1.0, -1.0, 0.0;
  else
    throw HeatError("Clifford index out of range");
  return kron(c, CMatrix::Identity(aux, aux));
}

CMatrix FlatDiracModel::grading() const { return kI * clifford(0) * clifford(1); }

double FlatDiracModel::rotation_angle(const GroupElement& g) const {
  auto L = group->cartesian_linear(g);
  double det = L[0] * L[kMaxDim + 1] - L[1] * L[kMaxDim];
  if (det < 0) throw HeatError("orientation-reversing element has no spin lift: " + group->describe(g));
  return std::atan2(L[kMaxDim], L[0]);
}

CMatrix FlatDiracModel::sigma(const GroupElement& g) const {
  double th = rotation_angle(g);
  CMatrix s = CMatrix::Zero(2, 2);
  s(0, 0) = std::exp(-kI * (th / 2.0));
  s(1, 1) = std::exp(kI * (th / 2.0));
  return kron(s, CMatrix::Identity(aux, aux)) * static_cast<double>(spin_sign);
}

DecayCertificate certify(const std::function<double(double)>& scaled_norm, double beta, double eta) {
  DecayCertificate c;
  c.beta = beta;
  c.eta = eta;
  double sup = 0;
  const double rho_max = 8.0 * eta + 60.0;
  for (double rho = 0; rho <= rho_max; rho += 1e-3) sup = std::max(sup, scaled_norm(rho) * std::exp(eta * rho));
  c.alpha = 1.02 * sup;
  return c;
}

namespace {

// c(w) = sum_j w_j c_j
CMatrix clifford_of(const FlatDiracModel& m, const double* w) {
  return m.clifford(0) * w[0] + m.clifford(1) * w[1];
}

EquivariantKernel make_heat_eps(const FlatDiracModel& m, double t, bool graded) {
  EquivariantKernel K;
  K.name = graded ? "heat_eps" : "heat";
  K.n = m.n;
  K.size = m.spinor_dim();
  K.t = t;
  CMatrix P = graded ? m.grading() : CMatrix::Identity(K.size, K.size);
  const int n = m.n;
  K.eval = [P, t, n](const double* x, const double* y, CMatrix& out) { out = P * gaussian_heat_kernel(x, y, t, n); };
  K.scaled_norm = [n](double rho) { return std::pow(4.0 * M_PI, -0.5 * n) * std::exp(-rho * rho / 4.0); };
  K.cert = certify(K.scaled_norm, 0.5 * n, m.eta);
  return K;
}

EquivariantKernel make_half_dirac_eps(const FlatDiracModel& m, double t) {
  EquivariantKernel K;
  K.name = "half_dirac_eps";
  K.n = m.n;
  K.size = m.spinor_dim();
  K.t = t;
  CMatrix eps = m.grading();
  FlatDiracModel model = m;
  const int n = m.n;
  // √t c(∇_x) k_{t/2}(x, y) ε
  K.eval = [model, eps, t, n](const double* x, const double* y, CMatrix& out) {
    double g[kMaxDim];
    gaussian_heat_gradient(x, y, t / 2.0, n, g);
    for (int i = 0; i < n; ++i) g[i] *= std::sqrt(t);
    out = clifford_of(model, g) * eps;
  };
  K.scaled_norm = [n](double rho) { return rho * std::pow(2.0 * M_PI, -0.5 * n) * std::exp(-rho * rho / 2.0); };
  K.cert = certify(K.scaled_norm, 0.5 * n, m.eta);
  return K;
}

EquivariantKernel make_resolvent_dirac_eps(const FlatDiracModel& m, double t) {
  EquivariantKernel K;
  K.name = "resolvent_dirac_eps";
  K.n = m.n;
  K.size = m.spinor_dim();
  K.t = t;
  CMatrix eps = m.grading();
  FlatDiracModel model = m;
  const int n = m.n;
  // √t c(∇_x) κ_t(x, y) ε with κ_t = ∫_{1/2}^{3/2} k_{st} ds
  K.eval = [model, eps, t, n](const double* x, const double* y, CMatrix& out) {
    const Rule1D& r = s_rule();
    double g[kMaxDim] = {0, 0, 0};
    for (std::size_t q = 0; q < r.nodes.size(); ++q) {
      double gq[kMaxDim];
      gaussian_heat_gradient(x, y, r.nodes[q] * t, n, gq);
      for (int i = 0; i < n; ++i) g[i] += r.weights[q] * gq[i];
    }
    for (int i = 0; i < n; ++i) g[i] *= std::sqrt(t);
    out = clifford_of(model, g) * eps;
  };
  K.scaled_norm = [n](double rho) {
    const Rule1D& r = s_rule();
    double v = 0;
    for (std::size_t q = 0; q < r.nodes.size(); ++q) {
      double s = r.nodes[q];
      v += r.weights[q] * rho / (2.0 * s) * std::pow(4.0 * M_PI * s, -0.5 * n) * std::exp(-rho * rho / (4.0 * s));
    }
    return v;
  };
  K.cert = certify(K.scaled_norm, 0.5 * n, m.eta);
  return K;
}

}  // namespace

std::vector<EquivariantKernel> cm_entry_kernels(const FlatDiracModel& model, double t) {
  if (!(t > 0)) throw HeatError("heat time must be positive");
  return {make_heat_eps(model, t, true), make_resolvent_dirac_eps(model, t), make_half_dirac_eps(model, t)};
}

EquivariantKernel heat_kernel_spinor(const FlatDiracModel& model, double t) {
  if (!(t > 0)) throw HeatError("heat time must be positive");
  return make_heat_eps(model, t, false);
}

EquivariantKernel cm_matrix_kernel(const FlatDiracModel& model, double t) {
  auto e = cm_entry_kernels(model, t);
  EquivariantKernel K;
  K.name = "cm_matrix";
  K.n = model.n;
  const int s = model.spinor_dim();
  K.size = 2 * s;
  K.t = t;
  K.eval = [e, s](const double* x, const double* y, CMatrix& out) {
    out.resize(2 * s, 2 * s);
    CMatrix b(s, s);
    e[0].eval(x, y, b);
    out.topLeftCorner(s, s) = b;
    out.bottomRightCorner(s, s) = b;
    e[1].eval(x, y, b);
    out.topRightCorner(s, s) = b;
    e[2].eval(x, y, b);
    out.bottomLeftCorner(s, s) = b;
  };
  auto f0 = e[0].scaled_norm, f1 = e[1].scaled_norm, f2 = e[2].scaled_norm;
  K.scaled_norm = [f0, f1, f2](double rho) { return std::max(f0(rho), 0.0) + std::max(f1(rho), f2(rho)); };
  K.cert = certify(K.scaled_norm, 0.5 * model.n, model.eta);
  return K;
}

double certificate_margin(const EquivariantKernel& K, const std::vector<std::vector<double>>& xs,
                          const std::vector<std::vector<double>>& ys) {
  double margin = std::numeric_limits<double>::infinity();
  CMatrix out(K.size, K.size);
  for (const auto& x : xs)
    for (const auto& y : ys) {
      K.eval(x.data(), y.data(), out);
      double norm = spectral_norm(out);
      if (norm == 0) continue;
      double d = 0;
      for (int i = 0; i < K.n; ++i) d += (x[i] - y[i]) * (x[i] - y[i]);
      margin = std::min(margin, K.cert.bound(std::sqrt(d), K.t) / norm);
    }
  return margin;
}

double equivariance_defect(const EquivariantKernel& K, const FlatDiracModel& model,
                           const std::vector<std::vector<double>>& xs, const std::vector<std::vector<double>>& ys) {
  const CrystallographicGroup& G = *model.group;
  std::vector<GroupElement> gs = G.point_reps();
  for (const auto& g : G.generators()) gs.push_back(g);
  double defect = 0;
  CMatrix a(K.size, K.size), b(K.size, K.size);
  for (const auto& g : gs) {
    CMatrix s = model.sigma(g);
    if (K.size == 2 * s.rows()) {
      CMatrix d = CMatrix::Zero(K.size, K.size);
      d.topLeftCorner(s.rows(), s.rows()) = s;
      d.bottomRightCorner(s.rows(), s.rows()) = s;
      s = d;
    }
    CMatrix si = s.inverse();
    for (const auto& x : xs)
      for (const auto& y : ys) {
        std::vector<double> gx = G.act(g, x), gy = G.act(g, y);
        K.eval(gx.data(), gy.data(), a);
        K.eval(x.data(), y.data(), b);
        defect = std::max(defect, (a - s * b * si).cwiseAbs().maxCoeff());
      }
  }
  return defect;
}

// ---------------------------------------------------------------- constants

std::complex<double> ExactComplexConstant::value() const {
  double v = boost::rational_cast<double>(coefficient) * std::pow(M_PI, pi_power);
  std::complex<double> u = 1.0;
  for (int k = 0; k < ((i_power % 4) + 4) % 4; ++k) u *= kI;
  return v * u;
}

std::string ExactComplexConstant::text() const {
  std::ostringstream os;
  os << to_string(coefficient);
  int ip = ((i_power % 4) + 4) % 4;
  if (ip == 1) os << " * i";
  if (ip == 2) os << " * i^2";
  if (ip == 3) os << " * i^3";
  if (pi_power != 0) os << " * pi^" << pi_power;
  return os.str();
}

Rational alpha_exact(int q) {
  if (q < 0) throw HeatError("q must be nonnegative");
  // q! / (2q+1)! = 1 / ((q+1)(q+2)...(2q+1))
  long long d = 1;
  for (int k = q + 1; k <= 2 * q + 1; ++k) d *= k;
  return Rational(1, d);
}

ExactComplexConstant c_constant(int q) {
  if (q < 0) throw HeatError("q must be nonnegative");
  // 2 (-1)^q q! / ((2πi)^q (2q)!) = [2 (-1)^q q! / (2^q (2q)!)] π^{-q} i^{-q}
  long long num = 2, den = 1;
  for (int k = 1; k <= q; ++k) num *= k;
  for (int k = 1; k <= 2 * q; ++k) den *= k;
  for (int k = 0; k < q; ++k) den *= 2;
  Rational coef(q % 2 ? -num : num, den);
  int ip = ((-q) % 4 + 4) % 4;
  if (ip >= 2) {
    coef = -coef;
    ip -= 2;
  }
  ExactComplexConstant c;
  c.coefficient = coef;
  c.pi_power = -q;
  c.i_power = ip;
  return c;
}

double cube_integral(int q, const std::function<double(double)>& f, int order) {
  if (q == 0) return f(0.0);
  const Rule1D r = gauss_legendre(order, 1.0, 2.0);
  std::function<double(int, double)> rec = [&](int depth, double sum) -> double {
    NeumaierSum acc;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
      double s = sum + r.nodes[i];
      acc.add(r.weights[i] * (depth + 1 == q ? f(s) : rec(depth + 1, s)));
    }
    return acc.value();
  };
  return rec(0, 0.0);
}

Constants constants(int q, int n, int order) {
  if (q < 0) throw HeatError("q must be nonnegative");
  if (n <= 0 || n % 2) throw HeatError("n must be even and positive");
  Constants c;
  c.q = q;
  c.n = n;
  c.alpha = alpha_exact(q);
  c.alpha_numeric = cube_integral(q, [q](double s) { return std::pow(1.0 + s, -q - 1); }, order);
  c.beta = cube_integral(q, [q](double s) { return std::pow(1.0 + s, -q); }, order);
  c.delta = c.beta - 0.5 * (q + 2) * boost::rational_cast<double>(c.alpha);
  c.delta_direct = cube_integral(q, [q](double s) { return (s - 0.5 * q) * std::pow(1.0 + s, -q - 1); }, order);
  c.c_qn = c_constant(q);
  return c;
}

}  // namespace lef
