#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lefschetz/forms.hpp"
#include "lefschetz/group.hpp"

namespace lef {

class HeatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// (4πt)^{-n/2} e^{-|x-y|^2/4t}
double gaussian_heat_kernel(const double* x, const double* y, double t, int n);
double gaussian_heat_kernel(const std::vector<double>& x, const std::vector<double>& y, double t);
// x-gradient of the Gaussian kernel
void gaussian_heat_gradient(const double* x, const double* y, double t, int n, double* grad);

// ---------------------------------------------------------------- Mehler

// G_R(x,y,t) = (4πt)^{-n/2} det^{1/2}((tR/2)/sinh(tR/2)) exp(-Θ/4t); R may be complex (used for contour sums)
std::complex<double> mehler_kernel(const CMatrix& R, const std::vector<double>& x, const std::vector<double>& y,
                                   double t);
double mehler_kernel(const Eigen::MatrixXd& R, const std::vector<double>& x, const std::vector<double>& y, double t);
// ∂_t G - Σ_i (∂_i + ¼ (R x)_i)^2 G in x by central differences, relative to max(|G|, |∂_t G|)
double mehler_pde_residual(const Eigen::MatrixXd& R, const std::vector<double>& x, const std::vector<double>& y,
                           double t, double h = 1e-3);
// form-valued R (n x n matrix of 2-forms) through the series path
ExteriorElement mehler_kernel_form(const ExteriorElement& R, const std::vector<double>& x,
                                   const std::vector<double>& y, double t);
// R = R0 ⊗ ω with ω a scalar even form: Taylor coefficients of s -> G_{sR0} by a Cauchy sum, recombined with ω^k
ExteriorElement mehler_kernel_form_contour(const Eigen::MatrixXd& R0, const ExteriorElement& omega,
                                           const std::vector<double>& x, const std::vector<double>& y, double t,
                                           int points = 64, double radius = 0.5);

// ((4π u)^{-a/2} / det^{1/2}(1-γ_N)) det^{1/2}((uR'/2)/sinh(uR'/2)) det^{-1/2}(1 - γ_N e^{-uR''}), u = st
ExteriorElement model_fixed_point_integral(const ExteriorElement& R_tan, const ExteriorElement& R_norm,
                                           const Eigen::MatrixXd& gamma_N, double s, double t);
// scalar version for numeric R'' and a = 0
double model_fixed_point_numeric(const Eigen::MatrixXd& R_norm, const Eigen::MatrixXd& gamma_N, double u);
// ∫_{R^k} G_{R''}(v, γ v, u) dv by composite Gauss–Legendre on [-L, L]^k
double normal_fiber_integral(const Eigen::MatrixXd& R_norm, const Eigen::MatrixXd& gamma_N, double u,
                             int panels = 24, int order = 10);

// ---------------------------------------------------------------- Connes–Moscovici entries

struct HIdentity {
  double lhs = 0.0;
  double rhs = 0.0;
};
// ((1 - e^{-tx})/tx) e^{-tx/2} and ∫_{1/2}^{3/2} e^{-stx} ds (adaptive Gauss–Kronrod)
HIdentity cm_h_identity(double x, double t);

// |K(x,y)| <= alpha t^{-beta} e^{-eta d(x,y)/sqrt(t)}
struct DecayCertificate {
  double alpha = 0.0;
  double beta = 0.0;
  double eta = 1.0;
  double bound(double d, double t) const;
};

// matrix kernel at a fixed heat time t
struct EquivariantKernel {
  std::string name;
  int n = 0;
  int size = 1;
  double t = 0.0;
  std::function<void(const double* x, const double* y, CMatrix& out)> eval;
  DecayCertificate cert;
  // profile |K| as a function of rho = |x-y|/sqrt(t), times t^{beta}; used for certification
  std::function<double(double rho)> scaled_norm;

  CMatrix operator()(const double* x, const double* y) const;
};

struct FlatDiracModel {
  std::shared_ptr<const CrystallographicGroup> group;
  int n = 2;
  int aux = 1;        // auxiliary bundle dimension d
  int spin_sign = 1;  // ± choice of the spin lift
  double eta = 1.0;   // decay rate used for certificates

  explicit FlatDiracModel(std::shared_ptr<const CrystallographicGroup> G, int aux = 1, int spin_sign = 1,
                          double eta = 1.0);
  int spinor_dim() const { return 2 * aux; }
  CMatrix clifford(int j) const;  // c(e_j) ⊗ 1_aux
  CMatrix grading() const;        // ε = i c1 c2 ⊗ 1_aux
  // σ(g) from the rotation angle of the linear part: diag(e^{-iθ/2}, e^{iθ/2}) ⊗ 1_aux, times spin_sign
  CMatrix sigma(const GroupElement& g) const;
  double rotation_angle(const GroupElement& g) const;
};

// e^{-tD^2}ε, ((1-e^{-tD^2})/tD^2) e^{-tD^2/2} √t D ε, e^{-tD^2/2} √t D ε (the fourth entry repeats the first)
std::vector<EquivariantKernel> cm_entry_kernels(const FlatDiracModel& model, double t);
// the 2x2 block matrix R(tD) of the entries above, size 2 * spinor_dim
EquivariantKernel cm_matrix_kernel(const FlatDiracModel& model, double t);
// e^{-tD^2} with no grading (spinor identity)
EquivariantKernel heat_kernel_spinor(const FlatDiracModel& model, double t);

// alpha from sup_rho scaled_norm(rho) e^{eta rho}, with a 2% margin
DecayCertificate certify(const std::function<double(double)>& scaled_norm, double beta, double eta);
// min over sampled (x, y) of bound / |K|; >= 1 means the certificate holds on the samples
double certificate_margin(const EquivariantKernel& K, const std::vector<std::vector<double>>& xs,
                          const std::vector<std::vector<double>>& ys);
// max |K(gx,gy) - σ(g) K(x,y) σ(g)^{-1}| over the point group and samples
double equivariance_defect(const EquivariantKernel& K, const FlatDiracModel& model,
                           const std::vector<std::vector<double>>& xs, const std::vector<std::vector<double>>& ys);

// ---------------------------------------------------------------- constants

struct ExactComplexConstant {
  Rational coefficient;  // c = coefficient · π^{pi_power} · i^{i_power}
  int pi_power = 0;
  int i_power = 0;
  std::complex<double> value() const;
  std::string text() const;
};

struct Constants {
  int q = 0;
  int n = 0;
  Rational alpha;               // q!/(2q+1)!
  double alpha_numeric = 0.0;   // ∫_{[1,2]^q} (1+Σs)^{-q-1}
  double beta = 0.0;            // ∫_{[1,2]^q} (1+Σs)^{-q}
  double delta = 0.0;           // β_q - ((q+2)/2) α_q
  double delta_direct = 0.0;    // ∫ (Σs - q/2)(1+Σs)^{-q-1}
  ExactComplexConstant c_qn;    // 2(-1)^q q! / ((2πi)^q (2q)!)
};

Rational alpha_exact(int q);
ExactComplexConstant c_constant(int q);
// iterated Gauss–Legendre of the given order per axis
double cube_integral(int q, const std::function<double(double sum)>& f, int order = 32);
Constants constants(int q, int n, int order = 32);

}  // namespace lef
