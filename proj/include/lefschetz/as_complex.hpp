#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "lefschetz/cochain.hpp"
#include "lefschetz/forms.hpp"
#include "lefschetz/group.hpp"
#include "lefschetz/heat.hpp"
#include "lefschetz/manifold.hpp"

namespace lef {

class ASError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// points are flat: (x_0, ..., x_k), n coordinates each
using PointTuple = std::span<const double>;

struct InvariantASCochain {
  int degree = 0;
  int n = 0;
  std::string name;
  std::function<Complex(PointTuple)> eval;
  Complex operator()(PointTuple x) const { return eval(x); }
};

// F(eta, x_0, ...) = 0 unless |eta^{-1} x_0 - center| < radius
struct SupportCertificate {
  std::vector<double> center;
  double radius = 0.0;
  bool valid() const { return radius > 0 && !center.empty(); }
};

struct ExtendedASCochain {
  int degree = 0;
  int n = 0;
  std::string name;
  std::function<Complex(const GroupElement&, PointTuple)> eval;
  SupportCertificate support;
  std::shared_ptr<const CrystallographicGroup> group;

  Complex operator()(const GroupElement& eta, PointTuple x) const { return eval(eta, x); }
  // every eta with possibly nonzero F(eta, x_0, ...)
  void candidates(const double* x0, std::vector<GroupElement>& out) const;
};

using CutoffPtr = std::shared_ptr<const BumpCutoff>;
using ContextPtr = std::shared_ptr<const ConjugacyContext>;

InvariantASCochain psi_inv(const GroupCochain& c, CutoffPtr chi);
ExtendedASCochain psi_ext(const GroupCochain& c, CutoffPtr chi);
// usual Alexander–Spanier coboundary
InvariantASCochain delta_inv(const InvariantASCochain& f);
ExtendedASCochain eps_ext(const ExtendedASCochain& F, CutoffPtr chi);
ExtendedASCochain map_I(const InvariantASCochain& f, CutoffPtr chi);
InvariantASCochain map_P(const ExtendedASCochain& F);
ExtendedASCochain homotopy_H(const ExtendedASCochain& F);
ExtendedASCochain zero_extended(int degree, CutoffPtr chi);
ExtendedASCochain linear_combination(const ExtendedASCochain& a, Complex sa, const ExtendedASCochain& b, Complex sb);

// ---------------------------------------------------------------- kernels and pairings

// w M (4πs)^{-n/2} e^{-|x-y-v|^2/4s}: invariant under lattice translations, and under the whole group when v = 0.
// Closed under composition, non-commuting when the weights M do not commute.
struct GaussianTestKernel {
  int n = 1;
  double s = 0.1;
  Complex weight = 1.0;
  CMatrix matrix;              // empty -> 1 x 1
  std::vector<double> drift;   // empty -> 0
  EquivariantKernel kernel(double eta = 2.0) const;
  GaussianTestKernel compose(const GaussianTestKernel& o) const;
};
std::vector<EquivariantKernel> test_kernels(const std::vector<GaussianTestKernel>& g, double eta = 2.0);

struct TailConstants;

// group action on kernel fibres; empty -> identity
using KernelAction = std::function<CMatrix(const GroupElement&)>;

struct PairingOptions {
  int trunc_radius = 8;           // |I|_gamma or l(nu^{-1} gamma nu) bound
  int order = 8;                  // Gauss–Legendre order per panel
  double max_panel = 0.0;         // longest panel; 0 -> sqrt of the smallest kernel time
  double reach_tol = 1e-13;       // kernel windows: |K| below reach_tol * sup |K| is dropped
  std::size_t qmc_samples = 4096;
  int qmc_replicates = 8;
  std::uint64_t seed = 12345;
  int max_tensor_dim = 3;         // above this, quasi-Monte Carlo
  std::size_t max_matrix = 600;   // node-matrix size limit for the trace formulation
  bool antisymmetrize = false;
  bool error_estimate = true;     // second pass at a lower order
  KernelAction action;
  const TailConstants* tail = nullptr;  // filled into PairingValue::tail_bound when set
};

struct PairingValue {
  Complex value = 0.0;
  double error = 0.0;
  double tail_bound = 0.0;
  int radius = 0;
  std::size_t terms = 0;
  std::size_t evaluations = 0;
  bool antisymmetrized = false;
  std::string method;
};

// sum over nu in Z_gamma\Gamma with l(nu^{-1} gamma nu) <= N of ∫ F(nu, x) A_0(x_0,x_1)...A_k(x_k, gamma x_0)
PairingValue rho_ext(const ExtendedASCochain& F, const ConjugacyContext& ctx, const std::vector<EquivariantKernel>& A,
                     const PairingOptions& opt);
// sum over conjugates eta of gamma with l(eta) <= N of ∫ chi(x_0) f(x) A_0(x_0,x_1)...A_k(x_k, eta x_0)
PairingValue rho_inv(const InvariantASCochain& f, const ConjugacyContext& ctx, const BumpCutoff& chi,
                     const std::vector<EquivariantKernel>& A, const PairingOptions& opt);
// sum over (g_0..g_k) of phi(g) ∫ chi(x_0) A_0(x_0, g_0 x_1) ... chi(x_k) A_k(x_k, g_k x_0)
PairingValue phi_pairing(const CyclicCochain& phi, const ConjugacyContext& ctx, const BumpCutoff& chi,
                         const std::vector<EquivariantKernel>& A, const PairingOptions& opt);
// tuple form: sum over |I|_gamma <= N of c(I) chi_gamma(g_0) ∫ prod chi(g_i^{-1} y_i) A_0(y_0,y_1)...A_k(y_k, gamma y_0)
PairingValue rho_psi_tuples(const GroupCochain& c, const ConjugacyContext& ctx, const BumpCutoff& chi,
                            const std::vector<EquivariantKernel>& A, const PairingOptions& opt);

// b applied to a functional on Gaussian test kernels (compositions are exact)
Complex hochschild_b_kernels(const std::function<Complex(const std::vector<GaussianTestKernel>&)>& rho,
                             const std::vector<GaussianTestKernel>& A);

// ---------------------------------------------------------------- truncation tail

struct TailConstants {
  double kernel_factor = 1.0;  // prod alpha_i t_i^{-beta_i}
  double rate = 1.0;           // min eta_i / sqrt(t_i)
  double tau = 1.0;            // Milnor–Švarc
  double kappa = 0.0;
  double C = 1.0;              // |ball(m)| <= C e^{K m}
  double K = 0.0;
  double A_c = 1.0;            // |c(I)| <= A_c e^{K_c |I|_gamma}
  double K_c = 0.0;
  int degree = 0;
  double volume = 1.0;         // volume of the cutoff support
};
// bound for the sum over |I|_gamma > N of ∫ |T_I|; infinite when the series does not converge
double tail_bound(const TailConstants& tc, int N);
TailConstants tail_constants(const ConjugacyContext& ctx, const BumpCutoff& chi,
                             const std::vector<EquivariantKernel>& A, double A_c, double K_c, int ms_radius = 12,
                             double ms_step = 0.05);

// ---------------------------------------------------------------- fixed-set localization

// k! Λ^γ(f)(x)(e_I) on the component, by Richardson-extrapolated mixed central differences
ExteriorElement lambda_fixed(const InvariantASCochain& f, const FixedComponent& comp, const std::vector<double>& x,
                             double h = 0.0);
// sum c(g_0..g_k) chi(g_0^{-1} x) dchi(g_1^{-1} x) ^ ... restricted to the component
ExteriorElement psi_gamma(const GroupCochain& c, const BumpCutoff& chi, const FixedComponent& comp,
                          const std::vector<double>& x);

}  // namespace lef
