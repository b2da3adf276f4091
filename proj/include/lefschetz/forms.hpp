#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lef {

class FormError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Mask = std::uint32_t;
using CMatrix = Eigen::MatrixXcd;

int mask_degree(Mask m);
// sign of e_a ∧ e_b relative to e_{a|b}; 0 when they overlap
int wedge_sign(Mask a, Mask b);
std::string mask_text(Mask m);  // "dx1^dx3", "1" for the empty mask

// Λ•(R^cap) ⊗ (d x d complex matrices); also serves as a d x d matrix of forms
class ExteriorElement {
 public:
  ExteriorElement() = default;
  ExteriorElement(int cap, int d);

  static ExteriorElement scalar(int cap, std::complex<double> v);
  static ExteriorElement constant(int cap, const CMatrix& m);
  static ExteriorElement identity(int cap, int d);
  static ExteriorElement basis(int cap, Mask m, const CMatrix& coeff);
  static ExteriorElement basis(int cap, Mask m, std::complex<double> v);
  // e_{i1} ∧ ... with 1-based indices
  static ExteriorElement monomial(int cap, const std::vector<int>& indices, std::complex<double> v = 1.0);

  int cap() const { return cap_; }
  int dim() const { return d_; }
  Mask top_mask() const { return cap_ == 0 ? 0u : ((1u << cap_) - 1u); }
  const std::map<Mask, CMatrix>& terms() const { return terms_; }

  CMatrix coefficient(Mask m) const;
  std::complex<double> scalar_coefficient(Mask m) const;
  CMatrix top() const { return coefficient(top_mask()); }
  void add_term(Mask m, const CMatrix& c);
  ExteriorElement degree_part(int k) const;
  // lowest degree carrying a nonzero coefficient, cap+1 for zero
  int min_degree(double tol = 0.0) const;
  bool is_zero(double tol = 0.0) const;
  double max_abs() const;

  ExteriorElement operator+(const ExteriorElement& o) const;
  ExteriorElement operator-(const ExteriorElement& o) const;
  ExteriorElement operator-() const;
  ExteriorElement operator*(std::complex<double> s) const;
  ExteriorElement& operator+=(const ExteriorElement& o);

  // matrix entries as forms: entry (i,j) with d = 1
  ExteriorElement entry(int i, int j) const;
  ExteriorElement trace() const;

  std::string to_string(int precision = 17) const;

 private:
  void require_same(const ExteriorElement& o) const;
  int cap_ = 0;
  int d_ = 1;
  std::map<Mask, CMatrix> terms_;
};

// (ω ⊗ A) ∧ (η ⊗ B) = (ω ∧ η) ⊗ AB
ExteriorElement wedge(const ExteriorElement& a, const ExteriorElement& b);
double max_abs_diff(const ExteriorElement& a, const ExteriorElement& b);

// power series sum_k c_k N^k for N without degree-0 part; exact after cap/2+1 terms on even forms
ExteriorElement nilpotent_series(const std::vector<std::complex<double>>& coeffs, const ExteriorElement& N);
// x/sinh x, sinh x/x, ... as coefficient lists of length len
std::vector<std::complex<double>> series_inverse(const std::vector<std::complex<double>>& c);
std::vector<std::complex<double>> exp_coefficients(int len);
std::vector<std::complex<double>> log1p_coefficients(int len);
std::vector<std::complex<double>> x_over_sinh_coefficients(int len);

ExteriorElement form_exp(const ExteriorElement& X);
ExteriorElement form_log1p(const ExteriorElement& N);
ExteriorElement form_inverse(const ExteriorElement& X);
// det^{1/2}(X / sinh X) = exp(½ tr log(X / sinh X)), value 1 at X = 0
ExteriorElement sqrt_det_x_over_sinh(const ExteriorElement& X);
// det^{-1/2}(1 - Q e^{-Y}) for numeric orthogonal Q without eigenvalue 1
ExteriorElement inv_sqrt_det_one_minus(const Eigen::MatrixXd& Q, const ExteriorElement& Y);
// scalar form exp / log1p / xsinhx named dispatch
ExteriorElement analytic_series(const std::string& fn, const ExteriorElement& X);

struct CurvatureData {
  int a = 0;
  ExteriorElement R_tangent;      // a x a 2-forms
  ExteriorElement R_normal;       // (n-a) x (n-a) 2-forms
  Eigen::MatrixXd normal_rotation;  // gamma|_N
  ExteriorElement F_V;            // d x d 2-forms
  CMatrix gamma_V;                // d x d

  static CurvatureData flat(int a, const Eigen::MatrixXd& normal_rotation, const CMatrix& gamma_V);
  void validate() const;
};

// Â(M^γ) ∧ det^{-1/2}(1 - γ|_N e^{-R⊥/2πi}) ∧ Tr(γ_V e^{-F/2πi}); scalar form of cap a
ExteriorElement as_gamma_form(const CurvatureData& cd);
ExteriorElement a_hat_form(const ExteriorElement& R_tangent);

// ---------------------------------------------------------------- Getzler orders

constexpr int kGetzlerVanishes = -1000000;

// atoms: dx dt cl x f cdf D2 H Hh H3 R34 Q; products by juxtaposition or '*', sums '+', commutators [A, B]
int getzler_order(const std::string& expr);
std::vector<std::string> getzler_atoms();
// moving-lemma criterion: sum of orders < -2k forces the t -> 0 limit to vanish
bool getzler_vanishes(const std::vector<int>& orders, int k);

}  // namespace lef
