#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lefschetz/group.hpp"

namespace lef {

class ManifoldError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BumpProfile { Poly, Smooth };

BumpProfile parse_profile(const std::string& name);
std::string profile_name(BumpProfile p);

// profile(s) for s = |y - c| / r, zero for s >= 1
double profile_value(BumpProfile p, double s);
double profile_derivative(BumpProfile p, double s);

class BumpCutoff {
 public:
  // center empty -> a generic point of the unit cell
  BumpCutoff(std::shared_ptr<const CrystallographicGroup> G, double support_radius,
             BumpProfile profile = BumpProfile::Poly, std::vector<double> center = {});

  const CrystallographicGroup& group() const { return *G_; }
  std::shared_ptr<const CrystallographicGroup> group_ptr() const { return G_; }
  int dim() const { return G_->dim(); }
  double radius() const { return r_; }
  BumpProfile profile() const { return profile_; }
  const std::vector<double>& center() const { return c_; }

  double seed(const double* y) const;
  // S(x) = sum_g phi(g^{-1} x), Gamma-invariant
  double denominator(const double* x) const;
  double value(const double* x) const;
  void gradient(const double* x, double* grad) const;
  // chi(g^{-1} x) and its x-gradient
  double translate(const GroupElement& g, const double* x) const;
  void translate_gradient(const GroupElement& g, const double* x, double* grad) const;

  // every g with chi(g^{-1} x) != 0, paired with the value
  void terms(const double* x, std::vector<std::pair<GroupElement, double>>& out) const;
  void support_elements(const double* x, std::vector<GroupElement>& out) const;
  // |sum_g chi(g^{-1} x) - 1|
  double partition_residual(const double* x) const;
  // smallest S(x) on a grid over the unit cell
  double covering_margin(int per_axis) const;

 private:
  std::shared_ptr<const CrystallographicGroup> G_;
  double r_;
  BumpProfile profile_;
  std::vector<double> c_;
};

struct FixedComponent {
  int a = 0;                        // dimension
  std::vector<double> point;        // base point
  std::vector<double> tangent;      // n x a, columns orthonormal, row major
  std::vector<double> normal;       // n x (n-a), columns orthonormal, row major
  std::vector<double> normal_action;  // (n-a) x (n-a) matrix of gamma on N in the normal basis
  std::vector<double> angles;       // rotation angles of gamma|_N, one per 2-plane, pi for unpaired -1
};

struct FixedPointSet {
  int n = 0;
  std::vector<FixedComponent> components;
  bool empty() const { return components.empty(); }
};

// solves (A - 1) x = -v in Cartesian coordinates
FixedPointSet fixed_point_components(const CrystallographicGroup& G, const GroupElement& gamma);
// fixed sets of the conjugates h^{-1} gamma h that meet the window, one entry per conjugate
std::vector<std::pair<GroupElement, FixedComponent>> conjugate_fixed_sets(const ConjugacyContext& ctx,
                                                                          const Box& window, int max_len);
bool on_component(const FixedComponent& c, const double* x, double tol = 1e-9);

// chi_gamma(x) = sum_{g : chi^Gamma_gamma(g) = 1} chi(g^{-1} x) on M^gamma
class FixedSetCutoff {
 public:
  FixedSetCutoff(const FixedPointSet& fps, const ConjugacyContext& ctx, const BumpCutoff& chi);
  double value(const double* x) const;
  // Box covering the support of chi_gamma on each component, in component coordinates
  const std::vector<Box>& support_windows() const { return windows_; }

 private:
  const ConjugacyContext* ctx_;
  const BumpCutoff* chi_;
  FixedPointSet fps_;
  std::vector<Box> windows_;
};

// compensated summation, fixed order
class NeumaierSum {
 public:
  void add(double v) {
    double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0, comp_ = 0.0;
};

struct Rule1D {
  std::vector<double> nodes, weights;
};

// order-point Gauss–Legendre on [a, b]
Rule1D gauss_legendre(int order, double a = -1.0, double b = 1.0);
// composite rule: [a, b] split at the given breakpoints, each piece into `panels` panels of order `order`
Rule1D composite_gauss_legendre(double a, double b, std::vector<double> breaks, int panels, int order);
Rule1D midpoint_rule(double a, double b, int points);

enum class RuleKind { Midpoint, GaussLegendre, QuasiMonteCarlo };

struct QuadratureGrid {
  Box box;
  int resolution = 16;  // points (midpoint) or panels (Gauss–Legendre) per axis
  RuleKind rule = RuleKind::GaussLegendre;
  int order = 8;
  std::size_t samples = 4096;  // QMC points per replicate
  int replicates = 8;
  std::uint64_t seed = 12345;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t evaluations = 0;
};

using ScalarField = std::function<double(std::span<const double>)>;

// tensor rule at resolution and 2*resolution; error is the difference. QMC: replicate spread.
QuadResult integrate(const ScalarField& f, const QuadratureGrid& grid);
// one pass of the tensor rule
double integrate_tensor(const ScalarField& f, const Box& box, const std::vector<Rule1D>& rules);
// randomly shifted Sobol points, replicates with independent shifts
QuadResult integrate_qmc(const ScalarField& f, const Box& box, std::size_t samples, int replicates,
                         std::uint64_t seed);

}  // namespace lef
