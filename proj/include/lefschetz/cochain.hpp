#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "lefschetz/group.hpp"

namespace lef {

using Complex = std::complex<double>;
using GroupTuple = std::span<const GroupElement>;

class CochainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// antisymmetric k-cochain on Gamma^{k+1} with Lott's invariances
struct GroupCochain {
  int degree = 0;
  std::string name;
  std::function<Complex(GroupTuple)> eval;
  int support_hint = 0;   // ball radius inside which eval is guaranteed to succeed
  bool integral = false;  // outputs are exact small integers

  Complex operator()(GroupTuple g) const;
};

// functional on (k+1)-tuples of basis elements delta_g
struct CyclicCochain {
  int degree = 0;
  std::string name;
  std::function<Complex(GroupTuple)> eval;
  bool local = true;  // supported on tuples with product in <gamma>
  bool integral = false;

  Complex operator()(GroupTuple g) const;
};

struct CheckResult {
  bool pass = true;
  std::size_t checked = 0;
  double max_residual = 0.0;
  std::string witness;
};

GroupCochain lott_delta(const GroupCochain& c);
GroupCochain antisymmetrize(const GroupCochain& c);

// antisymmetry and both invariances on tuples from ball(radius); z runs over Z_gamma ∩ ball(z_radius).
// Above max_tuples the tuples are sampled deterministically.
CheckResult lott_check(const GroupCochain& c, const ConjugacyContext& ctx, int radius, int z_radius = 2,
                       std::size_t max_tuples = 20000, std::uint64_t seed = 7);

// tau_c(g_0..g_k) = (-1)^k c(eta, eta g_0, ..., eta g_0...g_{k-1}) when g_0...g_k = eta^{-1} gamma eta, else 0
CyclicCochain lott_to_cyclic(const GroupCochain& c, std::shared_ptr<const ConjugacyContext> ctx);
// compares the two branches eta and z eta for a nontrivial z in Z_gamma
CheckResult tau_well_defined(const GroupCochain& c, const ConjugacyContext& ctx,
                             const std::vector<std::vector<GroupElement>>& tuples);

CyclicCochain hochschild_b(const CyclicCochain& phi);
// the trace-like cochain phi(delta_g) = [g in <gamma>] (delocalized trace)
CyclicCochain delocalized_trace(std::shared_ptr<const ConjugacyContext> ctx);
CheckResult cyclicity_check(const CyclicCochain& phi, const std::vector<std::vector<GroupElement>>& tuples,
                            double tol = 0.0);

struct GrowthCertificate {
  double A = 1.0;
  double K = 0.0;
  int validation_radius = 0;
};

struct GrowthCheck {
  bool pass = true;
  double max_ratio = 0.0;
  std::size_t checked = 0;
  std::string witness;
};

// |c(I)| <= A e^{K |I|_gamma} over tuples whose |I|_gamma words all lie in the tabulated ball
GrowthCheck eg_verify(const GroupCochain& c, const ConjugacyContext& ctx, double A, double K, int radius,
                      std::size_t max_tuples = 20000, std::uint64_t seed = 11);

// deterministic random tuples of length k+1 from ball(radius)
std::vector<std::vector<GroupElement>> random_tuples(const CrystallographicGroup& G, int length, int radius,
                                                     std::size_t count, std::uint64_t seed);

// ---------------------------------------------------------------- built-in library

GroupCochain constant_cochain(Complex value);
GroupCochain zero_cochain(int degree);
// D-infinity, gamma = r: c(g0, g1) = s(g1) - s(g0), s(g) = eps_g v_g for g: x -> eps_g x + v_g
GroupCochain dinf_shift_cochain(std::shared_ptr<const ConjugacyContext> ctx);
// degree 0: l(g0^{-1} gamma g0); degree 1: its coboundary
GroupCochain conj_length_cochain(std::shared_ptr<const ConjugacyContext> ctx, int degree);
// degree 0: exp(a l(g0^{-1} gamma g0)), a growth control case
GroupCochain exp_conj_length_cochain(std::shared_ptr<const ConjugacyContext> ctx, double a);
// Z^n, gamma = e: c(g0, g1) = h . (v1 - v0)
GroupCochain homomorphism_cochain(std::shared_ptr<const ConjugacyContext> ctx, std::vector<double> h);
// Z^2, gamma = e: det(l1 - l0, l2 - l0)
GroupCochain area_cocycle(std::shared_ptr<const ConjugacyContext> ctx);
// D-infinity, gamma = r: delta b with b(g0, g1) = s(g0) s(g1)^2 - s(g1) s(g0)^2
GroupCochain dinf_degree2_cocycle(std::shared_ptr<const ConjugacyContext> ctx);
// a deliberately non-invariant evaluator, for negative controls
GroupCochain broken_cochain(int degree);

struct TableEntry {
  std::vector<GroupElement> tuple;
  Complex value;
};
// closure of an explicit table under antisymmetry, Z_gamma and gamma-in-slot invariance; zero elsewhere
GroupCochain table_cochain(std::shared_ptr<const ConjugacyContext> ctx, int degree,
                           const std::vector<TableEntry>& entries);

std::vector<std::string> library_names();
// name: constant, zero, dinf_shift, conj_length, exp_conj_length, homomorphism, area, dinf_degree2
GroupCochain library_cochain(const std::string& name, std::shared_ptr<const ConjugacyContext> ctx, int degree = 0,
                             const std::vector<double>& params = {});

}  // namespace lef
