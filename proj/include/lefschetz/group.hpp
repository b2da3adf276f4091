#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <boost/rational.hpp>

namespace lef {

using Rational = boost::rational<long long>;

Rational parse_rational(const std::string& text);
std::string to_string(const Rational& r);

constexpr int kMaxDim = 3;

class GroupError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// word_length / coset lookups beyond the tabulated ball
class UnreachableError : public GroupError {
 public:
  using GroupError::GroupError;
};

// Affine map u -> A u + t/den in lattice coordinates of the owning group.
struct GroupElement {
  int n = 0;
  int group_id = 0;
  long long den = 1;
  std::array<int, kMaxDim * kMaxDim> A{};
  std::array<long long, kMaxDim> t{};

  int a(int i, int j) const { return A[i * kMaxDim + j]; }
  Rational translation(int i) const { return Rational(t[i], den); }
  bool operator==(const GroupElement& o) const {
    return n == o.n && group_id == o.group_id && A == o.A && t == o.t;
  }
  bool operator!=(const GroupElement& o) const { return !(*this == o); }
};

struct GroupElementHash {
  std::size_t operator()(const GroupElement& g) const noexcept;
};

bool canonical_less(const GroupElement& a, const GroupElement& b);

GroupElement compose(const GroupElement& a, const GroupElement& b);
GroupElement inverse(const GroupElement& g);
bool is_identity(const GroupElement& g);
bool linear_is_identity(const GroupElement& g);
// smallest k in [1, max_order] with g^k = e, 0 when none
int element_order(const GroupElement& g, int max_order = 24);

struct Box {
  std::vector<double> lo, hi;
  int dim() const { return static_cast<int>(lo.size()); }
};

struct PointOp {
  std::string name;
  std::vector<int> matrix;        // n*n, lattice coordinates, row major
  std::vector<Rational> shift;    // fractional translation, lattice coordinates
};

struct GroupSpec {
  std::string name;
  int n = 0;
  std::vector<std::vector<Rational>> lattice;  // rows are basis vectors (Cartesian)
  std::vector<PointOp> point_group;            // first entry should be the identity
  std::vector<std::string> generators;         // names: t1..tn, point-op names, "name^-1"
  int ball_radius = 20;
};

class CrystallographicGroup {
 public:
  explicit CrystallographicGroup(const GroupSpec& spec);

  const std::string& name() const { return name_; }
  int dim() const { return n_; }
  int id() const { return id_; }
  long long denominator() const { return den_; }

  GroupElement identity() const;
  GroupElement translation(std::span<const long long> m) const;
  // t_m ∘ p_f
  GroupElement element(int point_index, std::span<const long long> m) const;
  // named generator, lattice translation "t<i>", point op name, with optional "^-1"
  GroupElement named(const std::string& token) const;
  // whitespace separated word in named elements, composed left to right
  GroupElement word(const std::string& text) const;

  // (point index, lattice coordinates m) with g = t_m ∘ p_f
  std::pair<int, std::vector<long long>> decompose(const GroupElement& g) const;
  bool contains(const GroupElement& g) const;

  void act(const GroupElement& g, const double* x, double* out) const;
  std::vector<double> act(const GroupElement& g, const std::vector<double>& x) const;
  // Cartesian linear part, row major n*n
  std::array<double, kMaxDim * kMaxDim> cartesian_linear(const GroupElement& g) const;
  std::array<double, kMaxDim> cartesian_translation(const GroupElement& g) const;

  const std::vector<GroupElement>& generators() const { return gens_; }
  const std::vector<GroupElement>& point_reps() const { return reps_; }
  int point_group_order() const { return static_cast<int>(reps_.size()); }
  double covolume() const { return covolume_; }
  Box unit_cell() const;

  int ball_radius() const { return radius_; }
  int word_length(const GroupElement& g) const;
  bool has_length(const GroupElement& g) const;
  std::vector<GroupElement> enumerate_ball(int r) const;
  std::span<const GroupElement> ball_view(int r) const;
  std::vector<std::size_t> sphere_sizes() const;

  // all g with |x - g c| < r, Cartesian
  void elements_near(const double* x, const double* c, double r, std::vector<GroupElement>& out) const;

  std::string describe(const GroupElement& g) const;

 private:
  void build_ball();
  void to_lattice(const double* x, double* u) const;
  void to_cartesian(const double* u, double* x) const;

  std::string name_;
  int n_ = 0;
  int id_ = 0;
  long long den_ = 1;
  int radius_ = 0;
  double covolume_ = 1.0;
  std::array<double, kMaxDim * kMaxDim> B_{};     // rows = basis vectors
  std::array<double, kMaxDim * kMaxDim> Binv_{};  // inverse of B
  std::vector<GroupElement> reps_;
  std::vector<std::string> rep_names_;
  std::vector<GroupElement> gens_;
  std::vector<std::string> gen_names_;
  std::vector<GroupElement> ball_;
  std::vector<std::size_t> shell_end_;
  std::unordered_map<GroupElement, int, GroupElementHash> length_;
};

GroupSpec catalog_spec(const std::string& name, int ball_radius = 20);
std::vector<std::string> catalog_names();
std::shared_ptr<CrystallographicGroup> make_group(const std::string& name, int ball_radius = 20);

struct MilnorSvarc {
  double tau = 0.0;
  double kappa = 0.0;
  int validation_radius = 0;
  double grid_step = 0.0;
};

MilnorSvarc milnor_svarc_constants(const CrystallographicGroup& G, const Box& F, int radius, double step);
// both inequalities on ball(radius) x grid(F)^2; witness describes the first violation
bool milnor_svarc_holds(const CrystallographicGroup& G, const Box& F, double tau, double kappa, int radius,
                        double step, std::string* witness = nullptr);

struct GrowthFit {
  double C = 1.0;
  double K = 0.0;
};
// |ball(k)| <= C e^{K k} for every k, from submultiplicativity at the tabulated radius
GrowthFit fit_growth(const CrystallographicGroup& G);

class ConjugacyContext {
 public:
  ConjugacyContext(std::shared_ptr<const CrystallographicGroup> G, const GroupElement& gamma);

  const CrystallographicGroup& group() const { return *G_; }
  std::shared_ptr<const CrystallographicGroup> group_ptr() const { return G_; }
  const GroupElement& gamma() const { return gamma_; }
  int order() const { return order_; }

  bool in_centralizer(const GroupElement& g) const;
  // minimal element of the coset Z_gamma g
  const GroupElement& coset_rep(const GroupElement& g) const;
  double group_cutoff(const GroupElement& g) const;
  std::vector<GroupElement> centralizer_in_ball(int r) const;
  std::vector<GroupElement> coset_reps(int r) const;
  // h^{-1} gamma h with l <= max_len, deterministic order
  std::vector<GroupElement> conjugacy_class(int max_len) const;
  // some eta with eta^{-1} gamma eta = p; first from the coset table, else exact search
  bool find_conjugator(const GroupElement& p, GroupElement* eta) const;
  // |I|_gamma = sum l(g_i^{-1} g_{i+1}) + l(g_k^{-1} gamma g_0)
  int tuple_length(std::span<const GroupElement> I) const;

 private:
  bool exact_conjugator(const GroupElement& p, GroupElement* eta) const;

  std::shared_ptr<const CrystallographicGroup> G_;
  GroupElement gamma_;
  int order_ = 0;
  std::unordered_map<GroupElement, GroupElement, GroupElementHash> rep_of_conjugate_;
  struct SearchCache {
    std::mutex mu;
    std::unordered_map<GroupElement, std::pair<bool, GroupElement>, GroupElementHash> map;
  };
  std::shared_ptr<SearchCache> search_cache_ = std::make_shared<SearchCache>();
};

}  // namespace lef
