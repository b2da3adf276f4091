#pragma once

#include <complex>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "lefschetz/as_complex.hpp"

namespace lef {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PairingConfig {
  // [group]
  std::string group = "p2";
  int ball_radius = 20;
  // [gamma]
  std::string gamma = "r";
  int aux = 1;        // auxiliary bundle dimension, gamma acts trivially on it
  int spin_sign = 1;
  // [cochain]
  std::string cochain = "constant";
  int degree = 0;
  std::vector<double> params;
  double growth_A = 1.0;  // |c(I)| <= A e^{K |I|_gamma}
  double growth_K = 0.0;
  // [cutoff]
  double cutoff_radius = 0.8;
  std::string profile = "poly";
  std::vector<double> cutoff_center;
  // [schedule]
  std::vector<double> t{0.2, 0.1, 0.05};
  int radius = 6;        // group-tuple radius N
  int radius_step = 2;   // comparison radius N + radius_step
  double tail_eps = 0.0; // > 0: smallest N with certified tail below tail_eps, capped at max_radius
  int max_radius = 16;
  double eta = 2.0;      // decay rate of the kernel certificates
  // [quadrature]
  int order = 8;
  double max_panel = 0.0;
  double reach_tol = 1e-13;
  std::size_t qmc_samples = 4096;
  int qmc_replicates = 8;
  std::uint64_t seed = 12345;
  std::size_t max_matrix = 600;
  int max_tensor_dim = 3;
  bool antisymmetrize = false;
  int rhs_panels = 24;
  int rhs_order = 8;
  // [output]
  std::string output = "report.txt";
  std::string selector = "all";
  double tolerance = 1e-3;  // relative LHS/RHS gap for verdicts

  void validate() const;
};

PairingConfig parse_config(const std::string& text);
PairingConfig load_config(const std::string& path);
// INI echo of every field, stable order
std::string config_text(const PairingConfig& cfg);

// group, context, cutoff, cochain and Dirac model built from a config
struct PairingSetup {
  std::shared_ptr<const CrystallographicGroup> group;
  std::shared_ptr<const ConjugacyContext> ctx;
  std::shared_ptr<const BumpCutoff> chi;
  GroupCochain cochain;
  std::shared_ptr<const FlatDiracModel> model;
  PairingOptions options;
};
PairingSetup make_setup(const PairingConfig& cfg);

// ---------------------------------------------------------------- right-hand side

struct ComponentIntegral {
  int a = 0;
  std::vector<double> point;
  Complex value = 0.0;
  double error = 0.0;
  std::size_t evaluations = 0;
};

struct RhsResult {
  Complex value = 0.0;
  double error = 0.0;
  int q = 0;
  ExactComplexConstant constant;
  std::vector<ComponentIntegral> components;
  std::string note;
};

// c(q,n) sum over components of ∫ (-i)^{(n-a)/2} chi_gamma Psi^gamma(c) ^ AS_gamma
RhsResult rhs_evaluate(const PairingConfig& cfg);
RhsResult rhs_evaluate(const PairingConfig& cfg, const PairingSetup& setup);

// ---------------------------------------------------------------- degree 0

struct Degree0Point {
  double t = 0.0;
  PairingValue supertrace;       // sum over <gamma> of ∫ chi str(sigma(g) K_t(x, gx)), radius N
  PairingValue supertrace_next;  // same at N + radius_step
  PairingValue pairing;          // tau paired with R(tD)
  double tail_bound = 0.0;       // certified bound on the terms beyond N
};

struct Degree0Result {
  std::vector<Degree0Point> points;
  double spread = 0.0;  // max relative deviation of the pairing from its mean over t
  Complex mean = 0.0;
};

Degree0Result lhs_degree0(const PairingConfig& cfg);
Degree0Result lhs_degree0(const PairingConfig& cfg, const PairingSetup& setup);

// ---------------------------------------------------------------- truncated higher pairing

struct TruncatedPoint {
  double t = 0.0;
  int radius = 0;
  PairingValue value;       // |I|_gamma <= N
  PairingValue value_prev;  // |I|_gamma <= N - radius_step
  double tail_bound = 0.0;  // at N
  double tail_bound_prev = 0.0;
};

struct TruncatedResult {
  std::vector<TruncatedPoint> points;
  Complex extrapolated = 0.0;  // Richardson, linear in t through the two smallest t
  double extrapolation_error = 0.0;
  bool complete = true;
  std::string note;
};

TruncatedResult pairing_truncated(const PairingConfig& cfg);
TruncatedResult pairing_truncated(const PairingConfig& cfg, const PairingSetup& setup);

// smallest N <= max_radius whose tail bound is below eps; -1 if none
int radius_for_tail(const TailConstants& tc, double eps, int max_radius);

// ---------------------------------------------------------------- reports

// nested key-value text: [section.sub] headers, "key = value" lines, insertion order kept
class Report {
 public:
  void set(const std::string& section, const std::string& key, const std::string& value);
  void set(const std::string& section, const std::string& key, double value);
  void set(const std::string& section, const std::string& key, long long value);
  void set(const std::string& section, const std::string& key, int value) { set(section, key, (long long)value); }
  void set(const std::string& section, const std::string& key, bool value);
  void set(const std::string& section, const std::string& key, Complex value);
  void set(const std::string& section, const std::string& key, const PairingValue& v);
  void set_timing(const std::string& key, double seconds);
  std::string render(bool with_timing = true) const;
  void write(const std::string& path) const;
  const std::string* find(const std::string& section, const std::string& key) const;

 private:
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> sections_;
  std::vector<std::pair<std::string, std::string>> timing_;
  std::vector<std::pair<std::string, std::string>>& section(const std::string& name);
};

std::string format_number(double v);  // 17 significant digits

void report_config(Report& r, const PairingConfig& cfg);
void report_rhs(Report& r, const RhsResult& rhs);
void report_degree0(Report& r, const Degree0Result& d);
void report_truncated(Report& r, const TruncatedResult& tr);

// ---------------------------------------------------------------- verification suite

struct VerifyItem {
  std::string group;
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;
};

struct VerifySummary {
  std::vector<VerifyItem> items;
  bool all_pass() const;
  std::size_t passed() const;
};

std::vector<std::string> verify_groups();
// selector: "all" or a comma list of algebra, diagram, mehler, constants, getzler, lefschetz0
VerifySummary verify_suite(const std::string& selector, const PairingConfig& cfg);
void report_verify(Report& r, const VerifySummary& s);

// rows of the Getzler-order table: expression and the catalogued order
std::vector<std::pair<std::string, int>> getzler_table();

}  // namespace lef
