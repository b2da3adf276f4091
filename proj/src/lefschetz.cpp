#include "lefschetz/lefschetz.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace lef {

namespace {

const Complex kI(0.0, 1.0);

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::string s = text;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError("not a number: '" + tok + "'");
    }
  }
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_number(v[i]);
  return s;
}

template <class T>
T get_value(const boost::property_tree::ptree& sec, const std::string& key, const std::string& where) {
  try {
    return sec.get<T>(key);
  } catch (const boost::property_tree::ptree_error&) {
    throw ConfigError("bad value for " + where + "." + key + ": '" + sec.get<std::string>(key, "") + "'");
  }
}

bool parse_bool(const std::string& s, const std::string& where) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("bad boolean for " + where + ": '" + s + "'");
}

CMatrix block_sigma(const FlatDiracModel& m, const GroupElement& g) {
  CMatrix s = m.sigma(g);
  const auto d = s.rows();
  CMatrix out = CMatrix::Zero(2 * d, 2 * d);
  out.topLeftCorner(d, d) = s;
  out.bottomRightCorner(d, d) = s;
  return out;
}

Complex ipow(Complex z, int p) {
  Complex r = 1.0;
  for (int i = 0; i < p; ++i) r *= z;
  return r;
}

int choose_radius(const PairingConfig& cfg, const TailConstants& tc) {
  if (cfg.tail_eps <= 0) return cfg.radius;
  int N = radius_for_tail(tc, cfg.tail_eps, cfg.max_radius);
  if (N >= 0) return N;
  int suggest = radius_for_tail(tc, cfg.tail_eps, 10000);
  if (suggest < 0)
    throw ASError("tail certification failed: the certified series does not converge at this t; use smaller t or larger eta");
  throw ASError("tail certification failed below max_radius = " + std::to_string(cfg.max_radius) +
                "; suggested radius " + std::to_string(suggest));
}

}  // namespace

// ---------------------------------------------------------------- config

void PairingConfig::validate() const {
  if (degree < 0 || degree % 2 != 0) throw ConfigError("cochain degree must be even and non-negative");
  if (t.empty()) throw ConfigError("schedule.t is empty");
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(t[i] > 0)) throw ConfigError("schedule.t values must be positive");
    if (i > 0 && !(t[i] < t[i - 1])) throw ConfigError("schedule.t values must be strictly decreasing");
  }
  if (radius < 0 || radius_step < 0 || max_radius < 0) throw ConfigError("schedule radii must be non-negative");
  if (!(eta > 0)) throw ConfigError("schedule.eta must be positive");
  if (!(cutoff_radius > 0)) throw ConfigError("cutoff.radius must be positive");
  try {
    parse_profile(profile);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("cutoff.profile: ") + e.what());
  }
  if (aux < 1) throw ConfigError("gamma.aux must be positive");
  if (spin_sign != 1 && spin_sign != -1) throw ConfigError("gamma.spin_sign must be 1 or -1");
  if (order < 2) throw ConfigError("quadrature.order must be at least 2");
  if (rhs_panels < 2 || rhs_order < 2) throw ConfigError("quadrature.rhs_panels and rhs_order must be at least 2");
  if (qmc_samples == 0 || qmc_replicates < 2) throw ConfigError("QMC needs samples and at least two replicates");
  if (!(growth_A > 0)) throw ConfigError("cochain.growth_A must be positive");
  if (!(tolerance > 0)) throw ConfigError("output.tolerance must be positive");
  if (ball_radius < 1) throw ConfigError("group.ball_radius must be positive");
}

PairingConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  static const std::map<std::string, std::set<std::string>> known{
      {"group", {"name", "ball_radius"}},
      {"gamma", {"word", "aux", "spin_sign"}},
      {"cochain", {"name", "degree", "params", "growth_A", "growth_K"}},
      {"cutoff", {"radius", "profile", "center"}},
      {"schedule", {"t", "radius", "radius_step", "tail_eps", "max_radius", "eta"}},
      {"quadrature",
       {"order", "max_panel", "reach_tol", "qmc_samples", "qmc_replicates", "seed", "max_matrix", "max_tensor_dim",
        "antisymmetrize", "rhs_panels", "rhs_order"}},
      {"output", {"path", "selector", "tolerance"}},
  };
  for (const auto& [sec, node] : tree) {
    auto it = known.find(sec);
    if (it == known.end()) throw ConfigError("unknown section [" + sec + "]");
    if (!node.data().empty() && node.empty()) throw ConfigError("key outside a section: " + sec);
    for (const auto& [key, v] : node)
      if (!it->second.count(key)) throw ConfigError("unknown key " + sec + "." + key);
  }
  PairingConfig c;
  auto sec = [&](const std::string& s) -> const pt::ptree* {
    auto it = tree.find(s);
    return it == tree.not_found() ? nullptr : &it->second;
  };
  if (auto g = sec("group")) {
    c.group = g->get<std::string>("name", c.group);
    if (g->count("ball_radius")) c.ball_radius = get_value<int>(*g, "ball_radius", "group");
  }
  if (auto g = sec("gamma")) {
    c.gamma = g->get<std::string>("word", c.gamma);
    if (g->count("aux")) c.aux = get_value<int>(*g, "aux", "gamma");
    if (g->count("spin_sign")) c.spin_sign = get_value<int>(*g, "spin_sign", "gamma");
  }
  if (auto g = sec("cochain")) {
    c.cochain = g->get<std::string>("name", c.cochain);
    if (g->count("degree")) c.degree = get_value<int>(*g, "degree", "cochain");
    if (g->count("params")) c.params = parse_list(g->get<std::string>("params"));
    if (g->count("growth_A")) c.growth_A = get_value<double>(*g, "growth_A", "cochain");
    if (g->count("growth_K")) c.growth_K = get_value<double>(*g, "growth_K", "cochain");
  }
  if (auto g = sec("cutoff")) {
    if (g->count("radius")) c.cutoff_radius = get_value<double>(*g, "radius", "cutoff");
    c.profile = g->get<std::string>("profile", c.profile);
    if (g->count("center")) c.cutoff_center = parse_list(g->get<std::string>("center"));
  }
  if (auto g = sec("schedule")) {
    if (g->count("t")) c.t = parse_list(g->get<std::string>("t"));
    if (g->count("radius")) c.radius = get_value<int>(*g, "radius", "schedule");
    if (g->count("radius_step")) c.radius_step = get_value<int>(*g, "radius_step", "schedule");
    if (g->count("tail_eps")) c.tail_eps = get_value<double>(*g, "tail_eps", "schedule");
    if (g->count("max_radius")) c.max_radius = get_value<int>(*g, "max_radius", "schedule");
    if (g->count("eta")) c.eta = get_value<double>(*g, "eta", "schedule");
  }
  if (auto g = sec("quadrature")) {
    if (g->count("order")) c.order = get_value<int>(*g, "order", "quadrature");
    if (g->count("max_panel")) c.max_panel = get_value<double>(*g, "max_panel", "quadrature");
    if (g->count("reach_tol")) c.reach_tol = get_value<double>(*g, "reach_tol", "quadrature");
    if (g->count("qmc_samples")) c.qmc_samples = get_value<std::size_t>(*g, "qmc_samples", "quadrature");
    if (g->count("qmc_replicates")) c.qmc_replicates = get_value<int>(*g, "qmc_replicates", "quadrature");
    if (g->count("seed")) c.seed = get_value<std::uint64_t>(*g, "seed", "quadrature");
    if (g->count("max_matrix")) c.max_matrix = get_value<std::size_t>(*g, "max_matrix", "quadrature");
    if (g->count("max_tensor_dim")) c.max_tensor_dim = get_value<int>(*g, "max_tensor_dim", "quadrature");
    if (g->count("antisymmetrize"))
      c.antisymmetrize = parse_bool(g->get<std::string>("antisymmetrize"), "quadrature.antisymmetrize");
    if (g->count("rhs_panels")) c.rhs_panels = get_value<int>(*g, "rhs_panels", "quadrature");
    if (g->count("rhs_order")) c.rhs_order = get_value<int>(*g, "rhs_order", "quadrature");
  }
  if (auto g = sec("output")) {
    c.output = g->get<std::string>("path", c.output);
    c.selector = g->get<std::string>("selector", c.selector);
    if (g->count("tolerance")) c.tolerance = get_value<double>(*g, "tolerance", "output");
  }
  c.validate();
  return c;
}

PairingConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_text(const PairingConfig& c) {
  std::ostringstream o;
  o << "[group]\nname = " << c.group << "\nball_radius = " << c.ball_radius << "\n\n";
  o << "[gamma]\nword = " << c.gamma << "\naux = " << c.aux << "\nspin_sign = " << c.spin_sign << "\n\n";
  o << "[cochain]\nname = " << c.cochain << "\ndegree = " << c.degree << "\nparams = " << join(c.params)
    << "\ngrowth_A = " << format_number(c.growth_A) << "\ngrowth_K = " << format_number(c.growth_K) << "\n\n";
  o << "[cutoff]\nradius = " << format_number(c.cutoff_radius) << "\nprofile = " << c.profile
    << "\ncenter = " << join(c.cutoff_center) << "\n\n";
  o << "[schedule]\nt = " << join(c.t) << "\nradius = " << c.radius << "\nradius_step = " << c.radius_step
    << "\ntail_eps = " << format_number(c.tail_eps) << "\nmax_radius = " << c.max_radius
    << "\neta = " << format_number(c.eta) << "\n\n";
  o << "[quadrature]\norder = " << c.order << "\nmax_panel = " << format_number(c.max_panel)
    << "\nreach_tol = " << format_number(c.reach_tol) << "\nqmc_samples = " << c.qmc_samples
    << "\nqmc_replicates = " << c.qmc_replicates << "\nseed = " << c.seed << "\nmax_matrix = " << c.max_matrix
    << "\nmax_tensor_dim = " << c.max_tensor_dim << "\nantisymmetrize = " << (c.antisymmetrize ? "true" : "false")
    << "\nrhs_panels = " << c.rhs_panels << "\nrhs_order = " << c.rhs_order << "\n\n";
  o << "[output]\npath = " << c.output << "\nselector = " << c.selector
    << "\ntolerance = " << format_number(c.tolerance) << "\n";
  return o.str();
}

PairingSetup make_setup(const PairingConfig& cfg) {
  cfg.validate();
  PairingSetup s;
  std::shared_ptr<CrystallographicGroup> G;
  try {
    G = make_group(cfg.group, cfg.ball_radius);
  } catch (const GroupError& e) {
    throw ConfigError(e.what());
  }
  s.group = G;
  GroupElement gamma;
  try {
    gamma = G->word(cfg.gamma);
  } catch (const GroupError& e) {
    throw ConfigError(std::string("gamma: ") + e.what());
  }
  if (!cfg.cutoff_center.empty() && static_cast<int>(cfg.cutoff_center.size()) != G->dim())
    throw ConfigError("cutoff.center has the wrong dimension");
  s.ctx = std::make_shared<ConjugacyContext>(G, gamma);
  s.chi = std::make_shared<BumpCutoff>(G, cfg.cutoff_radius, parse_profile(cfg.profile), cfg.cutoff_center);
  try {
    s.cochain = library_cochain(cfg.cochain, s.ctx, cfg.degree, cfg.params);
  } catch (const CochainError& e) {
    throw ConfigError(std::string("cochain: ") + e.what());
  }
  if (s.cochain.degree != cfg.degree)
    throw ConfigError("cochain '" + cfg.cochain + "' has degree " + std::to_string(s.cochain.degree) +
                      ", config says " + std::to_string(cfg.degree));
  if (G->dim() == 2) s.model = std::make_shared<FlatDiracModel>(G, cfg.aux, cfg.spin_sign, cfg.eta);
  auto& o = s.options;
  o.trunc_radius = cfg.radius;
  o.order = cfg.order;
  o.max_panel = cfg.max_panel;
  o.reach_tol = cfg.reach_tol;
  o.qmc_samples = cfg.qmc_samples;
  o.qmc_replicates = cfg.qmc_replicates;
  o.seed = cfg.seed;
  o.max_matrix = cfg.max_matrix;
  o.max_tensor_dim = cfg.max_tensor_dim;
  o.antisymmetrize = cfg.antisymmetrize;
  return s;
}

// ---------------------------------------------------------------- right-hand side

RhsResult rhs_evaluate(const PairingConfig& cfg) { return rhs_evaluate(cfg, make_setup(cfg)); }

RhsResult rhs_evaluate(const PairingConfig& cfg, const PairingSetup& setup) {
  RhsResult res;
  res.q = cfg.degree / 2;
  res.constant = c_constant(res.q);
  const auto& G = *setup.group;
  const int n = G.dim();
  auto fps = fixed_point_components(G, setup.ctx->gamma());
  if (fps.empty()) {
    res.note = "fixed set is empty";
    return res;
  }
  FixedSetCutoff fsc(fps, *setup.ctx, *setup.chi);
  const auto& c = setup.cochain;
  bool any = false;
  Complex total = 0.0;
  double err = 0.0;
  for (std::size_t ci = 0; ci < fps.components.size(); ++ci) {
    const auto& comp = fps.components[ci];
    ComponentIntegral out;
    out.a = comp.a;
    out.point = comp.point;
    if (cfg.degree > comp.a) {
      res.components.push_back(out);
      continue;
    }
    any = true;
    if ((n - comp.a) % 2 != 0)
      throw ASError("fixed set of odd codimension: gamma reverses orientation and has no spin lift");
    const int m = n - comp.a;
    Eigen::MatrixXd rot(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) rot(i, j) = comp.normal_action[i * m + j];
    auto cd = CurvatureData::flat(comp.a, rot, CMatrix::Identity(cfg.aux, cfg.aux));
    const ExteriorElement as = as_gamma_form(cd);
    const Complex phase = ipow(-kI, m / 2) * static_cast<double>(cfg.spin_sign);
    const Mask top = as.top_mask();
    auto integrand = [&](const std::vector<double>& x) -> Complex {
      double w = fsc.value(x.data());
      if (w == 0.0) return 0.0;
      return w * wedge(psi_gamma(c, *setup.chi, comp, x), as).scalar_coefficient(top);
    };
    if (comp.a == 0) {
      out.value = phase * integrand(comp.point);
      out.evaluations = 1;
    } else {
      const Box& win = fsc.support_windows()[ci];
      const int a = comp.a;
      auto tensor = [&](int panels, std::size_t& evals) {
        std::vector<Rule1D> rules;
        for (int j = 0; j < a; ++j)
          rules.push_back(composite_gauss_legendre(win.lo[j], win.hi[j], {}, panels, cfg.rhs_order));
        std::vector<std::size_t> idx(a, 0);
        std::vector<double> x(n);
        Complex s = 0.0;
        while (true) {
          double w = 1.0;
          x = comp.point;
          for (int j = 0; j < a; ++j) {
            double sj = rules[j].nodes[idx[j]];
            w *= rules[j].weights[idx[j]];
            for (int r = 0; r < n; ++r) x[r] += sj * comp.tangent[r * a + j];
          }
          s += w * integrand(x);
          ++evals;
          int j = 0;
          while (j < a && ++idx[j] == rules[j].nodes.size()) idx[j++] = 0;
          if (j == a) break;
        }
        return s;
      };
      std::size_t evals = 0;
      Complex fine = tensor(cfg.rhs_panels, evals);
      Complex coarse = tensor(std::max(1, cfg.rhs_panels / 2), evals);
      out.value = phase * fine;
      out.error = std::abs(fine - coarse);
      out.evaluations = evals;
    }
    total += out.value;
    err += out.error;
    res.components.push_back(out);
  }
  const Complex cq = res.constant.value();
  res.value = cq * total;
  res.error = std::abs(cq) * err;
  if (!any) res.note = "degree exceeds fixed-set dimension";
  return res;
}

// ---------------------------------------------------------------- degree 0

Degree0Result lhs_degree0(const PairingConfig& cfg) { return lhs_degree0(cfg, make_setup(cfg)); }

Degree0Result lhs_degree0(const PairingConfig& cfg, const PairingSetup& setup) {
  if (cfg.degree != 0) throw ConfigError("lhs_degree0 needs a degree-0 cochain");
  if (!setup.model) throw ConfigError("the Dirac model needs a two-dimensional group");
  const auto model = setup.model;
  Degree0Result res;
  const auto f = psi_inv(setup.cochain, setup.chi);
  const auto tau = lott_to_cyclic(setup.cochain, setup.ctx);
  for (double t : cfg.t) {
    Degree0Point p;
    p.t = t;
    auto e = cm_entry_kernels(*model, t)[0];
    auto R = cm_matrix_kernel(*model, t);
    const TailConstants tc = tail_constants(*setup.ctx, *setup.chi, {e}, cfg.growth_A, cfg.growth_K);
    const TailConstants tcR = tail_constants(*setup.ctx, *setup.chi, {R}, cfg.growth_A, cfg.growth_K);
    const int N = choose_radius(cfg, tc);
    PairingOptions o = setup.options;
    o.action = [model](const GroupElement& g) { return model->sigma(g); };
    o.trunc_radius = N;
    o.tail = &tc;
    p.supertrace = rho_inv(f, *setup.ctx, *setup.chi, {e}, o);
    o.trunc_radius = N + cfg.radius_step;
    p.supertrace_next = rho_inv(f, *setup.ctx, *setup.chi, {e}, o);
    PairingOptions o4 = setup.options;
    o4.action = [model](const GroupElement& g) { return block_sigma(*model, g); };
    o4.trunc_radius = N;
    o4.tail = &tcR;
    p.pairing = phi_pairing(tau, *setup.ctx, *setup.chi, {R}, o4);
    p.tail_bound = tail_bound(tc, N);
    res.points.push_back(p);
  }
  for (const auto& p : res.points) res.mean += p.pairing.value;
  res.mean /= static_cast<double>(res.points.size());
  for (const auto& p : res.points)
    res.spread = std::max(res.spread, std::abs(p.pairing.value - res.mean) / std::max(std::abs(res.mean), 1e-300));
  return res;
}

// ---------------------------------------------------------------- truncated higher pairing

int radius_for_tail(const TailConstants& tc, double eps, int max_radius) {
  for (int N = 0; N <= max_radius; ++N)
    if (tail_bound(tc, N) < eps) return N;
  return -1;
}

TruncatedResult pairing_truncated(const PairingConfig& cfg) { return pairing_truncated(cfg, make_setup(cfg)); }

TruncatedResult pairing_truncated(const PairingConfig& cfg, const PairingSetup& setup) {
  if (!setup.model) throw ConfigError("the Dirac model needs a two-dimensional group");
  const auto model = setup.model;
  TruncatedResult res;
  const int k = cfg.degree;
  for (double t : cfg.t) {
    TruncatedPoint p;
    p.t = t;
    std::vector<EquivariantKernel> A(k + 1, cm_matrix_kernel(*model, t));
    const TailConstants tc = tail_constants(*setup.ctx, *setup.chi, A, cfg.growth_A, cfg.growth_K);
    const int N = choose_radius(cfg, tc);
    p.radius = N;
    PairingOptions o = setup.options;
    o.action = [model](const GroupElement& g) { return block_sigma(*model, g); };
    o.trunc_radius = N;
    o.tail = &tc;
    p.value = rho_psi_tuples(setup.cochain, *setup.ctx, *setup.chi, A, o);
    p.tail_bound = tail_bound(tc, N);
    if (cfg.radius_step > 0 && N - cfg.radius_step >= 0) {
      o.trunc_radius = N - cfg.radius_step;
      p.value_prev = rho_psi_tuples(setup.cochain, *setup.ctx, *setup.chi, A, o);
      p.tail_bound_prev = tail_bound(tc, N - cfg.radius_step);
    }
    if (!std::isfinite(p.tail_bound)) {
      res.complete = false;
      res.note = "tail bound is not finite at t = " + format_number(t);
    }
    res.points.push_back(p);
  }
  const auto& P = res.points;
  if (P.size() >= 2) {
    const auto& a = P[P.size() - 2];
    const auto& b = P[P.size() - 1];
    res.extrapolated = (a.t * b.value.value - b.t * a.value.value) / (a.t - b.t);
    res.extrapolation_error = std::abs(res.extrapolated - b.value.value) + a.value.error + b.value.error;
  } else {
    res.extrapolated = P.front().value.value;
    res.extrapolation_error = P.front().value.error;
  }
  return res;
}

// ---------------------------------------------------------------- reports

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::pair<std::string, std::string>>& Report::section(const std::string& name) {
  for (auto& s : sections_)
    if (s.first == name) return s.second;
  sections_.push_back({name, {}});
  return sections_.back().second;
}

void Report::set(const std::string& sec, const std::string& key, const std::string& value) {
  auto& s = section(sec);
  for (auto& kv : s)
    if (kv.first == key) {
      kv.second = value;
      return;
    }
  s.push_back({key, value});
}
void Report::set(const std::string& sec, const std::string& key, double value) { set(sec, key, format_number(value)); }
void Report::set(const std::string& sec, const std::string& key, long long value) {
  set(sec, key, std::to_string(value));
}
void Report::set(const std::string& sec, const std::string& key, bool value) {
  set(sec, key, std::string(value ? "true" : "false"));
}
void Report::set(const std::string& sec, const std::string& key, Complex value) {
  set(sec, key + ".re", value.real());
  set(sec, key + ".im", value.imag());
}
void Report::set(const std::string& sec, const std::string& key, const PairingValue& v) {
  set(sec, key, v.value);
  set(sec, key + ".error", v.error);
  set(sec, key + ".tail_bound", v.tail_bound);
  set(sec, key + ".radius", v.radius);
  set(sec, key + ".terms", static_cast<long long>(v.terms));
  set(sec, key + ".evaluations", static_cast<long long>(v.evaluations));
  set(sec, key + ".method", v.method);
}

void Report::set_timing(const std::string& key, double seconds) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", seconds);
  timing_.push_back({key, buf});
}

const std::string* Report::find(const std::string& sec, const std::string& key) const {
  for (const auto& s : sections_)
    if (s.first == sec)
      for (const auto& kv : s.second)
        if (kv.first == key) return &kv.second;
  return nullptr;
}

std::string Report::render(bool with_timing) const {
  std::ostringstream o;
  bool first = true;
  for (const auto& [name, kvs] : sections_) {
    if (!first) o << '\n';
    first = false;
    o << '[' << name << "]\n";
    for (const auto& [k, v] : kvs) o << k << " = " << v << '\n';
  }
  if (with_timing && !timing_.empty()) {
    o << "\n[timing]\n";
    for (const auto& [k, v] : timing_) o << k << " = " << v << '\n';
  }
  return o.str();
}

void Report::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write report to " + path);
  out << render();
}

void report_config(Report& r, const PairingConfig& c) {
  const std::string s = "config";
  r.set(s, "group", c.group);
  r.set(s, "ball_radius", c.ball_radius);
  r.set(s, "gamma", c.gamma);
  r.set(s, "aux", c.aux);
  r.set(s, "spin_sign", c.spin_sign);
  r.set(s, "cochain", c.cochain);
  r.set(s, "degree", c.degree);
  r.set(s, "params", join(c.params));
  r.set(s, "growth_A", c.growth_A);
  r.set(s, "growth_K", c.growth_K);
  r.set(s, "cutoff_radius", c.cutoff_radius);
  r.set(s, "profile", c.profile);
  r.set(s, "cutoff_center", join(c.cutoff_center));
  r.set(s, "t", join(c.t));
  r.set(s, "radius", c.radius);
  r.set(s, "radius_step", c.radius_step);
  r.set(s, "tail_eps", c.tail_eps);
  r.set(s, "max_radius", c.max_radius);
  r.set(s, "eta", c.eta);
  r.set(s, "order", c.order);
  r.set(s, "max_panel", c.max_panel);
  r.set(s, "reach_tol", c.reach_tol);
  r.set(s, "qmc_samples", static_cast<long long>(c.qmc_samples));
  r.set(s, "qmc_replicates", c.qmc_replicates);
  r.set(s, "seed", static_cast<long long>(c.seed));
  r.set(s, "max_matrix", static_cast<long long>(c.max_matrix));
  r.set(s, "max_tensor_dim", c.max_tensor_dim);
  r.set(s, "antisymmetrize", c.antisymmetrize);
  r.set(s, "rhs_panels", c.rhs_panels);
  r.set(s, "rhs_order", c.rhs_order);
  r.set(s, "selector", c.selector);
  r.set(s, "tolerance", c.tolerance);
}

void report_rhs(Report& r, const RhsResult& rhs) {
  const std::string s = "rhs";
  r.set(s, "q", rhs.q);
  r.set(s, "constant", rhs.constant.text());
  r.set(s, "constant_value", rhs.constant.value());
  r.set(s, "value", rhs.value);
  r.set(s, "error", rhs.error);
  if (!rhs.note.empty()) r.set(s, "note", rhs.note);
  for (std::size_t i = 0; i < rhs.components.size(); ++i) {
    const auto& c = rhs.components[i];
    const std::string cs = s + ".component" + std::to_string(i);
    r.set(cs, "dimension", c.a);
    r.set(cs, "point", join(c.point));
    r.set(cs, "integral", c.value);
    r.set(cs, "error", c.error);
    r.set(cs, "evaluations", static_cast<long long>(c.evaluations));
  }
}

void report_degree0(Report& r, const Degree0Result& d) {
  r.set("lefschetz0", "mean_pairing", d.mean);
  r.set("lefschetz0", "relative_spread", d.spread);
  for (std::size_t i = 0; i < d.points.size(); ++i) {
    const auto& p = d.points[i];
    const std::string s = "lefschetz0.t" + std::to_string(i);
    r.set(s, "t", p.t);
    r.set(s, "supertrace", p.supertrace);
    r.set(s, "supertrace_next", p.supertrace_next.value);
    r.set(s, "radius_change", std::abs(p.supertrace_next.value - p.supertrace.value));
    r.set(s, "tail_bound", p.tail_bound);
    r.set(s, "pairing", p.pairing);
  }
}

void report_truncated(Report& r, const TruncatedResult& tr) {
  r.set("pairing", "extrapolated", tr.extrapolated);
  r.set("pairing", "extrapolation_error", tr.extrapolation_error);
  r.set("pairing", "extrapolation", std::string("linear in t through the two smallest t"));
  r.set("pairing", "complete", tr.complete);
  if (!tr.note.empty()) r.set("pairing", "note", tr.note);
  for (std::size_t i = 0; i < tr.points.size(); ++i) {
    const auto& p = tr.points[i];
    const std::string s = "pairing.t" + std::to_string(i);
    r.set(s, "t", p.t);
    r.set(s, "radius", p.radius);
    r.set(s, "value", p.value);
    r.set(s, "tail_bound", p.tail_bound);
    if (p.value_prev.terms > 0 || p.tail_bound_prev > 0) {
      r.set(s, "value_prev", p.value_prev.value);
      r.set(s, "tail_bound_prev", p.tail_bound_prev);
      r.set(s, "radius_change", std::abs(p.value.value - p.value_prev.value));
    }
  }
}

// ---------------------------------------------------------------- verification suite

bool VerifySummary::all_pass() const {
  return std::all_of(items.begin(), items.end(), [](const VerifyItem& i) { return i.pass; });
}

std::size_t VerifySummary::passed() const {
  return static_cast<std::size_t>(std::count_if(items.begin(), items.end(), [](const VerifyItem& i) { return i.pass; }));
}

std::vector<std::string> verify_groups() { return {"algebra", "diagram", "mehler", "constants", "getzler", "lefschetz0"}; }

std::vector<std::pair<std::string, int>> getzler_table() {
  return {{"H f", -2},   {"[H, f]", -3},   {"Q f", -4},   {"[Q, f]", -5},
          {"H cdf", -1}, {"[H, cdf]", -2}, {"Q cdf", -3}, {"[Q, cdf]", -4}};
}

namespace {

void add(VerifySummary& s, const std::string& group, const std::string& name, double value, double tol,
         const std::string& detail = "") {
  s.items.push_back({group, name, value, tol, std::isfinite(value) && value <= tol, detail});
}

void verify_algebra(VerifySummary& s) {
  auto G = make_group("Dinf");
  auto ctx = std::make_shared<ConjugacyContext>(G, G->named("r"));
  auto chi = std::make_shared<BumpCutoff>(G, 0.35);
  std::vector<GroupCochain> cs{constant_cochain(1.0), dinf_shift_cochain(ctx), conj_length_cochain(ctx, 1),
                               dinf_degree2_cocycle(ctx)};
  double d2 = 0, b2 = 0, btau = 0;
  for (const auto& c : cs) {
    const int k = c.degree;
    auto dd = lott_delta(lott_delta(c));
    for (const auto& I : random_tuples(*G, k + 3, 3, 200, 17)) d2 = std::max(d2, std::abs(dd(I)));
    auto tau = lott_to_cyclic(c, ctx);
    auto bb = hochschild_b(hochschild_b(tau));
    auto bt = hochschild_b(tau);
    auto td = lott_to_cyclic(lott_delta(c), ctx);
    for (const auto& I : random_tuples(*G, k + 3, 3, 200, 19)) b2 = std::max(b2, std::abs(bb(I)));
    for (const auto& I : random_tuples(*G, k + 2, 3, 200, 23)) btau = std::max(btau, std::abs(bt(I) - td(I)));
  }
  add(s, "algebra", "lott_delta_squared", d2, 1e-10);
  add(s, "algebra", "hochschild_b_squared", b2, 1e-10);
  add(s, "algebra", "b_tau_equals_tau_delta", btau, 1e-10);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-1.0, 1.5);
  double e2 = 0, eps_psi = 0, dpsi = 0, ppsi = 0, iph = 0;
  for (const auto& c : cs) {
    const int k = c.degree;
    auto F = psi_ext(c, chi);
    auto EF = eps_ext(F, chi);
    auto EEF = eps_ext(EF, chi);
    auto PF = psi_ext(lott_delta(c), chi);
    auto fi = psi_inv(c, chi);
    auto dfi = delta_inv(fi);
    auto fdi = psi_inv(lott_delta(c), chi);
    auto Pf = map_P(F);
    auto IP = map_I(Pf, chi);
    auto H = homotopy_H(F);
    auto EH = eps_ext(H, chi);
    auto HE = homotopy_H(EF);
    for (int n = 0; n < 60; ++n) {
      double base = U(rng);
      std::vector<double> x(k + 3);
      for (auto& v : x) v = base + 0.4 * (U(rng) - 0.25);
      std::vector<GroupElement> near;
      G->elements_near(x.data(), chi->center().data(), 0.5, near);
      auto eta = near.empty() ? G->identity() : near[rng() % near.size()];
      std::span<const double> x2(x.data(), k + 3), x1(x.data(), k + 2), x0(x.data(), k + 1);
      e2 = std::max(e2, std::abs(EEF(eta, x2)));
      eps_psi = std::max(eps_psi, std::abs(EF(eta, x1) - PF(eta, x1)));
      dpsi = std::max(dpsi, std::abs(dfi(x1) - fdi(x1)));
      ppsi = std::max(ppsi, std::abs(Pf(x0) - fi(x0)));
      Complex lhs = IP(eta, x0) - F(eta, x0);
      Complex rhs = (k > 0 ? EH(eta, x0) : Complex(0)) + HE(eta, x0);
      iph = std::max(iph, std::abs(lhs - rhs));
    }
  }
  add(s, "algebra", "eps_squared", e2, 1e-10);
  add(s, "algebra", "eps_psi_equals_psi_delta", eps_psi, 1e-10);
  add(s, "algebra", "delta_psi_inv", dpsi, 1e-10);
  add(s, "algebra", "p_psi_equals_psi_inv", ppsi, 1e-10);
  add(s, "algebra", "homotopy_identity", iph, 1e-10);
}

void verify_diagram(VerifySummary& s) {
  auto G = make_group("Dinf");
  auto ctx = std::make_shared<ConjugacyContext>(G, G->named("r"));
  auto chi = std::make_shared<BumpCutoff>(G, 0.35);
  PairingOptions opt;
  opt.trunc_radius = 12;
  for (int deg : {0, 2}) {
    GroupCochain c = deg == 0 ? constant_cochain(1.0) : dinf_degree2_cocycle(ctx);
    std::vector<GaussianTestKernel> gk;
    for (int i = 0; i <= deg; ++i) gk.push_back({1, 0.05 + 0.01 * i, 1.0, {}, {}});
    auto A = test_kernels(gk);
    for (auto& K : A) {
      auto inner = K.eval;
      K.eval = [inner](const double* x, const double* y, CMatrix& out) {
        inner(x, y, out);
        out(0, 0) *= 1.0 + 0.4 * std::cos(2 * M_PI * x[0]) * std::cos(2 * M_PI * y[0]) +
                     0.3 * std::sin(2 * M_PI * x[0]) * std::sin(4 * M_PI * y[0]);
      };
      auto sn = K.scaled_norm;
      K.scaled_norm = [sn](double r) { return 1.6 * sn(r); };
    }
    auto ph = phi_pairing(lott_to_cyclic(c, ctx), *ctx, *chi, A, opt);
    auto tu = rho_psi_tuples(c, *ctx, *chi, A, opt);
    double rel = std::abs(ph.value - tu.value) / std::max(std::abs(tu.value), 1e-300);
    add(s, "diagram", "phi_tau_equals_rho_psi_degree" + std::to_string(deg), rel, 1e-5,
        "value " + format_number(tu.value.real()));
  }
}

void verify_mehler(VerifySummary& s) {
  double pde = 0;
  for (double w : {0.7, 1.5}) {
    Eigen::MatrixXd R(2, 2);
    R << 0.0, w, -w, 0.0;
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j)
        for (double t : {0.3, 0.6, 1.0}) {
          std::vector<double> x{-0.6 + 0.3 * i, 0.2 - 0.1 * j}, y{0.1 * j - 0.2, 0.25 * i - 0.5};
          pde = std::max(pde, mehler_pde_residual(R, x, y, t));
        }
  }
  add(s, "mehler", "pde_residual", pde, 1e-6);
  double lim = 0;
  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(2, 2);
  for (int i = 0; i < 5; ++i) {
    std::vector<double> x{0.3 * i - 0.5, 0.1 * i}, y{0.2, -0.1 * i};
    for (double t : {0.2, 1.0}) {
      double g = gaussian_heat_kernel(x, y, t);
      lim = std::max(lim, std::abs(mehler_kernel(Z, x, y, t) - g) / g);
    }
  }
  add(s, "mehler", "zero_curvature_limit", lim, 1e-10);
  double fp = 0;
  for (double th : {M_PI, M_PI / 2})
    for (double u : {0.5, 1.0}) {
      Eigen::MatrixXd rot(2, 2), Rn(2, 2);
      rot << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
      Rn << 0.0, 0.8, -0.8, 0.0;
      fp = std::max(fp, std::abs(model_fixed_point_numeric(Rn, rot, u) - normal_fiber_integral(Rn, rot, u)));
    }
  add(s, "mehler", "fixed_point_integral", fp, 1e-7);
}

void verify_constants(VerifySummary& s) {
  double bad = 0;
  for (int q = 0; q <= 6; ++q) {
    Rational f = 1;
    for (int i = 2; i <= q; ++i) f *= i;
    Rational d = 1;
    for (int i = 2; i <= 2 * q + 1; ++i) d *= i;
    if (alpha_exact(q) != f / d) bad += 1;
  }
  add(s, "constants", "alpha_exact_mismatches", bad, 0.0);
  double dd = 0;
  for (int q = 1; q <= 4; ++q) {
    auto c = constants(q, 2);
    dd = std::max(dd, std::abs(c.delta - c.delta_direct));
  }
  add(s, "constants", "delta_relation", dd, 1e-8);
  auto c1 = c_constant(1);
  double ok = (c1.coefficient == Rational(1, 2) && c1.pi_power == -1 && c1.i_power == 1) ? 0.0 : 1.0;
  add(s, "constants", "c1_is_i_over_2pi", ok, 0.0, c1.text());
}

void verify_getzler(VerifySummary& s) {
  int mism = 0;
  for (const auto& [expr, order] : getzler_table())
    if (getzler_order(expr) != order) ++mism;
  if (getzler_order("[D2, f]") != 1) ++mism;
  if (getzler_order("[D2, cdf]") != 2) ++mism;
  add(s, "getzler", "table_mismatches", mism, 0.0, "8 table rows and 2 commutators");
}

void verify_lefschetz0(VerifySummary& s, const PairingConfig& given) {
  // the configured model when it is a degree-0 planar one, else the point-reflection default
  PairingConfig cfg = given;
  if (cfg.degree != 0 || make_group(cfg.group, 1)->dim() != 2) cfg = PairingConfig{};
  auto setup = make_setup(cfg);
  auto rhs = rhs_evaluate(cfg, setup);
  auto lhs = lhs_degree0(cfg, setup);
  double gap = std::abs(lhs.mean - rhs.value) / std::max(std::abs(rhs.value), 1e-300);
  add(s, "lefschetz0", "lhs_rhs_relative_gap", gap, cfg.tolerance,
      "lhs " + format_number(lhs.mean.real()) + " " + format_number(lhs.mean.imag()) + " rhs " +
          format_number(rhs.value.real()) + " " + format_number(rhs.value.imag()));
  add(s, "lefschetz0", "t_spread", lhs.spread, 1e-4);
  double worst = 0;
  for (const auto& p : lhs.points) {
    double ch = std::abs(p.supertrace_next.value - p.supertrace.value);
    worst = std::max(worst, p.tail_bound > 0 ? ch / p.tail_bound : (ch > 0 ? INFINITY : 0.0));
  }
  add(s, "lefschetz0", "radius_change_over_tail_bound", worst, 1.0);
}

}  // namespace

VerifySummary verify_suite(const std::string& selector, const PairingConfig& cfg) {
  std::vector<std::string> want;
  std::string sel = selector;
  std::replace(sel.begin(), sel.end(), ',', ' ');
  std::istringstream in(sel);
  std::string tok;
  const auto groups = verify_groups();
  while (in >> tok) {
    if (tok == "all") {
      want = groups;
      break;
    }
    if (std::find(groups.begin(), groups.end(), tok) == groups.end())
      throw ConfigError("unknown verify group '" + tok + "'");
    want.push_back(tok);
  }
  if (want.empty()) throw ConfigError("empty verify selector");
  VerifySummary s;
  for (const auto& g : groups) {
    if (std::find(want.begin(), want.end(), g) == want.end()) continue;
    if (g == "algebra") verify_algebra(s);
    if (g == "diagram") verify_diagram(s);
    if (g == "mehler") verify_mehler(s);
    if (g == "constants") verify_constants(s);
    if (g == "getzler") verify_getzler(s);
    if (g == "lefschetz0") verify_lefschetz0(s, cfg);
  }
  return s;
}

void report_verify(Report& r, const VerifySummary& s) {
  r.set("verify", "checks", static_cast<long long>(s.items.size()));
  r.set("verify", "passed", static_cast<long long>(s.passed()));
  r.set("verify", "all_pass", s.all_pass());
  for (const auto& i : s.items) {
    const std::string sec = "verify." + i.group + "." + i.name;
    r.set(sec, "value", i.value);
    r.set(sec, "tolerance", i.tolerance);
    r.set(sec, "pass", i.pass);
    if (!i.detail.empty()) r.set(sec, "detail", i.detail);
  }
}

}  // namespace lef
