#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lefschetz/lefschetz.hpp"

namespace py = pybind11;
using namespace lef;

namespace {

py::dict pairing_dict(const PairingValue& v) {
  py::dict d;
  d["value"] = v.value;
  d["error"] = v.error;
  d["tail_bound"] = v.tail_bound;
  d["radius"] = v.radius;
  d["terms"] = v.terms;
  d["method"] = v.method;
  return d;
}

}  // namespace

PYBIND11_MODULE(_lefschetz, m) {
  m.doc() = "delocalized index pairings on flat orbifold models";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<PairingConfig>(m, "Config")
      .def(py::init<>())
      .def_readwrite("group", &PairingConfig::group)
      .def_readwrite("gamma", &PairingConfig::gamma)
      .def_readwrite("aux", &PairingConfig::aux)
      .def_readwrite("spin_sign", &PairingConfig::spin_sign)
      .def_readwrite("cochain", &PairingConfig::cochain)
      .def_readwrite("degree", &PairingConfig::degree)
      .def_readwrite("params", &PairingConfig::params)
      .def_readwrite("cutoff_radius", &PairingConfig::cutoff_radius)
      .def_readwrite("profile", &PairingConfig::profile)
      .def_readwrite("t", &PairingConfig::t)
      .def_readwrite("radius", &PairingConfig::radius)
      .def_readwrite("radius_step", &PairingConfig::radius_step)
      .def_readwrite("eta", &PairingConfig::eta)
      .def_readwrite("qmc_samples", &PairingConfig::qmc_samples)
      .def_readwrite("qmc_replicates", &PairingConfig::qmc_replicates)
      .def_readwrite("seed", &PairingConfig::seed)
      .def_readwrite("tolerance", &PairingConfig::tolerance)
      .def("validate", &PairingConfig::validate)
      .def("text", [](const PairingConfig& c) { return config_text(c); });

  m.def("parse_config", &parse_config, py::arg("text"));
  m.def("load_config", &load_config, py::arg("path"));

  m.def(
      "rhs",
      [](const PairingConfig& cfg) {
        auto r = rhs_evaluate(cfg);
        py::dict d;
        d["value"] = r.value;
        d["error"] = r.error;
        d["q"] = r.q;
        d["constant"] = r.constant.text();
        d["components"] = r.components.size();
        d["note"] = r.note;
        return d;
      },
      py::arg("config"), "fixed-point side c(q,n) ∫ chi_gamma Psi^gamma(c) ^ AS_gamma");

  m.def(
      "lefschetz0",
      [](const PairingConfig& cfg) {
        auto r = lhs_degree0(cfg);
        py::list pts;
        for (const auto& p : r.points) {
          py::dict d;
          d["t"] = p.t;
          d["supertrace"] = pairing_dict(p.supertrace);
          d["supertrace_next"] = pairing_dict(p.supertrace_next);
          d["pairing"] = pairing_dict(p.pairing);
          d["tail_bound"] = p.tail_bound;
          pts.append(d);
        }
        py::dict out;
        out["points"] = pts;
        out["mean"] = r.mean;
        out["spread"] = r.spread;
        return out;
      },
      py::arg("config"));

  m.def(
      "pair",
      [](const PairingConfig& cfg) {
        auto r = pairing_truncated(cfg);
        py::list pts;
        for (const auto& p : r.points) {
          py::dict d;
          d["t"] = p.t;
          d["value"] = pairing_dict(p.value);
          d["tail_bound"] = p.tail_bound;
          pts.append(d);
        }
        py::dict out;
        out["points"] = pts;
        out["extrapolated"] = r.extrapolated;
        out["extrapolation_error"] = r.extrapolation_error;
        out["complete"] = r.complete;
        out["note"] = r.note;
        return out;
      },
      py::arg("config"));

  m.def(
      "verify",
      [](const std::string& selector, const PairingConfig& cfg) {
        py::list out;
        for (const auto& i : verify_suite(selector, cfg).items) {
          py::dict d;
          d["group"] = i.group;
          d["name"] = i.name;
          d["value"] = i.value;
          d["tolerance"] = i.tolerance;
          d["pass"] = i.pass;
          d["detail"] = i.detail;
          out.append(d);
        }
        return out;
      },
      py::arg("selector") = "all", py::arg("config") = PairingConfig{});

  m.def(
      "constants",
      [](int q, int n) {
        auto c = lef::constants(q, n);
        py::dict d;
        d["alpha"] = to_string(c.alpha);
        d["alpha_numeric"] = c.alpha_numeric;
        d["beta"] = c.beta;
        d["delta"] = c.delta;
        d["c_qn"] = c.c_qn.value();
        d["c_qn_text"] = c.c_qn.text();
        return d;
      },
      py::arg("q"), py::arg("n") = 2);

  m.def("getzler_order", &getzler_order, py::arg("expr"));
  m.def("verify_groups", &verify_groups);
}
