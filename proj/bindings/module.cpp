// Python bindings for the workbench's main operations: model parsing and
// expansion, property checking, risk modelling, design-space generation,
// synthesis, controller extraction, and the work-cell simulator.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "safectrl/mtl.hpp"
#include "safectrl/pipeline.hpp"

namespace py = pybind11;
using namespace safectrl;

namespace {

std::map<std::string, Value> to_values(const py::dict& d) {
  std::map<std::string, Value> out;
  for (auto item : d) {
    std::string key = py::cast<std::string>(item.first);
    if (py::isinstance<py::bool_>(item.second))
      out[key] = Value::boolean(py::cast<bool>(item.second));
    else if (py::isinstance<py::int_>(item.second))
      out[key] = Value::integer(py::cast<std::int64_t>(item.second));
    else
      out[key] = Value::real(py::cast<double>(item.second));
  }
  return out;
}

py::object check_to_py(const CheckResult& r) {
  if (r.is_boolean) return py::bool_(r.truth);
  return py::float_(r.value);
}

}  // namespace

PYBIND11_MODULE(safectrl_py, m) {
  m.doc() = "verified synthesis workbench for discrete-event safety controllers";

  py::register_exception<ModelError>(m, "ModelError");
  py::register_exception<ParseError>(m, "ParseFailure");

  py::class_<ExplicitModel>(m, "ExplicitModel")
      .def_property_readonly("num_states", [](const ExplicitModel& x) { return x.num_states(); })
      .def_property_readonly("kind",
                             [](const ExplicitModel& x) {
                               return x.kind == ModelKind::Mdp ? "mdp" : "dtmc";
                             })
      .def("check",
           [](const ExplicitModel& x, const std::string& prop) {
             return check_to_py(check_query(x, parse_property(prop, x)));
           })
      .def("accident_freedom", [](const ExplicitModel& x) {
        Triple t = accident_freedom_summary(x, {});
        return py::make_tuple(t.min, t.mean, t.max);
      });

  py::class_<ProcessModel>(m, "ProcessModel")
      .def_property_readonly("parameters", &ProcessModel::parameter_names)
      .def("expand",
           [](const ProcessModel& pm, const py::dict& params) {
             return expand(pm, to_values(params));
           },
           py::arg("params") = py::dict())
      .def("__str__", [](const ProcessModel& pm) { return print_model(pm); });

  m.def("parse_model", &parse_model, "parse a guarded-command model");

  py::class_<RiskModel>(m, "RiskModel")
      .def_property_readonly("factors",
                             [](const RiskModel& rm) {
                               std::vector<std::string> ids;
                               for (const auto& f : rm.factors) ids.push_back(f.id);
                               return ids;
                             })
      .def("grad_act",
           [](const RiskModel& rm, const std::string& a, const std::string& b) {
             return grad(rm.act, a, b);
           })
      .def("grad_safmod",
           [](const RiskModel& rm, const std::string& a, const std::string& b) {
             return grad(rm.safmod, a, b);
           })
      .def("risk_space_size", [](const RiskModel& rm) { return risk_space(rm).size(); });

  m.def("parse_risk_model", &parse_risk_model, "parse a risk-factor model");

  py::class_<GeneratedModel>(m, "GeneratedModel")
      .def_property_readonly("text", [](const GeneratedModel& g) { return g.text; })
      .def_property_readonly("command_count", [](const GeneratedModel& g) { return g.command_count; })
      .def_property_readonly(
          "model", [](const GeneratedModel& g) { return g.model; },
          py::return_value_policy::copy)
      .def("instantiate",
           [](const GeneratedModel& g, const py::dict& point) {
             return instantiate(g, default_point(g, nullptr, to_values(point)), 5000000);
           },
           py::arg("point") = py::dict());

  py::class_<ControllerTable>(m, "ControllerTable")
      .def_property_readonly("rule_count", [](const ControllerTable& t) { return t.rules.size(); })
      .def_property_readonly("monitored", [](const ControllerTable& t) { return t.monitored; })
      .def_property_readonly("controlled", [](const ControllerTable& t) { return t.controlled; })
      .def("__str__", [](const ControllerTable& t) { return print_controller(t); });

  py::class_<ProjectConfig>(m, "Project")
      .def(py::init(&load_project))
      .def("build_mdp", [](const ProjectConfig& cfg) { return build_mdp(cfg); })
      .def("build_pdtmc", [](const ProjectConfig& cfg) { return build_pdtmc(cfg); })
      .def("build_baseline", [](const ProjectConfig& cfg) { return build_baseline(cfg); })
      .def("extract",
           [](const ProjectConfig& cfg) {
             GeneratedModel pd = build_pdtmc(cfg);
             ExplicitModel chain =
                 instantiate(pd, default_point(pd, nullptr, cfg.extract_params), cfg.state_cap);
             return extract_controller(chain, pd);
           })
      .def("synth", [](const ProjectConfig& cfg) {
        GeneratedModel pd = build_pdtmc(cfg);
        SynthesisQuery q = parse_query(read_file(cfg.resolve(cfg.query_file)));
        auto front = synth_pdtmc(pd, q);
        py::list out;
        for (const auto& sp : front) {
          py::dict d;
          d["productivity"] = sp.objectives[0];
          d["nuisance"] = sp.objectives[1];
          d["risk"] = sp.objectives[2];
          py::dict params;
          for (const auto& [n, v] : sp.params)
            params[py::str(n)] = v.type == Value::Type::Real ? py::object(py::float_(v.r))
                                                             : py::object(py::int_(v.i));
          d["params"] = params;
          out.append(d);
        }
        return out;
      });

  m.def(
      "gen_test_vectors",
      [](int n, double total, const std::vector<double>& bounds, std::uint64_t seed) {
        auto vs = gen_test_vectors(n, total, bounds, seed);
        py::list out;
        for (const auto& v : vs) out.append(py::make_tuple(v[0], v[1], v[2], v[3]));
        return out;
      },
      py::arg("n"), py::arg("total"), py::arg("bounds") = std::vector<double>{},
      py::arg("seed") = 1);

  m.def(
      "run_scenario",
      [](const ControllerTable& table, const std::vector<double>& waits, std::uint64_t seed,
         double horizon_s, int operators) {
        Scenario s;
        s.table = &table;
        for (std::size_t k = 0; k < 4 && k < waits.size(); ++k) s.waits_s[k] = waits[k];
        s.seed = seed;
        s.horizon_s = horizon_s;
        s.operators = operators;
        TimedTrace t = run_scenario(s);
        return print_trace(t);
      },
      py::arg("table"), py::arg("waits"), py::arg("seed") = 1, py::arg("horizon_s") = 30.0,
      py::arg("operators") = 1);

  m.def("check_trace", [](const std::string& trace_text, const std::string& formula) {
    TimedTrace t = parse_trace(trace_text);
    Mtl f = parse_mtl(formula, t.decls);
    MtlVerdict v = check_trace(t, f);
    return py::make_tuple(v.pass, v.violation_index);
  });
}
