// Python module: thin wrappers over the C++ core. Structured results cross
// the boundary as JSON text and are decoded on the Python side.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <random>

#include "flexspim/cost_model.hpp"
#include "flexspim/mapper.hpp"
#include "flexspim/random_model.hpp"
#include "flexspim/report.hpp"
#include "flexspim/runtime.hpp"
#include "flexspim/verify.hpp"
#include "flexspim/workload_io.hpp"

namespace py = pybind11;
using namespace flexspim;

namespace {

using EventTuple = std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>;

EventStream to_events(const ModelSpec& m, const std::optional<std::vector<EventTuple>>& events, double density,
                      std::uint64_t seed) {
  EventStream ev;
  if (events) {
    for (const auto& [t, c, x, y] : *events) ev.events.push_back({t, c, x, y});
  } else {
    std::mt19937_64 rng(seed);
    ev = gen::random_events(rng, m, density);
  }
  ev.validate(m);
  return ev;
}

MapperConfig mapper_config(std::size_t n_macros) {
  if (n_macros == 0) throw std::invalid_argument("n_macros must be positive");
  MapperConfig mc;
  mc.n_macros = n_macros;
  return mc;
}

}  // namespace

PYBIND11_MODULE(_flexspim, m) {
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ModelError>(m, "ModelError", PyExc_ValueError);

  py::class_<LayerSpec>(m, "Layer")
      .def_property_readonly("kind", [](const LayerSpec& l) { return l.kind == LayerKind::Conv ? "conv" : "fc"; })
      .def_readonly("c_in", &LayerSpec::c_in)
      .def_readonly("c_out", &LayerSpec::c_out)
      .def_readonly("h_out", &LayerSpec::h_out)
      .def_readonly("w_out", &LayerSpec::w_out)
      .def_readonly("res_w", &LayerSpec::res_w)
      .def_readonly("res_v", &LayerSpec::res_v)
      .def_readonly("theta", &LayerSpec::theta)
      .def_property_readonly("neurons", &LayerSpec::neurons)
      .def_property_readonly("weight_count", &LayerSpec::weight_count)
      .def_property_readonly("footprint_bits", [](const LayerSpec& l) {
        const auto f = footprint(l);
        return std::make_tuple(f.bits_w, f.bits_v);
      });

  py::class_<ModelSpec>(m, "Model")
      .def_readonly("name", &ModelSpec::name)
      .def_readonly("timesteps", &ModelSpec::timesteps)
      .def_property_readonly("input_shape",
                             [](const ModelSpec& s) { return std::make_tuple(s.in_c, s.in_h, s.in_w); })
      .def_readonly("layers", &ModelSpec::layers);

  m.def("load_workload", [](const std::string& path) { return load_workload(path).model; }, py::arg("path"));
  m.def("parse_workload", [](const std::string& text) { return parse_workload(text).model; }, py::arg("text"));

  m.def("policies", [] {
    std::vector<std::string> out;
    for (Policy p : all_policies()) out.push_back(policy_name(p));
    return out;
  });

  m.def(
      "plan_json",
      [](const ModelSpec& model, const std::string& policy, std::size_t n_macros) {
        return plan_json(plan(model, parse_policy(policy), mapper_config(n_macros))).dump();
      },
      py::arg("model"), py::arg("policy") = "hs-opt", py::arg("n_macros") = 16);

  m.def(
      "simulate_json",
      [](const ModelSpec& model, std::optional<std::vector<EventTuple>> events, const std::string& policy,
         std::size_t n_macros, double density, std::uint64_t seed, bool check_reference) {
        const EventStream ev = to_events(model, events, density, seed);
        const DataflowPlan pl = plan(model, parse_policy(policy), mapper_config(n_macros));
        RunResult r;
        std::string mismatch;
        {
          py::gil_scoped_release nogil;
          r = run_on_macros(model, ev, pl);
          if (check_reference) mismatch = compare_runs(reference_run(model, ev), r);
        }
        nlohmann::json j;
        nlohmann::json spikes = nlohmann::json::array();
        for (const auto& s : spike_records(model, r)) spikes.push_back({s.t, s.layer, s.c, s.x, s.y});
        j["spikes"] = spikes;
        j["stats"] = stats_json(r.stats);
        j["plan"] = plan_json(pl);
        j["dropped_events"] = r.dropped_events;
        if (check_reference) j["reference_mismatch"] = mismatch;
        return j.dump();
      },
      py::arg("model"), py::arg("events") = py::none(), py::arg("policy") = "hs-opt", py::arg("n_macros") = 16,
      py::arg("density") = 0.2, py::arg("seed") = 1, py::arg("check_reference") = false);

  m.def(
      "estimate_json",
      [](const ModelSpec& model, double sparsity, const std::string& policy, std::size_t n_macros) {
        if (!(sparsity >= 0.0 && sparsity <= 1.0)) throw std::invalid_argument("sparsity must be in [0, 1]");
        SystemConfig c;
        c.policy = parse_policy(policy);
        c.n_macros = mapper_config(n_macros).n_macros;
        nlohmann::json j = energy_json(config_energy(model, c, sparsity));
        j["gain_vs_fixed_4_8_16"] =
            round_to(efficiency_gain(model, c, fixed_precision_baseline(c.params), {sparsity}).at(0).gain);
        j["gain_vs_fixed_6_11"] =
            round_to(efficiency_gain(model, c, fixed_6_11_baseline(c.params), {sparsity}).at(0).gain);
        j["calibration_hash"] = calibration_hash(c.params);
        return j.dump();
      },
      py::arg("model"), py::arg("sparsity") = 0.9, py::arg("policy") = "hs-opt", py::arg("n_macros") = 16);

  m.def(
      "verify",
      [](std::uint64_t seed, bool full) {
        VerifyOptions o;
        o.seed = seed;
        o.full = full;
        std::vector<CheckResult> rs;
        {
          py::gil_scoped_release nogil;
          rs = run_verify(o);
        }
        py::list out;
        for (const auto& r : rs) {
          py::dict d;
          d["name"] = r.name;
          d["passed"] = r.passed;
          d["cases"] = r.cases;
          d["counterexample"] = r.counterexample;
          out.append(d);
        }
        return out;
      },
      py::arg("seed") = 1, py::arg("full") = false);

  m.def(
      "peak_throughput",
      [](std::size_t res_w, std::size_t res_v, std::size_t n_cols, double f_mhz) {
        const auto t = peak_throughput(plan_layout(res_w, res_v, n_cols), f_mhz);
        return std::make_tuple(t.gsops, t.normalized_gsops);
      },
      py::arg("res_w"), py::arg("res_v"), py::arg("n_cols"), py::arg("f_mhz") = 157.0);

  m.def("default_calibration_hash", [] { return calibration_hash(EnergyParams{}); });
}
