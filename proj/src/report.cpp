#include "flexspim/report.hpp"

#include <cmath>

namespace flexspim {

using nlohmann::json;

double round_to(double v, int decimals) {
  const double s = std::pow(10.0, decimals);
  return std::round(v * s) / s;
}

json params_json(const EnergyParams& p) {
  return {{"e_col_active_pj", p.e_col_active_pj},   {"standby_factor", p.standby_factor},
          {"carry_overhead_max", p.carry_overhead_max}, {"e_broadcast_bit_pj", p.e_broadcast_bit_pj},
          {"e_buf_bit_pj", p.e_buf_bit_pj},         {"e_dram_bit_pj", p.e_dram_bit_pj},
          {"f_clk_mhz", p.f_clk_mhz},               {"buffer_bits", p.buffer_bits}};
}

json plan_json(const DataflowPlan& plan) {
  json layers = json::array();
  for (std::size_t i = 0; i < plan.layers.size(); ++i) {
    const auto& a = plan.layers[i];
    json l = {{"layer", i},
              {"stationary", a.stationary == OperandKind::Weights ? "weights" : "potentials"},
              {"tiled", a.tiled},
              {"stationary_bits", a.stationary_bits},
              {"streamed_bits", a.streamed_bits},
              {"tiles", a.tiles},
              {"bits_w", plan.footprints[i].bits_w},
              {"bits_v", plan.footprints[i].bits_v}};
    l["macro"] = a.macro ? json(*a.macro) : json(nullptr);
    layers.push_back(std::move(l));
  }
  const auto obj = plan.objective();
  const auto st = stationarity_metric(plan);
  return {{"policy", policy_name(plan.policy)},
          {"n_macros", plan.config.n_macros},
          {"capacity_bits", plan.config.capacity_bits},
          {"reserve_bits", plan.config.reserve_bits},
          {"streamed_bits", obj.streamed_bits},
          {"tiled_layers", obj.tiled_layers},
          {"macros_used", obj.macros_used},
          {"stationary_bits", st.stationary_bits},
          {"stationarity", round_to(st.fraction)},
          {"macro_bits", plan.macro_bits},
          {"layers", layers},
          {"warnings", plan.warnings}};
}

json step_json(const StepStats& s) {
  return {{"cim_cycles", s.cim_cycles},
          {"compare_ops", s.compare_ops},
          {"sops", s.sops},
          {"broadcast_bits", s.broadcast_bits},
          {"stationary_load_bits", s.stationary_load_bits},
          {"streamed_bits", s.streamed_bits},
          {"reload_events", s.reload_events},
          {"saturations", s.saturations},
          {"input_spikes", s.input_spikes},
          {"output_spikes", s.output_spikes},
          {"active_col_cycles", s.active_col_cycles},
          {"standby_col_cycles", s.standby_col_cycles}};
}

json stats_json(const RunStats& stats) {
  json layers = json::array();
  for (std::size_t l = 0; l < stats.layers; ++l) layers.push_back(step_json(stats.layer_total(l)));
  return {{"timesteps", stats.timesteps}, {"total", step_json(stats.total())}, {"layers", layers}};
}

namespace {

json layer_energy_json(const LayerEnergy& e) {
  return {{"e_cim_pj", round_to(e.e_cim)},         {"e_compare_pj", round_to(e.e_compare)},
          {"e_broadcast_pj", round_to(e.e_broadcast)}, {"e_buffer_pj", round_to(e.e_buffer)},
          {"e_dram_pj", round_to(e.e_dram)},       {"e_total_pj", round_to(e.total())},
          {"cycles", round_to(e.cycles)},          {"sops", round_to(e.sops)}};
}

}  // namespace

json energy_json(const EnergyReport& r) {
  json layers = json::array();
  for (const auto& l : r.layers) layers.push_back(layer_energy_json(l));
  return {{"total", layer_energy_json(r.total)},
          {"pj_per_sop", round_to(r.pj_per_sop)},
          {"gsops", round_to(r.gsops)},
          {"normalized_fj_per_sop", round_to(r.normalized_fj_per_sop)},
          {"normalized_gsops", round_to(r.normalized_gsops)},
          {"layers", layers}};
}

json report_header(const std::string& command, const std::string& workload, std::uint64_t seed,
                   const EnergyParams& p) {
  return {{"tool", "flexspim"},
          {"version", "0.1.0"},
          {"command", command},
          {"workload", workload},
          {"seed", seed},
          {"calibration_hash", calibration_hash(p)},
          {"calibration", params_json(p)}};
}

}  // namespace flexspim
