#pragma once

// JSON views of plans, run statistics and energy reports. Energies are in
// pJ, rates in GSOP/s; floating values are rounded to a fixed number of
// decimals so reports diff cleanly.

#include <string>

#include "json.hpp"

#include "flexspim/cost_model.hpp"
#include "flexspim/mapper.hpp"
#include "flexspim/runtime.hpp"

namespace flexspim {

double round_to(double v, int decimals = 4);

nlohmann::json params_json(const EnergyParams& p);
nlohmann::json plan_json(const DataflowPlan& plan);
nlohmann::json step_json(const StepStats& s);
/// Totals plus one entry per layer; per-timestep cells go to the stats CSV.
nlohmann::json stats_json(const RunStats& stats);
nlohmann::json energy_json(const EnergyReport& r);

/// Common header of every report: tool version, workload, seed, calibration.
nlohmann::json report_header(const std::string& command, const std::string& workload, std::uint64_t seed,
                             const EnergyParams& p);

}  // namespace flexspim
