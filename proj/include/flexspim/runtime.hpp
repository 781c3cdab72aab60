#pragma once

// Timestep-by-timestep SNN execution: a scalar integer reference and an
// executor that runs every layer on a simulated macro under a dataflow plan.

#include <cstdint>
#include <string>
#include <vector>

#include "flexspim/mapper.hpp"
#include "flexspim/model.hpp"

namespace flexspim {

struct StepStats {
  std::uint64_t cim_cycles = 0;
  std::uint64_t compare_ops = 0;
  std::uint64_t sops = 0;
  std::uint64_t broadcast_bits = 0;
  std::uint64_t stationary_load_bits = 0;
  std::uint64_t streamed_bits = 0;  // macro <-> buffer traffic besides broadcasts
  std::uint64_t reload_events = 0;
  std::uint64_t saturations = 0;
  std::uint64_t input_spikes = 0;
  std::uint64_t output_spikes = 0;
  std::uint64_t active_col_cycles = 0;
  std::uint64_t standby_col_cycles = 0;

  StepStats& operator+=(const StepStats& o);
  bool operator==(const StepStats&) const = default;
};

struct RunStats {
  std::size_t layers = 0;
  std::size_t timesteps = 0;
  std::vector<StepStats> cells;  // layer-major

  RunStats() = default;
  RunStats(std::size_t l, std::size_t t) : layers(l), timesteps(t), cells(l * t) {}
  StepStats& at(std::size_t layer, std::size_t t) { return cells.at(layer * timesteps + t); }
  const StepStats& at(std::size_t layer, std::size_t t) const { return cells.at(layer * timesteps + t); }
  StepStats layer_total(std::size_t layer) const;
  StepStats total() const;
};

struct RunResult {
  /// spikes[layer][t][neuron]
  std::vector<std::vector<std::vector<std::uint8_t>>> spikes;
  /// final_potentials[layer][neuron]
  std::vector<std::vector<std::int64_t>> final_potentials;
  RunStats stats;
  std::size_t dropped_events = 0;
  std::vector<std::string> warnings;
  std::vector<std::string> grid_dumps;  // per layer, only with RunOptions::dump_grids
};

/// Scalar integer executor. Event mode visits only the neurons each input
/// spike reaches; dense mode sweeps every neuron over its receptive field.
/// Both add contributions to a neuron in ascending input order, saturating
/// after every addition.
RunResult reference_run(const ModelSpec& model, const EventStream& events, bool dense = false);

struct RunOptions {
  std::size_t row_budget = kMacroRows;  // rows of the macro a layer may use
  AdderFault fault = AdderFault::None;
  bool dump_grids = false;  // keep a hex dump of every layer's macro after the last step
};

/// Runs every layer on its own simulated macro following `plan`'s
/// stationarity choice: weight-stationary layers keep weights resident and
/// stream potentials through working rows, potential-stationary layers keep
/// potentials resident and broadcast weights. Layers that do not fit (or
/// that the plan tiles) are processed in tiles reloaded every timestep.
RunResult run_on_macros(const ModelSpec& model, const EventStream& events, const DataflowPlan& plan,
                        const RunOptions& options = {});

struct SpikeRecord {
  std::size_t t;
  std::size_t layer;
  std::size_t c;
  std::size_t x;
  std::size_t y;
};

std::vector<SpikeRecord> spike_records(const ModelSpec& model, const RunResult& result);

/// First mismatch between two runs' spikes or final potentials, empty if identical.
std::string compare_runs(const RunResult& a, const RunResult& b);

}  // namespace flexspim
