#pragma once

// Cycle, throughput and energy accounting for macros and many-macro systems.

#include <cstdint>
#include <string>
#include <vector>

#include "flexspim/macro.hpp"
#include "flexspim/mapper.hpp"
#include "flexspim/model.hpp"
#include "flexspim/runtime.hpp"

namespace flexspim {

struct EnergyParams {
  double e_col_active_pj = 0.45;
  double standby_factor = 0.13;
  double carry_overhead_max = 0.05;  // reached at a 256-column chain
  double e_broadcast_bit_pj = 0.05;
  double e_buf_bit_pj = 0.2;
  double e_dram_bit_pj = 20.0;
  double f_clk_mhz = 157.0;
  std::uint64_t buffer_bits = 8 * 1024 * 1024;  // global on-chip buffer

  /// Relative extra energy of chaining n_cols columns; 0 for one column.
  double carry_overhead(std::size_t n_cols) const;
  void validate() const;
  bool operator==(const EnergyParams&) const = default;
};

/// key = value text, '#' comments. Unknown keys and malformed values throw ConfigError naming the line.
EnergyParams parse_calibration(const std::string& text);
std::string calibration_text(const EnergyParams& p);
/// FNV-1a of the canonical calibration text, as 16 hex digits.
std::string calibration_hash(const EnergyParams& p);

std::size_t cycles_per_sop(const MacroLayout& layout);

struct Throughput {
  double gsops = 0.0;
  double normalized_gsops = 0.0;  // x res_w x res_v
};
Throughput peak_throughput(const MacroLayout& layout, double f_clk_mhz);

/// Energy of one macro cycle with `active_slots` slots chained and every other column standby.
double macro_cycle_energy_pj(const MacroLayout& layout, std::size_t active_slots, const EnergyParams& p);
/// Idle-column part of macro_cycle_energy_pj.
double idle_cycle_energy_pj(const MacroLayout& layout, std::size_t active_slots, const EnergyParams& p);
/// pJ per SOP with every slot of the layout active.
double energy_per_sop(const MacroLayout& layout, const EnergyParams& p);
/// pJ per SOP when only `active_slots` slots do useful work.
double energy_per_sop(const MacroLayout& layout, const EnergyParams& p, std::size_t active_slots);
/// Bit-serial row-wise stacking without standby: all 256 columns burn full energy.
double baseline_energy_per_sop(std::size_t res, std::size_t n_neurons, const EnergyParams& p);

struct ShapePoint {
  std::size_t n_rows;
  std::size_t n_cols;
  std::size_t parallelism;
  std::size_t active_slots;
  std::size_t cycles;
  double pj_per_sop;
  double idle_pj_per_sop;
};

struct ShapeSweep {
  std::size_t res = 0;
  std::size_t n_neurons = 0;
  std::vector<ShapePoint> points;
  double baseline_pj_per_sop = 0.0;
  double variation_ratio = 0.0;  // max / min over points
  double best_vs_baseline = 0.0;  // baseline / min
  double same_shape_vs_baseline = 0.0;  // baseline / bit-serial point, if present
};

/// Column counts tried by default: I x res/I shapes with I dividing res.
std::vector<std::size_t> divisor_shapes(std::size_t res);
ShapeSweep shape_sweep(std::size_t res, std::size_t n_neurons, const std::vector<std::size_t>& n_cols_list,
                       const EnergyParams& p);

struct LayerEnergy {
  double e_cim = 0.0;
  double e_compare = 0.0;
  double e_broadcast = 0.0;
  double e_buffer = 0.0;
  double e_dram = 0.0;
  double cycles = 0.0;
  double sops = 0.0;
  double res_product = 0.0;  // res_w * res_v of the layer
  double total() const { return e_cim + e_compare + e_broadcast + e_buffer + e_dram; }
  LayerEnergy& operator+=(const LayerEnergy& o);
};

struct EnergyReport {
  std::vector<LayerEnergy> layers;
  LayerEnergy total;
  double pj_per_sop = 0.0;
  double gsops = 0.0;
  double normalized_fj_per_sop = 0.0;  // pJ/SOP / (res_w res_v), SOP-weighted, in fJ
  double normalized_gsops = 0.0;
  EnergyParams params;
};

/// Per layer, SOPs in every timestep when every input spikes.
std::vector<std::uint64_t> dense_sops(const ModelSpec& model);

struct SystemOptions {
  std::size_t n_macros = 1;
  bool standby = true;                         // false: idle columns burn full energy
  std::optional<std::size_t> n_cols;           // override every layer's shape
};

/// Analytic estimate at input sparsity s: SOPs are (1 - s) of dense.
EnergyReport system_energy(const ModelSpec& model, const DataflowPlan& plan, double sparsity, const EnergyParams& p,
                           const SystemOptions& opt = {});
/// Same accounting driven by counted SOPs from a run.
EnergyReport system_energy(const ModelSpec& model, const DataflowPlan& plan, const RunStats& stats,
                           const EnergyParams& p, const SystemOptions& opt = {});

struct SystemConfig {
  Policy policy = Policy::HsOpt;
  std::size_t n_macros = 16;
  std::optional<ResolutionPolicy> fixed_resolutions;  // round every layer up into these sets
  std::optional<std::pair<std::size_t, std::size_t>> forced_resolutions;  // (res_w, res_v) for all layers
  std::optional<std::size_t> n_cols;
  bool standby = true;
  EnergyParams params;
};

/// Model with the config's resolutions applied (weights rescaled only in width, values kept).
ModelSpec apply_resolutions(const ModelSpec& model, const SystemConfig& cfg);
EnergyReport config_energy(const ModelSpec& model, const SystemConfig& cfg, double sparsity);

struct GainPoint {
  double sparsity;
  double e_flexspim_pj;
  double e_baseline_pj;
  double gain;
};
std::vector<GainPoint> efficiency_gain(const ModelSpec& model, const SystemConfig& flexspim, const SystemConfig& baseline,
                                       const std::vector<double>& sparsities);

/// Fixed-precision baseline in the style of a {4,8}-bit weight / 16-bit potential macro.
SystemConfig fixed_precision_baseline(const EnergyParams& p, std::size_t n_macros = 16);
/// Fixed 6-bit weight / 11-bit potential baseline.
SystemConfig fixed_6_11_baseline(const EnergyParams& p, std::size_t n_macros = 18);

}  // namespace flexspim
