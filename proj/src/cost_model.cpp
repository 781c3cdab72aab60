#include "flexspim/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace flexspim {

double EnergyParams::carry_overhead(std::size_t n_cols) const {
  if (n_cols <= 1) return 0.0;
  return carry_overhead_max * static_cast<double>(n_cols - 1) / static_cast<double>(kMacroCols - 1);
}

void EnergyParams::validate() const {
  auto nonneg = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be a finite value >= 0");
  };
  nonneg(e_col_active_pj, "e_col_active_pj");
  nonneg(standby_factor, "standby_factor");
  nonneg(carry_overhead_max, "carry_overhead_max");
  nonneg(e_broadcast_bit_pj, "e_broadcast_bit_pj");
  nonneg(e_buf_bit_pj, "e_buf_bit_pj");
  nonneg(e_dram_bit_pj, "e_dram_bit_pj");
  if (!(f_clk_mhz > 0.0)) throw ConfigError("f_clk_mhz must be positive");
  if (standby_factor > 1.0) throw ConfigError("standby_factor must not exceed 1");
  if (carry_overhead_max > 0.05) throw ConfigError("carry_overhead_max is capped at 0.05");
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

EnergyParams parse_calibration(const std::string& text) {
  EnergyParams p;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    auto where = "calibration line " + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(val, &used);
      if (used != val.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ConfigError(where + "bad number '" + val + "'");
    }
    if (key == "e_col_active_pj") p.e_col_active_pj = v;
    else if (key == "standby_factor") p.standby_factor = v;
    else if (key == "carry_overhead_max") p.carry_overhead_max = v;
    else if (key == "e_broadcast_bit_pj") p.e_broadcast_bit_pj = v;
    else if (key == "e_buf_bit_pj") p.e_buf_bit_pj = v;
    else if (key == "e_dram_bit_pj") p.e_dram_bit_pj = v;
    else if (key == "f_clk_mhz") p.f_clk_mhz = v;
    else if (key == "buffer_bits") {
      if (v < 0 || v != std::floor(v)) throw ConfigError(where + "buffer_bits must be a non-negative integer");
      p.buffer_bits = static_cast<std::uint64_t>(v);
    } else {
      throw ConfigError(where + "unknown key '" + key + "'");
    }
  }
  try {
    p.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("calibration: ") + e.what());
  }
  return p;
}

std::string calibration_text(const EnergyParams& p) {
  std::ostringstream os;
  os << "e_col_active_pj = " << fmt(p.e_col_active_pj) << "\n"
     << "standby_factor = " << fmt(p.standby_factor) << "\n"
     << "carry_overhead_max = " << fmt(p.carry_overhead_max) << "\n"
     << "e_broadcast_bit_pj = " << fmt(p.e_broadcast_bit_pj) << "\n"
     << "e_buf_bit_pj = " << fmt(p.e_buf_bit_pj) << "\n"
     << "e_dram_bit_pj = " << fmt(p.e_dram_bit_pj) << "\n"
     << "f_clk_mhz = " << fmt(p.f_clk_mhz) << "\n"
     << "buffer_bits = " << p.buffer_bits << "\n";
  return os.str();
}

std::string calibration_hash(const EnergyParams& p) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : calibration_text(p)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::size_t cycles_per_sop(const MacroLayout& layout) { return layout.cycles; }

Throughput peak_throughput(const MacroLayout& layout, double f_clk_mhz) {
  Throughput t;
  t.gsops = f_clk_mhz * 1e-3 * static_cast<double>(layout.parallelism) / static_cast<double>(cycles_per_sop(layout));
  t.normalized_gsops = t.gsops * static_cast<double>(layout.res_w * layout.res_v);
  return t;
}

double idle_cycle_energy_pj(const MacroLayout& layout, std::size_t active_slots, const EnergyParams& p) {
  std::size_t active_cols = std::min(active_slots, layout.parallelism) * layout.n_cols;
  return static_cast<double>(layout.macro_cols - active_cols) * p.e_col_active_pj * p.standby_factor;
}

double macro_cycle_energy_pj(const MacroLayout& layout, std::size_t active_slots, const EnergyParams& p) {
  std::size_t active_cols = std::min(active_slots, layout.parallelism) * layout.n_cols;
  return static_cast<double>(active_cols) * p.e_col_active_pj * (1.0 + p.carry_overhead(layout.n_cols)) +
         idle_cycle_energy_pj(layout, active_slots, p);
}

double energy_per_sop(const MacroLayout& layout, const EnergyParams& p, std::size_t active_slots) {
  std::size_t a = std::max<std::size_t>(1, std::min(active_slots, layout.parallelism));
  return macro_cycle_energy_pj(layout, a, p) * static_cast<double>(cycles_per_sop(layout)) / static_cast<double>(a);
}

double energy_per_sop(const MacroLayout& layout, const EnergyParams& p) {
  return energy_per_sop(layout, p, layout.parallelism);
}

double baseline_energy_per_sop(std::size_t res, std::size_t n_neurons, const EnergyParams& p) {
  std::size_t a = std::max<std::size_t>(1, std::min<std::size_t>(n_neurons, kMacroCols));
  return static_cast<double>(kMacroCols) * p.e_col_active_pj * static_cast<double>(res) / static_cast<double>(a);
}

std::vector<std::size_t> divisor_shapes(std::size_t res) {
  std::vector<std::size_t> out;
  for (std::size_t c = res; c >= 1; --c)
    if (res % c == 0 && c <= kMacroCols) out.push_back(c);
  return out;
}

ShapeSweep shape_sweep(std::size_t res, std::size_t n_neurons, const std::vector<std::size_t>& n_cols_list,
                       const EnergyParams& p) {
  p.validate();
  ShapeSweep s;
  s.res = res;
  s.n_neurons = n_neurons;
  double lo = 0.0, hi = 0.0;
  for (std::size_t nc : n_cols_list) {
    MacroLayout l = plan_layout(res, res, nc);
    ShapePoint pt;
    pt.n_rows = l.potential_shape.n_rows;
    pt.n_cols = nc;
    pt.parallelism = l.parallelism;
    pt.active_slots = std::max<std::size_t>(1, std::min(n_neurons, l.parallelism));
    pt.cycles = cycles_per_sop(l);
    pt.pj_per_sop = energy_per_sop(l, p, pt.active_slots);
    pt.idle_pj_per_sop = idle_cycle_energy_pj(l, pt.active_slots, p) * static_cast<double>(pt.cycles) /
                         static_cast<double>(pt.active_slots);
    if (s.points.empty() || pt.pj_per_sop < lo) lo = pt.pj_per_sop;
    if (s.points.empty() || pt.pj_per_sop > hi) hi = pt.pj_per_sop;
    s.points.push_back(pt);
  }
  s.baseline_pj_per_sop = baseline_energy_per_sop(res, n_neurons, p);
  if (!s.points.empty()) {
    s.variation_ratio = hi / lo;
    s.best_vs_baseline = s.baseline_pj_per_sop / lo;
    for (const auto& pt : s.points)
      if (pt.n_cols == 1) s.same_shape_vs_baseline = s.baseline_pj_per_sop / pt.pj_per_sop;
  }
  return s;
}

LayerEnergy& LayerEnergy::operator+=(const LayerEnergy& o) {
  e_cim += o.e_cim;
  e_compare += o.e_compare;
  e_broadcast += o.e_broadcast;
  e_buffer += o.e_buffer;
  e_dram += o.e_dram;
  cycles += o.cycles;
  sops += o.sops;
  return *this;
}

std::vector<std::uint64_t> dense_sops(const ModelSpec& model) {
  std::vector<std::uint64_t> out;
  for (const auto& l : model.layers) {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < l.inputs(); ++i) s += fan_out(l, i).size();
    out.push_back(s);
  }
  return out;
}

namespace {

EnergyReport account(const ModelSpec& model, const DataflowPlan& plan, const std::vector<double>& sops,
                     const EnergyParams& p, const SystemOptions& opt) {
  p.validate();
  if (plan.layers.size() != model.layers.size()) throw ContractViolation("plan does not cover the model");
  EnergyParams eff = p;
  if (!opt.standby) eff.standby_factor = 1.0;
  const double T = static_cast<double>(model.timesteps);
  const std::vector<std::uint64_t> dense = dense_sops(model);

  EnergyReport r;
  r.params = p;
  std::uint64_t buffer_left = p.buffer_bits;
  double weighted_rp = 0.0, weighted_norm = 0.0;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const LayerSpec& l = model.layers[i];
    const LayerAssignment& a = plan.layers[i];
    const Footprint f = footprint(l);
    const MacroLayout lay = plan_layout(l.res_w, l.res_v, opt.n_cols ? *opt.n_cols : l.resolved_n_cols());
    const double S = sops[i];
    const double rw = static_cast<double>(l.res_w), rv = static_cast<double>(l.res_v);
    const double N = static_cast<double>(l.neurons());
    const bool ws = a.stationary == OperandKind::Weights;

    // Slots that share one accumulate: channels of a band (WS) or the
    // neurons one spike reaches (OS).
    std::size_t width = ws ? l.c_out
                           : static_cast<std::size_t>(std::max(
                                 1.0, std::round(static_cast<double>(dense[i]) / static_cast<double>(l.inputs()))));
    std::size_t slots = std::max<std::size_t>(1, std::min(width, lay.parallelism));
    const double cyc = static_cast<double>(cycles_per_sop(lay));

    LayerEnergy e;
    e.sops = S;
    e.res_product = rw * rv;
    const double accumulates = S / static_cast<double>(slots);
    e.e_cim = accumulates * cyc * macro_cycle_energy_pj(lay, slots, eff);
    // One macro cycle per neuron per timestep for the threshold compare, charged per slot.
    e.e_compare = N * T * macro_cycle_energy_pj(lay, lay.parallelism, eff) / static_cast<double>(lay.parallelism);
    e.cycles = accumulates * cyc + std::ceil(N / static_cast<double>(lay.parallelism)) * T;

    // Streamed operand per use.
    double in_bits = 0.0, out_bits = 0.0;
    if (ws) {
      in_bits = S * rv + N * T * rv;
      out_bits = in_bits;
    } else {
      in_bits = S * rw;
    }
    // Non-resident stationary operand is reloaded every timestep.
    double reload_bits = 0.0;
    if (a.tiled) {
      reload_bits = static_cast<double>(ws ? f.bits_w : f.bits_v) * T;
      in_bits += reload_bits;
      if (!ws) out_bits += reload_bits;
    } else {
      // One-time fill of the stationary operand.
      double fill = static_cast<double>(ws ? f.bits_w : f.bits_v);
      in_bits += fill;
      if (ws) e.e_dram += fill * p.e_dram_bit_pj;
    }
    e.e_broadcast = in_bits * p.e_broadcast_bit_pj;
    e.e_buffer = (in_bits + out_bits) * p.e_buf_bit_pj;

    // Off-macro operands live in the global buffer while it has room,
    // otherwise they come from DRAM every timestep.
    std::uint64_t off_bits = a.tiled ? f.total() : (ws ? f.bits_v : f.bits_w);
    if (off_bits <= buffer_left) {
      buffer_left -= off_bits;
      if (!ws || a.tiled) e.e_dram += static_cast<double>(f.bits_w) * p.e_dram_bit_pj;  // initial weight fill
    } else {
      double per_t = a.tiled ? static_cast<double>(f.bits_w) + 2.0 * static_cast<double>(f.bits_v)
                             : (ws ? 2.0 * static_cast<double>(f.bits_v) : static_cast<double>(f.bits_w));
      e.e_dram += per_t * T * p.e_dram_bit_pj;
    }

    if (S > 0) weighted_norm += e.total() / e.res_product;
    weighted_rp += S * e.res_product;
    r.layers.push_back(e);
    r.total += e;
  }
  const double S = r.total.sops;
  r.pj_per_sop = S > 0 ? r.total.total() / S : 0.0;
  r.gsops = r.total.cycles > 0 ? S * p.f_clk_mhz / (r.total.cycles * 1e3) : 0.0;
  r.normalized_fj_per_sop = S > 0 ? 1e3 * weighted_norm / S : 0.0;
  r.normalized_gsops = S > 0 ? r.gsops * weighted_rp / S : 0.0;
  r.total.res_product = S > 0 ? weighted_rp / S : 0.0;
  return r;
}

}  // namespace

EnergyReport system_energy(const ModelSpec& model, const DataflowPlan& plan, double sparsity, const EnergyParams& p,
                           const SystemOptions& opt) {
  if (!(sparsity >= 0.0 && sparsity <= 1.0)) throw ConfigError("sparsity must be in [0, 1]");
  std::vector<double> sops;
  for (std::uint64_t d : dense_sops(model))
    sops.push_back(static_cast<double>(d) * (1.0 - sparsity) * static_cast<double>(model.timesteps));
  return account(model, plan, sops, p, opt);
}

EnergyReport system_energy(const ModelSpec& model, const DataflowPlan& plan, const RunStats& stats,
                           const EnergyParams& p, const SystemOptions& opt) {
  if (stats.layers != model.layers.size()) throw ContractViolation("run stats do not match the model");
  std::vector<double> sops;
  for (std::size_t l = 0; l < stats.layers; ++l) sops.push_back(static_cast<double>(stats.layer_total(l).sops));
  return account(model, plan, sops, p, opt);
}

ModelSpec apply_resolutions(const ModelSpec& model, const SystemConfig& cfg) {
  ModelSpec m = model;
  for (auto& l : m.layers) {
    if (cfg.forced_resolutions) {
      l.res_w = cfg.forced_resolutions->first;
      l.res_v = cfg.forced_resolutions->second;
    }
    if (cfg.fixed_resolutions) {
      l.res_w = round_up_resolution(l.res_w, cfg.fixed_resolutions->weights);
      l.res_v = round_up_resolution(l.res_v, cfg.fixed_resolutions->potentials);
    }
    if (cfg.n_cols) l.n_cols = cfg.n_cols;
  }
  return m;
}

EnergyReport config_energy(const ModelSpec& model, const SystemConfig& cfg, double sparsity) {
  ModelSpec m = apply_resolutions(model, cfg);
  MapperConfig mc;
  mc.n_macros = cfg.n_macros;
  DataflowPlan pl = plan(m, cfg.policy, mc);
  SystemOptions so;
  so.n_macros = cfg.n_macros;
  so.standby = cfg.standby;
  so.n_cols = cfg.n_cols;
  return system_energy(m, pl, sparsity, cfg.params, so);
}

std::vector<GainPoint> efficiency_gain(const ModelSpec& model, const SystemConfig& flexspim, const SystemConfig& baseline,
                                       const std::vector<double>& sparsities) {
  std::vector<GainPoint> out;
  for (double s : sparsities) {
    GainPoint g;
    g.sparsity = s;
    g.e_flexspim_pj = config_energy(model, flexspim, s).total.total();
    g.e_baseline_pj = config_energy(model, baseline, s).total.total();
    g.gain = g.e_baseline_pj > 0 ? 1.0 - g.e_flexspim_pj / g.e_baseline_pj : 0.0;
    out.push_back(g);
  }
  return out;
}

SystemConfig fixed_precision_baseline(const EnergyParams& p, std::size_t n_macros) {
  SystemConfig c;
  c.policy = Policy::WsOnly;
  c.n_macros = n_macros;
  c.fixed_resolutions = ResolutionPolicy{{4, 8}, {16}};
  c.n_cols = 1;
  c.standby = false;
  c.params = p;
  return c;
}

SystemConfig fixed_6_11_baseline(const EnergyParams& p, std::size_t n_macros) {
  SystemConfig c;
  c.policy = Policy::WsOnly;
  c.n_macros = n_macros;
  c.forced_resolutions = std::make_pair<std::size_t, std::size_t>(6, 11);
  c.n_cols = 1;
  c.standby = false;
  c.params = p;
  return c;
}

}  // namespace flexspim
