#include "flexspim/runtime.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <sstream>

namespace flexspim {

StepStats& StepStats::operator+=(const StepStats& o) {
  cim_cycles += o.cim_cycles;
  compare_ops += o.compare_ops;
  sops += o.sops;
  broadcast_bits += o.broadcast_bits;
  stationary_load_bits += o.stationary_load_bits;
  streamed_bits += o.streamed_bits;
  reload_events += o.reload_events;
  saturations += o.saturations;
  input_spikes += o.input_spikes;
  output_spikes += o.output_spikes;
  active_col_cycles += o.active_col_cycles;
  standby_col_cycles += o.standby_col_cycles;
  return *this;
}

StepStats RunStats::layer_total(std::size_t layer) const {
  StepStats s;
  for (std::size_t t = 0; t < timesteps; ++t) s += at(layer, t);
  return s;
}

StepStats RunStats::total() const {
  StepStats s;
  for (const auto& c : cells) s += c;
  return s;
}

namespace {

std::uint64_t count_ones(const std::vector<std::uint8_t>& v) {
  return static_cast<std::uint64_t>(std::count(v.begin(), v.end(), std::uint8_t{1}));
}

bool sat_add(std::int64_t& v, std::int64_t w, std::size_t res) {
  std::int64_t s = v + w;  // |v|, |w| < 2^62, no int64 overflow
  std::int64_t c = saturate(s, res);
  v = c;
  return c != s;
}

bool fire_one(std::int64_t& v, const LayerSpec& l) {
  if (v < l.theta) return false;
  if (l.reset == ResetRule::ToZero) {
    v = 0;
  } else {
    sat_add(v, -l.theta, l.res_v);
  }
  return true;
}

void integrate_dense(const LayerSpec& l, const std::vector<std::uint8_t>& in, std::vector<std::int64_t>& v,
                     StepStats& st) {
  if (l.kind == LayerKind::Fc) {
    for (std::size_t co = 0; co < l.c_out; ++co)
      for (std::size_t i = 0; i < l.c_in; ++i)
        if (in[i]) {
          st.saturations += sat_add(v[co], l.weights[co * l.c_in + i], l.res_v);
          ++st.sops;
        }
    return;
  }
  auto p = static_cast<std::ptrdiff_t>(l.padding);
  for (std::size_t co = 0; co < l.c_out; ++co)
    for (std::size_t yo = 0; yo < l.h_out; ++yo)
      for (std::size_t xo = 0; xo < l.w_out; ++xo) {
        std::int64_t& vn = v[l.neuron_index(co, yo, xo)];
        for (std::size_t ci = 0; ci < l.c_in; ++ci)
          for (std::size_t ky = 0; ky < l.kernel; ++ky) {
            std::ptrdiff_t yi = static_cast<std::ptrdiff_t>(yo * l.stride + ky) - p;
            if (yi < 0 || yi >= static_cast<std::ptrdiff_t>(l.h_in)) continue;
            for (std::size_t kx = 0; kx < l.kernel; ++kx) {
              std::ptrdiff_t xi = static_cast<std::ptrdiff_t>(xo * l.stride + kx) - p;
              if (xi < 0 || xi >= static_cast<std::ptrdiff_t>(l.w_in)) continue;
              std::size_t idx = (ci * l.h_in + static_cast<std::size_t>(yi)) * l.w_in + static_cast<std::size_t>(xi);
              if (!in[idx]) continue;
              st.saturations += sat_add(vn, l.weights[l.weight_index(co, ci, ky, kx)], l.res_v);
              ++st.sops;
            }
          }
      }
}

void integrate_events(const LayerSpec& l, const std::vector<std::uint8_t>& in, std::vector<std::int64_t>& v,
                      StepStats& st) {
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (!in[i]) continue;
    for (const Synapse& s : fan_out(l, i)) {
      st.saturations += sat_add(v[s.neuron], l.weights[s.weight], l.res_v);
      ++st.sops;
    }
  }
}

RunResult prepare(const ModelSpec& model, const EventStream& events, std::vector<std::vector<std::uint8_t>>& frames) {
  model.validate();
  RunResult r;
  frames = events.frames(model, &r.dropped_events);
  if (r.dropped_events > 0)
    r.warnings.push_back(std::to_string(r.dropped_events) + " input events outside [0, " +
                         std::to_string(model.timesteps) + ") dropped");
  r.stats = RunStats(model.layers.size(), model.timesteps);
  r.spikes.assign(model.layers.size(), {});
  for (std::size_t l = 0; l < model.layers.size(); ++l) r.spikes[l].reserve(model.timesteps);
  return r;
}

void add_macro_delta(StepStats& st, const MacroCounters& before, const MacroCounters& after) {
  st.cim_cycles += after.cim_cycles - before.cim_cycles;
  st.compare_ops += after.compare_ops - before.compare_ops;
  st.broadcast_bits += after.broadcast_bits - before.broadcast_bits;
  st.saturations += after.saturations - before.saturations;
  st.active_col_cycles += after.active_col_cycles - before.active_col_cycles;
  st.standby_col_cycles += after.standby_col_cycles - before.standby_col_cycles;
}

class LayerExecutor {
 public:
  virtual ~LayerExecutor() = default;
  virtual std::vector<std::uint8_t> step(std::size_t t, const std::vector<std::uint8_t>& in, StepStats& st) = 0;
  virtual std::vector<std::int64_t> potentials() const = 0;
  const Macro& macro() const { return macro_; }

 protected:
  LayerExecutor(const LayerSpec& l, const RunOptions& opt)
      : l_(l), layout_(plan_layout(l.res_w, l.res_v, l.resolved_n_cols())), budget_(std::min(opt.row_budget, kMacroRows)) {
    macro_.configure(layout_);
    macro_.set_reset_rule(l.reset);
    macro_.set_fault(opt.fault);
  }

  const LayerSpec& l_;
  MacroLayout layout_;
  std::size_t budget_;
  Macro macro_;
};

// Potentials resident, weights broadcast through the emulation bits. Neuron
// n sits in slot n % P of band n / P; each band is rows_V rows.
class OutputStationary final : public LayerExecutor {
 public:
  OutputStationary(const LayerSpec& l, const RunOptions& opt, bool forced_tiled) : LayerExecutor(l, opt) {
    const std::size_t P = layout_.parallelism;
    rows_v_ = layout_.potential_shape.n_rows;
    bands_ = (l.neurons() + P - 1) / P;
    bands_per_tile_ = budget_ / rows_v_;
    if (bands_per_tile_ == 0) throw CapacityError("row budget smaller than one potential band");
    tiles_ = (bands_ + bands_per_tile_ - 1) / bands_per_tile_;
    resident_ = !forced_tiled && tiles_ == 1;
    bank_.assign(l.neurons(), 0);
  }

  std::vector<std::uint8_t> step(std::size_t t, const std::vector<std::uint8_t>& in, StepStats& st) override {
    const std::size_t P = layout_.parallelism;
    std::vector<std::vector<Synapse>> fan(in.size());
    for (std::size_t i = 0; i < in.size(); ++i)
      if (in[i]) fan[i] = fan_out(l_, i);

    std::vector<std::uint8_t> out(l_.neurons(), 0);
    for (std::size_t tile = 0; tile < tiles_; ++tile) {
      const std::size_t b0 = tile * bands_per_tile_;
      const std::size_t b1 = std::min(bands_, b0 + bands_per_tile_);
      const std::size_t n0 = b0 * P, n1 = std::min(l_.neurons(), b1 * P);
      if (!resident_ || t == 0) {
        for (std::size_t n = n0; n < n1; ++n) macro_.write_operand(n % P, (n / P - b0) * rows_v_, l_.res_v, bank_[n]);
        std::uint64_t bits = static_cast<std::uint64_t>(n1 - n0) * l_.res_v;
        if (resident_) {
          st.stationary_load_bits += bits;
        } else {
          st.streamed_bits += bits;
          st.reload_events += 1;
        }
      }
      std::vector<std::vector<std::size_t>> slots(b1 - b0);
      std::vector<std::vector<std::int64_t>> vals(b1 - b0);
      for (std::size_t i = 0; i < in.size(); ++i) {
        if (!in[i]) continue;
        for (auto& s : slots) s.clear();
        for (auto& v : vals) v.clear();
        for (const Synapse& s : fan[i]) {
          if (s.neuron < n0 || s.neuron >= n1) continue;
          slots[s.neuron / P - b0].push_back(s.neuron % P);
          vals[s.neuron / P - b0].push_back(l_.weights[s.weight]);
        }
        for (std::size_t b = 0; b < slots.size(); ++b) {
          if (slots[b].empty()) continue;
          macro_.accumulate(slots[b], b * rows_v_, BroadcastAddend{vals[b], l_.res_w});
          st.sops += slots[b].size();
        }
      }
      for (std::size_t b = b0; b < b1; ++b) {
        std::vector<std::size_t> s;
        for (std::size_t n = b * P; n < std::min(n1, (b + 1) * P); ++n) s.push_back(n % P);
        auto fired = macro_.fire_and_reset(s, (b - b0) * rows_v_, l_.theta);
        for (std::size_t k = 0; k < s.size(); ++k) out[b * P + s[k]] = fired[k];
      }
      if (!resident_) {
        for (std::size_t n = n0; n < n1; ++n) bank_[n] = macro_.read_operand(n % P, (n / P - b0) * rows_v_, l_.res_v);
        st.streamed_bits += static_cast<std::uint64_t>(n1 - n0) * l_.res_v;
      }
    }
    return out;
  }

  std::vector<std::int64_t> potentials() const override {
    if (!resident_) return bank_;
    const std::size_t P = layout_.parallelism;
    std::vector<std::int64_t> v(l_.neurons());
    for (std::size_t n = 0; n < v.size(); ++n) v[n] = macro_.read_operand(n % P, (n / P) * rows_v_, l_.res_v);
    return v;
  }

 private:
  std::size_t rows_v_ = 0, bands_ = 0, bands_per_tile_ = 0, tiles_ = 0;
  bool resident_ = false;
  std::vector<std::int64_t> bank_;
};

// Weights resident, potentials streamed through a shared working region at
// the top of the array. Output channel co sits in slot co % P of channel
// band co / P; a band holds the channel's weights in rows_W-row blocks.
class WeightStationary final : public LayerExecutor {
 public:
  WeightStationary(const LayerSpec& l, const RunOptions& opt, bool forced_tiled) : LayerExecutor(l, opt) {
    const std::size_t P = layout_.parallelism;
    rows_v_ = layout_.potential_shape.n_rows;
    rows_w_ = layout_.weight_shape.n_rows;
    macro_.set_reserved_rows(rows_v_);
    if (budget_ < rows_v_ + rows_w_) throw CapacityError("row budget cannot hold a working potential and one weight");
    const std::size_t avail = budget_ - rows_v_;
    const std::size_t K = l.weights_per_channel();
    bands_ = (l.c_out + P - 1) / P;
    if (K * rows_w_ <= avail) {
      std::size_t per = avail / (K * rows_w_);
      for (std::size_t b = 0; b < bands_; b += per) tiles_.push_back({b, std::min(bands_, b + per), 0, K});
    } else {
      std::size_t chunk = avail / rows_w_;
      for (std::size_t b = 0; b < bands_; ++b)
        for (std::size_t k = 0; k < K; k += chunk) tiles_.push_back({b, b + 1, k, std::min(K, k + chunk)});
    }
    chunked_ = tiles_.size() > 0 && tiles_[0].k1 - tiles_[0].k0 < K;
    resident_ = !forced_tiled && tiles_.size() == 1;
    bank_.assign(l.neurons(), 0);
  }

  std::vector<std::uint8_t> step(std::size_t t, const std::vector<std::uint8_t>& in, StepStats& st) override {
    const std::size_t P = layout_.parallelism;
    const std::size_t positions = l_.h_out * l_.w_out;
    if (!resident_) loaded_.reset();

    // Per input spike: (position, weight offset) -> output channels reached.
    std::vector<std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>>> hits;
    for (std::size_t i = 0; i < in.size(); ++i) {
      if (!in[i]) continue;
      auto& m = hits.emplace_back();
      for (const Synapse& s : fan_out(l_, i)) m[{s.position, s.offset}].push_back(s.channel);
    }

    auto run_hit = [&](std::size_t tile, std::size_t pos, std::size_t off, const std::vector<std::size_t>& chans,
                       std::size_t band) {
      const Tile& tl = tiles_[tile];
      std::vector<std::size_t> slots;
      for (std::size_t co : chans)
        if (co / P == band) slots.push_back(co % P);
      if (slots.empty()) return;
      for (std::size_t s : slots) macro_.write_operand(s, 0, l_.res_v, bank_[(band * P + s) * positions + pos]);
      const std::size_t row = weight_row(tl, band, off);
      macro_.accumulate(slots, 0, ResidentAddend{row});
      for (std::size_t s : slots) bank_[(band * P + s) * positions + pos] = macro_.read_operand(s, 0, l_.res_v);
      st.streamed_bits += 2 * static_cast<std::uint64_t>(slots.size()) * l_.res_v;
      st.sops += slots.size();
    };

    if (!chunked_) {
      for (std::size_t ti = 0; ti < tiles_.size(); ++ti) {
        ensure_loaded(ti, st);
        for (const auto& m : hits)
          for (const auto& [key, chans] : m)
            for (std::size_t b = tiles_[ti].b0; b < tiles_[ti].b1; ++b) run_hit(ti, key.first, key.second, chans, b);
      }
    } else {
      // One band per tile; swap chunks as spikes demand them.
      const std::size_t chunk = tiles_[0].k1 - tiles_[0].k0;
      const std::size_t per_band = (l_.weights_per_channel() + chunk - 1) / chunk;
      for (const auto& m : hits)
        for (const auto& [key, chans] : m)
          for (std::size_t b = 0; b < bands_; ++b) {
            std::size_t ti = b * per_band + key.second / chunk;
            bool any = std::any_of(chans.begin(), chans.end(), [&](std::size_t co) { return co / P == b; });
            if (!any) continue;
            ensure_loaded(ti, st);
            run_hit(ti, key.first, key.second, chans, b);
          }
    }
    (void)t;

    std::vector<std::uint8_t> out(l_.neurons(), 0);
    for (std::size_t b = 0; b < bands_; ++b) {
      std::vector<std::size_t> slots;
      for (std::size_t co = b * P; co < std::min(l_.c_out, (b + 1) * P); ++co) slots.push_back(co % P);
      for (std::size_t pos = 0; pos < positions; ++pos) {
        for (std::size_t s : slots) macro_.write_operand(s, 0, l_.res_v, bank_[(b * P + s) * positions + pos]);
        auto fired = macro_.fire_and_reset(slots, 0, l_.theta);
        for (std::size_t k = 0; k < slots.size(); ++k) {
          std::size_t n = (b * P + slots[k]) * positions + pos;
          bank_[n] = macro_.read_operand(slots[k], 0, l_.res_v);
          out[n] = fired[k];
        }
        st.streamed_bits += 2 * static_cast<std::uint64_t>(slots.size()) * l_.res_v;
      }
    }
    return out;
  }

  std::vector<std::int64_t> potentials() const override { return bank_; }

 private:
  struct Tile {
    std::size_t b0, b1, k0, k1;
  };

  std::size_t weight_row(const Tile& tl, std::size_t band, std::size_t off) const {
    return rows_v_ + ((band - tl.b0) * (tl.k1 - tl.k0) + (off - tl.k0)) * rows_w_;
  }

  void ensure_loaded(std::size_t ti, StepStats& st) {
    if (loaded_ && *loaded_ == ti) return;
    if (resident_ && ever_loaded_) {
      loaded_ = ti;
      return;
    }
    const Tile& tl = tiles_[ti];
    const std::size_t P = layout_.parallelism;
    std::uint64_t bits = 0;
    for (std::size_t b = tl.b0; b < tl.b1; ++b)
      for (std::size_t co = b * P; co < std::min(l_.c_out, (b + 1) * P); ++co)
        for (std::size_t k = tl.k0; k < tl.k1; ++k) {
          macro_.write_operand(co % P, weight_row(tl, b, k), l_.res_w,
                               l_.weights[co * l_.weights_per_channel() + k]);
          bits += l_.res_w;
        }
    if (resident_) {
      st.stationary_load_bits += bits;
    } else {
      st.streamed_bits += bits;
      st.reload_events += 1;
    }
    loaded_ = ti;
    ever_loaded_ = true;
  }

  std::size_t rows_v_ = 0, rows_w_ = 0, bands_ = 0;
  std::vector<Tile> tiles_;
  bool chunked_ = false;
  bool resident_ = false;
  bool ever_loaded_ = false;
  std::optional<std::size_t> loaded_;
  std::vector<std::int64_t> bank_;
};

}  // namespace

RunResult reference_run(const ModelSpec& model, const EventStream& events, bool dense) {
  std::vector<std::vector<std::uint8_t>> frames;
  RunResult r = prepare(model, events, frames);
  std::vector<std::vector<std::int64_t>> v;
  for (const auto& l : model.layers) v.emplace_back(l.neurons(), 0);
  for (std::size_t t = 0; t < model.timesteps; ++t) {
    const std::vector<std::uint8_t>* in = &frames[t];
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
      const LayerSpec& l = model.layers[li];
      StepStats& st = r.stats.at(li, t);
      st.input_spikes = count_ones(*in);
      if (dense) {
        integrate_dense(l, *in, v[li], st);
      } else {
        integrate_events(l, *in, v[li], st);
      }
      std::vector<std::uint8_t> out(l.neurons(), 0);
      for (std::size_t n = 0; n < out.size(); ++n) {
        std::int64_t before = v[li][n];
        out[n] = fire_one(v[li][n], l) ? 1 : 0;
        if (out[n] && l.reset == ResetRule::SubtractThreshold && v[li][n] != before - l.theta) ++st.saturations;
      }
      st.output_spikes = count_ones(out);
      r.spikes[li].push_back(std::move(out));
      in = &r.spikes[li].back();
    }
  }
  r.final_potentials = std::move(v);
  return r;
}

RunResult run_on_macros(const ModelSpec& model, const EventStream& events, const DataflowPlan& plan,
                        const RunOptions& opt) {
  std::vector<std::vector<std::uint8_t>> frames;
  RunResult r = prepare(model, events, frames);
  if (plan.layers.size() != model.layers.size())
    throw ContractViolation("plan covers " + std::to_string(plan.layers.size()) + " layers, model has " +
                            std::to_string(model.layers.size()));
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    Footprint f = footprint(model.layers[i]);
    if (i < plan.footprints.size() && (plan.footprints[i].bits_w != f.bits_w || plan.footprints[i].bits_v != f.bits_v))
      throw ContractViolation("plan footprint of layer " + std::to_string(i) + " does not match the model");
  }
  std::vector<std::unique_ptr<LayerExecutor>> exec;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const LayerAssignment& a = plan.layers[i];
    if (a.stationary == OperandKind::Weights) {
      exec.push_back(std::make_unique<WeightStationary>(model.layers[i], opt, a.tiled));
    } else {
      exec.push_back(std::make_unique<OutputStationary>(model.layers[i], opt, a.tiled));
    }
  }
  for (std::size_t t = 0; t < model.timesteps; ++t) {
    const std::vector<std::uint8_t>* in = &frames[t];
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
      StepStats& st = r.stats.at(li, t);
      st.input_spikes = count_ones(*in);
      MacroCounters before = exec[li]->macro().counters();
      auto out = exec[li]->step(t, *in, st);
      add_macro_delta(st, before, exec[li]->macro().counters());
      st.output_spikes = count_ones(out);
      r.spikes[li].push_back(std::move(out));
      in = &r.spikes[li].back();
    }
  }
  for (const auto& e : exec) r.final_potentials.push_back(e->potentials());
  if (opt.dump_grids)
    for (const auto& e : exec) r.grid_dumps.push_back(e->macro().grid().hex_dump());
  return r;
}

std::vector<SpikeRecord> spike_records(const ModelSpec& model, const RunResult& result) {
  std::vector<SpikeRecord> out;
  for (std::size_t t = 0; t < model.timesteps; ++t)
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
      const LayerSpec& l = model.layers[li];
      const auto& f = result.spikes[li][t];
      for (std::size_t n = 0; n < f.size(); ++n) {
        if (!f[n]) continue;
        std::size_t plane = l.h_out * l.w_out;
        out.push_back({t, li, n / plane, n % l.w_out, (n % plane) / l.w_out});
      }
    }
  return out;
}

std::string compare_runs(const RunResult& a, const RunResult& b) {
  std::ostringstream os;
  if (a.spikes.size() != b.spikes.size()) return "layer count differs";
  for (std::size_t l = 0; l < a.spikes.size(); ++l) {
    if (a.spikes[l].size() != b.spikes[l].size()) return "timestep count differs";
    for (std::size_t t = 0; t < a.spikes[l].size(); ++t)
      for (std::size_t n = 0; n < a.spikes[l][t].size(); ++n)
        if (a.spikes[l][t][n] != b.spikes[l][t][n]) {
          os << "spike mismatch at layer " << l << " t " << t << " neuron " << n;
          return os.str();
        }
    for (std::size_t n = 0; n < a.final_potentials[l].size(); ++n)
      if (a.final_potentials[l][n] != b.final_potentials[l][n]) {
        os << "potential mismatch at layer " << l << " neuron " << n << ": " << a.final_potentials[l][n] << " vs "
           << b.final_potentials[l][n];
        return os.str();
      }
  }
  return {};
}

}  // namespace flexspim
