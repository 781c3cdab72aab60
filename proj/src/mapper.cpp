#include "flexspim/mapper.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

namespace flexspim {

namespace {

std::uint64_t bits_of(const Footprint& f, OperandKind k) { return k == OperandKind::Weights ? f.bits_w : f.bits_v; }
OperandKind other(OperandKind k) { return k == OperandKind::Weights ? OperandKind::Potentials : OperandKind::Weights; }
OperandKind min_kind(const Footprint& f) { return f.bits_v < f.bits_w ? OperandKind::Potentials : OperandKind::Weights; }
OperandKind max_kind(const Footprint& f) { return f.bits_v > f.bits_w ? OperandKind::Potentials : OperandKind::Weights; }

struct Choices {
  std::vector<OperandKind> kinds;
  std::vector<std::optional<std::size_t>> macros;
};

// Places each layer's fixed kind first-fit, largest operands first.
Choices first_fit_decreasing(const std::vector<Footprint>& layers, const MapperConfig& cfg,
                             OperandKind (*pick)(const Footprint&)) {
  Choices c{std::vector<OperandKind>(layers.size()), std::vector<std::optional<std::size_t>>(layers.size())};
  std::vector<std::size_t> order(layers.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < layers.size(); ++i) c.kinds[i] = pick(layers[i]);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return bits_of(layers[a], c.kinds[a]) > bits_of(layers[b], c.kinds[b]);
  });
  std::vector<std::uint64_t> load(cfg.n_macros, 0);
  for (std::size_t i : order) {
    std::uint64_t b = bits_of(layers[i], c.kinds[i]);
    for (std::size_t m = 0; m < cfg.n_macros; ++m) {
      if (load[m] + b <= cfg.usable_bits()) {
        load[m] += b;
        c.macros[i] = m;
        break;
      }
    }
  }
  return c;
}

// Largest layers first; each tries its bigger operand, then the smaller one.
Choices greedy_heuristic(const std::vector<Footprint>& layers, const MapperConfig& cfg) {
  Choices c{std::vector<OperandKind>(layers.size()), std::vector<std::optional<std::size_t>>(layers.size())};
  std::vector<std::size_t> order(layers.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::max(layers[a].bits_w, layers[a].bits_v) > std::max(layers[b].bits_w, layers[b].bits_v);
  });
  std::vector<std::uint64_t> load(cfg.n_macros, 0);
  for (std::size_t i : order) {
    OperandKind big = max_kind(layers[i]);
    c.kinds[i] = big;
    bool placed = false;
    for (OperandKind k : {big, other(big)}) {
      std::uint64_t b = bits_of(layers[i], k);
      for (std::size_t m = 0; m < cfg.n_macros && !placed; ++m) {
        if (load[m] + b <= cfg.usable_bits()) {
          load[m] += b;
          c.kinds[i] = k;
          c.macros[i] = m;
          placed = true;
        }
      }
      if (placed) break;
    }
  }
  return c;
}

class BranchAndBound {
 public:
  BranchAndBound(const std::vector<Footprint>& layers, const MapperConfig& cfg, const Choices& seed,
                 PlanObjective seed_obj)
      : layers_(layers), cfg_(cfg), best_(seed), best_obj_(seed_obj), cur_(seed), load_(cfg.n_macros, 0) {
    order_.resize(layers.size());
    std::iota(order_.begin(), order_.end(), 0);
    std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
      return std::max(layers[a].bits_w, layers[a].bits_v) > std::max(layers[b].bits_w, layers[b].bits_v);
    });
    suffix_min_.assign(layers.size() + 1, 0);
    for (std::size_t i = layers.size(); i-- > 0;) {
      const Footprint& f = layers[order_[i]];
      suffix_min_[i] = suffix_min_[i + 1] + std::min(f.bits_w, f.bits_v);
    }
  }

  Choices run() {
    search(0, 0, 0);
    return best_;
  }

 private:
  std::size_t used() const {
    return static_cast<std::size_t>(std::count_if(load_.begin(), load_.end(), [](std::uint64_t v) { return v > 0; }));
  }

  void search(std::size_t depth, std::uint64_t streamed, std::size_t tiled) {
    PlanObjective lb{streamed + suffix_min_[depth], tiled, used()};
    if (!(lb < best_obj_)) return;
    if (depth == layers_.size()) {
      best_obj_ = lb;
      best_ = cur_;
      return;
    }
    std::size_t i = order_[depth];
    const Footprint& f = layers_[i];
    OperandKind big = max_kind(f);
    for (OperandKind k : {big, other(big)}) {
      if (k != big && f.bits_w == f.bits_v) break;
      std::uint64_t b = bits_of(f, k);
      bool tried_empty = false;
      for (std::size_t m = 0; m < cfg_.n_macros; ++m) {
        if (load_[m] == 0) {
          // All empty macros are interchangeable.
          if (tried_empty) continue;
          tried_empty = true;
        }
        if (load_[m] + b > cfg_.usable_bits()) continue;
        load_[m] += b;
        cur_.kinds[i] = k;
        cur_.macros[i] = m;
        search(depth + 1, streamed + bits_of(f, other(k)), tiled);
        load_[m] -= b;
      }
    }
    cur_.kinds[i] = big;
    cur_.macros[i].reset();
    search(depth + 1, streamed + f.total(), tiled + 1);
  }

  const std::vector<Footprint>& layers_;
  const MapperConfig& cfg_;
  Choices best_;
  PlanObjective best_obj_;
  Choices cur_;
  std::vector<std::uint64_t> load_;
  std::vector<std::size_t> order_;
  std::vector<std::uint64_t> suffix_min_;
};

DataflowPlan from_choices(const std::vector<Footprint>& layers, Policy policy, const MapperConfig& cfg,
                          const Choices& c) {
  return make_plan(layers, policy, cfg, c.kinds, c.macros);
}

DataflowPlan greedy_plan(const std::vector<Footprint>& layers, const MapperConfig& cfg) {
  // The heuristic alone can lose to a fixed-kind packing, so keep the best
  // of all of them; HS can always replicate WS.
  std::vector<DataflowPlan> cands;
  cands.push_back(from_choices(layers, Policy::HsGreedy, cfg, greedy_heuristic(layers, cfg)));
  cands.push_back(from_choices(layers, Policy::HsGreedy, cfg,
                               first_fit_decreasing(layers, cfg, [](const Footprint&) { return OperandKind::Weights; })));
  cands.push_back(from_choices(layers, Policy::HsGreedy, cfg, first_fit_decreasing(layers, cfg, min_kind)));
  cands.push_back(from_choices(layers, Policy::HsGreedy, cfg, first_fit_decreasing(layers, cfg, max_kind)));
  std::size_t best = 0;
  for (std::size_t i = 1; i < cands.size(); ++i)
    if (cands[i].objective() < cands[best].objective()) best = i;
  return cands[best];
}

}  // namespace

const char* policy_name(Policy p) {
  switch (p) {
    case Policy::WsOnly: return "WS_ONLY";
    case Policy::HsMin: return "HS_MIN";
    case Policy::HsMax: return "HS_MAX";
    case Policy::HsGreedy: return "HS_GREEDY";
    case Policy::HsOpt: return "HS_OPT";
  }
  return "?";
}

Policy parse_policy(const std::string& name) {
  std::string n = name;
  std::transform(n.begin(), n.end(), n.begin(), [](unsigned char ch) { return ch == '-' ? '_' : std::toupper(ch); });
  for (Policy p : all_policies())
    if (n == policy_name(p)) return p;
  throw ConfigError("unknown policy '" + name + "'");
}

std::vector<Policy> all_policies() { return {Policy::WsOnly, Policy::HsMin, Policy::HsMax, Policy::HsGreedy, Policy::HsOpt}; }

PlanObjective DataflowPlan::objective() const {
  PlanObjective o;
  for (const auto& a : layers) {
    o.streamed_bits += a.streamed_bits;
    o.tiled_layers += a.tiled ? 1 : 0;
  }
  o.macros_used = static_cast<std::size_t>(std::count_if(macro_bits.begin(), macro_bits.end(), [](std::uint64_t b) { return b > 0; }));
  return o;
}

std::uint64_t DataflowPlan::stationary_bits() const {
  std::uint64_t s = 0;
  for (const auto& a : layers) s += a.stationary_bits;
  return s;
}

void DataflowPlan::check() const {
  if (layers.size() != footprints.size()) throw ContractViolation("plan does not assign every layer");
  std::vector<std::uint64_t> load(config.n_macros, 0);
  for (const auto& a : layers) {
    if (a.tiled) {
      if (a.macro || a.stationary_bits != 0) throw ContractViolation("tiled layer holds stationary bits");
      continue;
    }
    if (!a.macro || *a.macro >= config.n_macros) throw ContractViolation("layer without a valid macro");
    load[*a.macro] += a.stationary_bits;
  }
  for (std::size_t m = 0; m < load.size(); ++m)
    if (load[m] > config.usable_bits()) throw ContractViolation("macro " + std::to_string(m) + " over capacity");
}

Stationarity stationarity_metric(const DataflowPlan& plan) {
  Stationarity s;
  for (const auto& f : plan.footprints) s.total_bits += f.total();
  s.stationary_bits = plan.stationary_bits();
  s.fraction = s.total_bits == 0 ? 0.0 : static_cast<double>(s.stationary_bits) / static_cast<double>(s.total_bits);
  return s;
}

DataflowPlan make_plan(const std::vector<Footprint>& layers, Policy policy, const MapperConfig& cfg,
                       const std::vector<OperandKind>& kinds, const std::vector<std::optional<std::size_t>>& macros) {
  if (cfg.n_macros == 0) throw ConfigError("n_macros must be at least 1");
  if (kinds.size() != layers.size() || macros.size() != layers.size())
    throw ContractViolation("one choice per layer required");
  DataflowPlan p;
  p.policy = policy;
  p.config = cfg;
  p.footprints = layers;
  p.macro_bits.assign(cfg.n_macros, 0);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    LayerAssignment a;
    a.stationary = kinds[i];
    a.macro = macros[i];
    if (macros[i]) {
      a.stationary_bits = bits_of(layers[i], kinds[i]);
      a.streamed_bits = bits_of(layers[i], other(kinds[i]));
      if (*macros[i] >= cfg.n_macros) throw ContractViolation("macro id out of range");
      p.macro_bits[*macros[i]] += a.stationary_bits;
    } else {
      a.tiled = true;
      a.streamed_bits = layers[i].total();
      std::uint64_t cap = std::max<std::uint64_t>(cfg.usable_bits(), 1);
      a.tiles = std::max<std::uint64_t>(1, (bits_of(layers[i], kinds[i]) + cap - 1) / cap);
    }
    p.layers.push_back(a);
  }
  p.check();
  return p;
}

DataflowPlan plan_optimal(const std::vector<Footprint>& layers, const MapperConfig& cfg) {
  if (cfg.n_macros == 0) throw ConfigError("n_macros must be at least 1");
  DataflowPlan g = greedy_plan(layers, cfg);
  if (layers.size() > kExactSearchMaxLayers) {
    g.policy = Policy::HsOpt;
    g.warnings.push_back("exact search limited to " + std::to_string(kExactSearchMaxLayers) +
                         " layers; using HS_GREEDY result");
    return g;
  }
  Choices seed;
  for (const auto& a : g.layers) {
    seed.kinds.push_back(a.stationary);
    seed.macros.push_back(a.macro);
  }
  BranchAndBound bb(layers, cfg, seed, g.objective());
  return from_choices(layers, Policy::HsOpt, cfg, bb.run());
}

DataflowPlan plan_layers(const std::vector<Footprint>& layers, Policy policy, const MapperConfig& cfg) {
  if (cfg.n_macros == 0) throw ConfigError("n_macros must be at least 1");
  switch (policy) {
    case Policy::WsOnly:
      return from_choices(layers, policy, cfg,
                          first_fit_decreasing(layers, cfg, [](const Footprint&) { return OperandKind::Weights; }));
    case Policy::HsMin:
      return from_choices(layers, policy, cfg, first_fit_decreasing(layers, cfg, min_kind));
    case Policy::HsMax:
      return from_choices(layers, policy, cfg, first_fit_decreasing(layers, cfg, max_kind));
    case Policy::HsGreedy:
      return greedy_plan(layers, cfg);
    case Policy::HsOpt:
      return plan_optimal(layers, cfg);
  }
  throw ConfigError("unknown policy");
}

DataflowPlan plan(const ModelSpec& model, Policy policy, const MapperConfig& cfg) {
  std::vector<Footprint> fps;
  for (const auto& l : model.layers) fps.push_back(footprint(l));
  return plan_layers(fps, policy, cfg);
}

}  // namespace flexspim
