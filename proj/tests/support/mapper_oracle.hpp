#pragma once

// Exhaustive reference for the mapper: every per-layer choice in
// {weights, potentials, tiled}, with the fewest macros that can hold the
// stationary items found by plain backtracking.

#include <algorithm>
#include <optional>
#include <random>
#include <vector>

#include "flexspim/mapper.hpp"

namespace flexspim::fixtures {

struct MapperInstance {
  std::vector<Footprint> layers;
  MapperConfig config;
};

inline MapperInstance random_instance(std::mt19937_64& rng, std::size_t max_layers, std::size_t max_macros) {
  MapperInstance inst;
  std::size_t L = std::uniform_int_distribution<std::size_t>(1, max_layers)(rng);
  inst.config.n_macros = std::uniform_int_distribution<std::size_t>(1, max_macros)(rng);
  inst.config.capacity_bits = std::uniform_int_distribution<std::uint64_t>(40, 200)(rng);
  std::uniform_int_distribution<std::uint64_t> bits(1, inst.config.capacity_bits * 6 / 5);
  for (std::size_t i = 0; i < L; ++i) inst.layers.push_back({bits(rng), bits(rng)});
  return inst;
}

inline bool pack(std::vector<std::uint64_t>& items, std::size_t idx, std::vector<std::uint64_t>& load, std::uint64_t cap) {
  if (idx == items.size()) return true;
  for (std::size_t m = 0; m < load.size(); ++m) {
    if (load[m] + items[idx] > cap) continue;
    load[m] += items[idx];
    bool ok = pack(items, idx + 1, load, cap);
    load[m] -= items[idx];
    if (ok) return true;
  }
  return false;
}

inline std::optional<std::size_t> min_macros(std::vector<std::uint64_t> items, std::size_t max_m, std::uint64_t cap) {
  if (items.empty()) return 0;
  std::sort(items.rbegin(), items.rend());
  for (std::size_t m = 1; m <= max_m; ++m) {
    std::vector<std::uint64_t> load(m, 0);
    if (pack(items, 0, load, cap)) return m;
  }
  return std::nullopt;
}

inline PlanObjective exhaustive_best(const std::vector<Footprint>& layers, const MapperConfig& cfg) {
  std::size_t L = layers.size();
  std::size_t combos = 1;
  for (std::size_t i = 0; i < L; ++i) combos *= 3;
  std::optional<PlanObjective> best;
  for (std::size_t code = 0; code < combos; ++code) {
    std::size_t c = code;
    PlanObjective o;
    std::vector<std::uint64_t> items;
    for (std::size_t i = 0; i < L; ++i, c /= 3) {
      switch (c % 3) {
        case 0:
          items.push_back(layers[i].bits_w);
          o.streamed_bits += layers[i].bits_v;
          break;
        case 1:
          items.push_back(layers[i].bits_v);
          o.streamed_bits += layers[i].bits_w;
          break;
        default:
          o.streamed_bits += layers[i].bits_w + layers[i].bits_v;
          ++o.tiled_layers;
      }
    }
    if (best && best->streamed_bits < o.streamed_bits) continue;
    auto m = min_macros(items, cfg.n_macros, cfg.usable_bits());
    if (!m) continue;
    o.macros_used = *m;
    if (!best || o < *best) best = o;
  }
  return *best;
}

}  // namespace flexspim::fixtures
