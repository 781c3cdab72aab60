#pragma once

#include <algorithm>
#include <random>

#include "flexspim/model.hpp"

namespace flexspim::gen {

struct RandomModelOptions {
  std::size_t conv_layers = 2;
  std::size_t fc_layers = 1;
  std::size_t timesteps = 20;
  std::size_t max_channels = 4;
  std::size_t min_hw = 4;
  std::size_t max_hw = 7;
  std::size_t min_res = 2;
  std::size_t max_res = 12;
  std::optional<std::pair<std::size_t, std::size_t>> fixed_res;  // (res_w, res_v) for all layers
  std::optional<std::size_t> n_cols;
};

inline std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline ModelSpec random_model(std::mt19937_64& rng, const RandomModelOptions& o = {}) {
  ModelSpec m;
  m.name = "random";
  m.timesteps = o.timesteps;
  m.in_c = pick(rng, 1, 2);
  m.in_h = pick(rng, o.min_hw, o.max_hw);
  m.in_w = pick(rng, o.min_hw, o.max_hw);
  std::size_t c = m.in_c, h = m.in_h, w = m.in_w;
  for (std::size_t i = 0; i < o.conv_layers + o.fc_layers; ++i) {
    LayerSpec l;
    if (i < o.conv_layers) {
      l.kind = LayerKind::Conv;
      l.c_in = c;
      l.c_out = pick(rng, 1, o.max_channels);
      l.kernel = pick(rng, 1, std::min<std::size_t>(3, std::min(h, w)));
      l.stride = pick(rng, 1, 2);
      l.padding = pick(rng, 0, l.kernel / 2);
      l.h_in = h;
      l.w_in = w;
      l.derive_output_dims();
    } else {
      l.kind = LayerKind::Fc;
      l.c_in = c * h * w;
      l.c_out = pick(rng, 2, 8);
    }
    if (o.fixed_res) {
      l.res_w = o.fixed_res->first;
      l.res_v = o.fixed_res->second;
    } else {
      l.res_w = pick(rng, o.min_res, o.max_res);
      l.res_v = pick(rng, l.res_w, std::max(l.res_w, o.max_res));
    }
    l.reset = pick(rng, 0, 1) == 0 ? ResetRule::SubtractThreshold : ResetRule::ToZero;
    l.n_cols = o.n_cols;
    // Threshold around a few typical weight magnitudes so layers keep firing.
    std::int64_t wmax = max_signed(l.res_w);
    std::int64_t hi = std::max<std::int64_t>(1, std::min<std::int64_t>(max_signed(l.res_v), 3 * std::max<std::int64_t>(wmax, 1)));
    l.theta = std::uniform_int_distribution<std::int64_t>(std::min<std::int64_t>(1, hi), hi)(rng);
    if (l.res_v == 1) l.theta = 0;
    m.layers.push_back(l);
    c = l.c_out;
    h = l.h_out;
    w = l.w_out;
  }
  fill_random_weights(m, rng());
  // Skew weights positive so spikes propagate through deeper layers.
  for (auto& l : m.layers)
    for (auto& wv : l.weights)
      if (wv < 0 && pick(rng, 0, 2) != 0) wv = -wv > max_signed(l.res_w) ? max_signed(l.res_w) : -wv;
  return m;
}

inline EventStream random_events(std::mt19937_64& rng, const ModelSpec& m, double density = 0.3) {
  EventStream e;
  std::bernoulli_distribution on(density);
  for (std::size_t t = 0; t < m.timesteps; ++t)
    for (std::size_t c = 0; c < m.in_c; ++c)
      for (std::size_t y = 0; y < m.in_h; ++y)
        for (std::size_t x = 0; x < m.in_w; ++x)
          if (on(rng)) e.events.push_back({t, c, x, y});
  return e;
}

}  // namespace flexspim::gen
