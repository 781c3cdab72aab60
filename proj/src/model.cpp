#include "flexspim/model.hpp"

#include <algorithm>
#include <random>
#include <string>

namespace flexspim {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ModelError(msg); }

}  // namespace

std::size_t auto_n_cols(std::size_t res_w, std::size_t res_v) {
  std::size_t m = std::max(res_w, res_v);
  if (m <= 32) return m;
  std::size_t rows = (m + 31) / 32;
  return (m + rows - 1) / rows;
}

std::size_t LayerSpec::resolved_n_cols() const { return n_cols ? *n_cols : auto_n_cols(res_w, res_v); }

void LayerSpec::derive_output_dims() {
  if (kind == LayerKind::Fc) {
    h_out = w_out = 1;
    return;
  }
  if (stride == 0 || kernel == 0) fail("kernel and stride must be positive");
  if (h_in + 2 * padding < kernel || w_in + 2 * padding < kernel) fail("kernel larger than padded input");
  h_out = (h_in + 2 * padding - kernel) / stride + 1;
  w_out = (w_in + 2 * padding - kernel) / stride + 1;
}

void LayerSpec::validate() const {
  if (c_in == 0 || c_out == 0) fail("channel counts must be positive");
  if (kernel == 0 || stride == 0) fail("kernel and stride must be positive");
  if (res_w == 0 || res_w > 63 || res_v == 0 || res_v > 63)
    fail("resolutions must be in [1, 63], got res_w=" + std::to_string(res_w) + " res_v=" + std::to_string(res_v));
  if (res_w > res_v) fail("res_w must not exceed res_v");
  if (kind == LayerKind::Fc) {
    if (kernel != 1 || stride != 1 || padding != 0 || h_in != 1 || w_in != 1 || h_out != 1 || w_out != 1)
      fail("fc layers take a flat input: kernel/stride 1, no padding, 1x1 dims");
  } else {
    if (h_in + 2 * padding < kernel || w_in + 2 * padding < kernel) fail("kernel larger than padded input");
    if (h_out != (h_in + 2 * padding - kernel) / stride + 1 || w_out != (w_in + 2 * padding - kernel) / stride + 1)
      fail("output dims inconsistent with input, kernel, stride and padding");
  }
  if (!fits_signed(theta, res_v)) fail("threshold " + std::to_string(theta) + " does not fit res_v");
  if (reset == ResetRule::SubtractThreshold && theta == min_signed(res_v))
    fail("subtract reset needs -threshold representable at res_v");
  if (n_cols && (*n_cols == 0 || *n_cols > kMacroCols)) fail("n_cols must be in [1, 256]");
  if (weights.size() != weight_count())
    fail("expected " + std::to_string(weight_count()) + " weights, got " + std::to_string(weights.size()));
  for (std::int64_t w : weights)
    if (!fits_signed(w, res_w)) fail("weight " + std::to_string(w) + " does not fit res_w=" + std::to_string(res_w));
}

std::vector<Synapse> fan_out(const LayerSpec& layer, std::size_t input) {
  std::vector<Synapse> out;
  if (input >= layer.inputs()) throw std::out_of_range("input index out of range");
  if (layer.kind == LayerKind::Fc) {
    out.reserve(layer.c_out);
    for (std::size_t co = 0; co < layer.c_out; ++co)
      out.push_back({co, co * layer.c_in + input, co, 0, input});
    return out;
  }
  std::size_t plane = layer.h_in * layer.w_in;
  std::size_t ci = input / plane;
  auto yi = static_cast<std::ptrdiff_t>((input % plane) / layer.w_in);
  auto xi = static_cast<std::ptrdiff_t>(input % layer.w_in);
  auto p = static_cast<std::ptrdiff_t>(layer.padding);
  auto s = static_cast<std::ptrdiff_t>(layer.stride);
  for (std::size_t co = 0; co < layer.c_out; ++co) {
    for (std::size_t ky = 0; ky < layer.kernel; ++ky) {
      std::ptrdiff_t ny = yi + p - static_cast<std::ptrdiff_t>(ky);
      if (ny < 0 || ny % s != 0) continue;
      auto yo = static_cast<std::size_t>(ny / s);
      if (yo >= layer.h_out) continue;
      for (std::size_t kx = 0; kx < layer.kernel; ++kx) {
        std::ptrdiff_t nx = xi + p - static_cast<std::ptrdiff_t>(kx);
        if (nx < 0 || nx % s != 0) continue;
        auto xo = static_cast<std::size_t>(nx / s);
        if (xo >= layer.w_out) continue;
        std::size_t w = layer.weight_index(co, ci, ky, kx);
        out.push_back({layer.neuron_index(co, yo, xo), w, co, yo * layer.w_out + xo, w - co * layer.weights_per_channel()});
      }
    }
  }
  return out;
}

void ModelSpec::validate() const {
  if (timesteps == 0) fail("timesteps must be positive");
  if (in_c == 0 || in_h == 0 || in_w == 0) fail("input dims must be positive");
  if (layers.empty()) fail("model has no layers");
  std::size_t c = in_c, h = in_h, w = in_w;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    try {
      l.validate();
    } catch (const ModelError& e) {
      fail("layer " + std::to_string(i) + ": " + e.what());
    }
    if (l.kind == LayerKind::Fc) {
      if (l.c_in != c * h * w) fail("layer " + std::to_string(i) + ": fc c_in must equal flattened input size " + std::to_string(c * h * w));
    } else if (l.c_in != c || l.h_in != h || l.w_in != w) {
      fail("layer " + std::to_string(i) + ": input dims do not match previous layer output");
    }
    c = l.c_out;
    h = l.h_out;
    w = l.w_out;
  }
}

void EventStream::validate(const ModelSpec& model) const {
  std::size_t last_t = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    if (e.t < last_t) fail("event " + std::to_string(i) + ": timestamps must be non-decreasing");
    last_t = e.t;
    if (e.c >= model.in_c || e.x >= model.in_w || e.y >= model.in_h)
      fail("event " + std::to_string(i) + ": coordinate outside input dims");
  }
}

std::vector<std::vector<std::uint8_t>> EventStream::frames(const ModelSpec& model, std::size_t* dropped) const {
  validate(model);
  std::size_t n = model.in_c * model.in_h * model.in_w;
  std::vector<std::vector<std::uint8_t>> out(model.timesteps, std::vector<std::uint8_t>(n, 0));
  std::size_t drop = 0;
  for (const Event& e : events) {
    if (e.t >= model.timesteps) {
      ++drop;
      continue;
    }
    out[e.t][(e.c * model.in_h + e.y) * model.in_w + e.x] = 1;
  }
  if (dropped) *dropped = drop;
  return out;
}

Footprint footprint_at(const LayerSpec& layer, std::size_t res_w, std::size_t res_v) {
  Footprint f;
  f.bits_w = static_cast<std::uint64_t>(layer.weight_count()) * res_w;
  f.bits_v = static_cast<std::uint64_t>(layer.neurons()) * res_v;
  return f;
}

Footprint footprint(const LayerSpec& layer) { return footprint_at(layer, layer.res_w, layer.res_v); }

std::size_t round_up_resolution(std::size_t res, const std::set<std::size_t>& allowed) {
  auto it = allowed.lower_bound(res);
  if (it == allowed.end()) fail("no allowed resolution can hold " + std::to_string(res) + " bits");
  return *it;
}

FootprintComparison model_footprint_comparison(const ModelSpec& model, const ResolutionPolicy& policy) {
  FootprintComparison cmp;
  for (const LayerSpec& l : model.layers) {
    cmp.own_bits += footprint(l).total();
    std::size_t rw = round_up_resolution(l.res_w, policy.weights);
    std::size_t rv = round_up_resolution(l.res_v, policy.potentials);
    cmp.rounded.emplace_back(rw, rv);
    cmp.constrained_bits += footprint_at(l, rw, rv).total();
  }
  cmp.ratio = cmp.constrained_bits == 0 ? 1.0 : static_cast<double>(cmp.own_bits) / static_cast<double>(cmp.constrained_bits);
  return cmp;
}

void fill_random_weights(ModelSpec& model, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (LayerSpec& l : model.layers) {
    std::uniform_int_distribution<std::int64_t> dist(min_signed(l.res_w), max_signed(l.res_w));
    l.weights.resize(l.weight_count());
    for (auto& w : l.weights) w = dist(rng);
  }
}

}  // namespace flexspim
