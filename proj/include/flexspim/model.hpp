#pragma once

// Spiking CNN workload description: layers, model, input events, and the
// per-layer memory footprint arithmetic.

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "flexspim/macro.hpp"

namespace flexspim {

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class LayerKind : std::uint8_t { Conv, Fc };

struct LayerSpec {
  LayerKind kind = LayerKind::Conv;
  std::size_t c_in = 1;
  std::size_t c_out = 1;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t h_in = 1;
  std::size_t w_in = 1;
  std::size_t h_out = 1;
  std::size_t w_out = 1;
  std::size_t res_w = 8;
  std::size_t res_v = 16;
  std::int64_t theta = 1;
  ResetRule reset = ResetRule::SubtractThreshold;
  std::optional<std::size_t> n_cols;  // nullopt selects automatically
  /// [c_out][c_in][kernel][kernel] for Conv, [c_out][c_in] for Fc.
  std::vector<std::int64_t> weights;

  std::size_t inputs() const { return c_in * h_in * w_in; }
  std::size_t neurons() const { return c_out * h_out * w_out; }
  std::size_t weights_per_channel() const { return c_in * kernel * kernel; }
  std::size_t weight_count() const { return c_out * weights_per_channel(); }
  std::size_t weight_index(std::size_t co, std::size_t ci, std::size_t ky, std::size_t kx) const {
    return ((co * c_in + ci) * kernel + ky) * kernel + kx;
  }
  std::size_t neuron_index(std::size_t co, std::size_t y, std::size_t x) const { return (co * h_out + y) * w_out + x; }
  std::size_t resolved_n_cols() const;
  /// Sets h_out/w_out from the input dims, kernel, stride and padding.
  void derive_output_dims();
  void validate() const;
};

/// Column count used when a layer leaves n_cols on auto: bit-parallel single
/// row up to 32 columns, otherwise the narrowest width that keeps the same
/// number of rows.
std::size_t auto_n_cols(std::size_t res_w, std::size_t res_v);

/// One input spike reaching output neuron `neuron` through weight `weight`.
struct Synapse {
  std::size_t neuron;
  std::size_t weight;
  std::size_t channel;   // output channel of `neuron`
  std::size_t position;  // y * w_out + x of `neuron`
  std::size_t offset;    // weight index within the channel
};

/// Output neurons reached by the spike at flattened input index `input`.
std::vector<Synapse> fan_out(const LayerSpec& layer, std::size_t input);

struct ModelSpec {
  std::string name = "model";
  std::size_t timesteps = 1;
  std::size_t in_c = 1;
  std::size_t in_h = 1;
  std::size_t in_w = 1;
  std::vector<LayerSpec> layers;

  void validate() const;
};

struct Event {
  std::size_t t;
  std::size_t c;
  std::size_t x;
  std::size_t y;
};

struct EventStream {
  std::vector<Event> events;

  /// Binary input frames, one per timestep, indexed c * H * W + y * W + x.
  /// Events at t >= timesteps are dropped and counted in `dropped`.
  std::vector<std::vector<std::uint8_t>> frames(const ModelSpec& model, std::size_t* dropped = nullptr) const;
  void validate(const ModelSpec& model) const;
};

struct Footprint {
  std::uint64_t bits_w = 0;
  std::uint64_t bits_v = 0;
  std::uint64_t total() const { return bits_w + bits_v; }
};

Footprint footprint(const LayerSpec& layer);
Footprint footprint_at(const LayerSpec& layer, std::size_t res_w, std::size_t res_v);

/// Resolutions a fixed-precision design can store.
struct ResolutionPolicy {
  std::set<std::size_t> weights;
  std::set<std::size_t> potentials;
};

struct FootprintComparison {
  std::uint64_t own_bits = 0;
  std::uint64_t constrained_bits = 0;
  double ratio = 1.0;  // own / constrained
  std::vector<std::pair<std::size_t, std::size_t>> rounded;  // per layer (res_w, res_v) after rounding up
};

/// Rounds `res` up to the smallest allowed value; throws if none is large enough.
std::size_t round_up_resolution(std::size_t res, const std::set<std::size_t>& allowed);

FootprintComparison model_footprint_comparison(const ModelSpec& model, const ResolutionPolicy& policy);

/// Weights uniformly random in the layer's res_w range, deterministic in `seed`.
void fill_random_weights(ModelSpec& model, std::uint64_t seed);

}  // namespace flexspim
