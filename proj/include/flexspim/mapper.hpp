#pragma once

// Per-layer stationarity selection and layer-to-macro bin assignment.
//
// Objective is streamed bits per timestep: a resident layer streams its
// non-stationary operand, a tiled layer streams both. Ties go to fewer tiled
// layers, then fewer macros in use.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flexspim/macro.hpp"
#include "flexspim/model.hpp"

namespace flexspim {

enum class Policy : std::uint8_t { WsOnly, HsMin, HsMax, HsGreedy, HsOpt };

const char* policy_name(Policy p);
Policy parse_policy(const std::string& name);
std::vector<Policy> all_policies();

inline constexpr std::uint64_t kMacroCapacityBits = std::uint64_t{kMacroRows} * kMacroCols;
inline constexpr std::size_t kExactSearchMaxLayers = 20;

struct MapperConfig {
  std::size_t n_macros = 1;
  std::uint64_t capacity_bits = kMacroCapacityBits;
  std::uint64_t reserve_bits = 0;  // per macro, kept for working operands
  std::uint64_t usable_bits() const { return capacity_bits > reserve_bits ? capacity_bits - reserve_bits : 0; }
};

struct LayerAssignment {
  OperandKind stationary = OperandKind::Weights;
  bool tiled = false;
  std::optional<std::size_t> macro;  // empty when tiled
  std::uint64_t stationary_bits = 0;
  std::uint64_t streamed_bits = 0;  // per timestep
  std::uint64_t tiles = 1;          // passes needed per timestep when tiled
};

struct PlanObjective {
  std::uint64_t streamed_bits = 0;
  std::size_t tiled_layers = 0;
  std::size_t macros_used = 0;
  auto operator<=>(const PlanObjective&) const = default;
};

struct DataflowPlan {
  Policy policy = Policy::WsOnly;
  MapperConfig config;
  std::vector<LayerAssignment> layers;
  std::vector<Footprint> footprints;
  std::vector<std::uint64_t> macro_bits;  // stationary bits per macro
  std::vector<std::string> warnings;

  PlanObjective objective() const;
  std::uint64_t stationary_bits() const;
  /// Throws ContractViolation if any macro is over capacity or a layer is unassigned.
  void check() const;
};

struct Stationarity {
  double fraction = 0.0;
  std::uint64_t stationary_bits = 0;
  std::uint64_t total_bits = 0;
};

Stationarity stationarity_metric(const DataflowPlan& plan);

DataflowPlan plan_layers(const std::vector<Footprint>& layers, Policy policy, const MapperConfig& config);
DataflowPlan plan(const ModelSpec& model, Policy policy, const MapperConfig& config);
DataflowPlan plan_optimal(const std::vector<Footprint>& layers, const MapperConfig& config);

/// Builds a plan from explicit per-layer choices (macro id or nullopt for tiled).
/// Throws ContractViolation if the choices overflow a macro.
DataflowPlan make_plan(const std::vector<Footprint>& layers, Policy policy, const MapperConfig& config,
                       const std::vector<OperandKind>& kinds, const std::vector<std::optional<std::size_t>>& macros);

}  // namespace flexspim
