#pragma once

// Oracle-equivalence checks shared by the `verify` command and the
// acceptance binary. Each check stops at the first mismatch and reports it.

#include <cstdint>
#include <string>
#include <vector>

#include "flexspim/pc_array.hpp"

namespace flexspim {

struct CheckResult {
  std::string name;
  bool passed = true;
  std::uint64_t cases = 0;
  std::string counterexample;  // empty when passed
};

CheckResult check_full_adder(AdderFault fault = AdderFault::None);
/// Every operand pair and carry-in for group widths 1..max_width, both directions.
CheckResult check_chain_exhaustive(std::size_t max_width = 10, AdderFault fault = AdderFault::None);
/// Random group widths in [1, max_width] against multi-limb integer addition.
CheckResult check_chain_random(std::uint64_t cases, std::size_t max_width, std::uint64_t seed,
                               AdderFault fault = AdderFault::None);
/// Random (V, W) accumulates across shapes against the saturating integer sum.
CheckResult check_shape_oracle(std::uint64_t pairs_per_shape, std::uint64_t seed, AdderFault fault = AdderFault::None);

struct SnnCheckOptions {
  std::size_t res_pairs = 12;   // sampled (res_w, res_v) with res_w <= res_v <= max_res
  std::size_t max_res = 24;
  std::size_t timesteps = 20;
  std::uint64_t seed = 1;
  AdderFault fault = AdderFault::None;
};
/// Three-layer random SCNNs on every divisor shape of res_v, both dataflows, against reference_run.
CheckResult check_snn_shapes(const SnnCheckOptions& opt);
/// Random models planned with every policy produce identical spikes.
CheckResult check_dataflow_invariance(std::size_t models, std::uint64_t seed, AdderFault fault = AdderFault::None);

struct VerifyOptions {
  std::uint64_t seed = 1;
  AdderFault fault = AdderFault::None;
  bool full = false;  // acceptance-sized case counts
};

std::vector<CheckResult> run_verify(const VerifyOptions& opt);

}  // namespace flexspim
