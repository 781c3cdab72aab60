#pragma once

// Text formats: workload description, input events CSV, spike and stats CSV.
//
// Workload grammar, one statement per line, '#' starts a comment:
//
//   name = <identifier>
//   timesteps = <int>
//   input = <C> <H> <W>
//   res_w = <int> | res_v = <int> | theta = <int> | n_cols = <int>|auto
//   reset_rule = subtract|zero
//   weight_seed = <int>
//   weights_file = <path relative to the workload file>
//   layer conv c_out=<int> k=<int> [stride=<int>] [pad=<int>] [overrides]
//   layer fc c_out=<int> [overrides]
//
// Global res_w/res_v/theta/n_cols/reset_rule set the defaults for the layer
// lines that follow; a layer line may override any of them with key=value.
// Weights come from weights_file when given (integers, layer-major, in the
// order the layers appear), otherwise from weight_seed.

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "flexspim/model.hpp"
#include "flexspim/runtime.hpp"

namespace flexspim {

class ParseError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Workload {
  ModelSpec model;
  std::uint64_t weight_seed = 1;
  std::string weights_file;  // as written, empty when seeded
};

/// `source` names the input in error messages; `base_dir` resolves weights_file.
Workload parse_workload(const std::string& text, const std::string& source = "workload",
                        const std::string& base_dir = ".");
Workload load_workload(const std::string& path);
std::vector<std::int64_t> parse_weights(const std::string& text, const std::string& source);

EventStream parse_events(const std::string& text, const std::string& source = "events");
EventStream load_events(const std::string& path);
void write_events(std::ostream& os, const EventStream& events);

void write_spikes_csv(std::ostream& os, const std::vector<SpikeRecord>& spikes);
void write_stats_csv(std::ostream& os, const RunStats& stats);

std::string read_file(const std::string& path);

}  // namespace flexspim
