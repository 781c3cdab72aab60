// flexspim command-line front end: verify, simulate, map, estimate, sweep.
// Exit codes: 0 ok, 1 verification failure, 2 usage or input error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "flexspim/cost_model.hpp"
#include "flexspim/mapper.hpp"
#include "flexspim/random_model.hpp"
#include "flexspim/report.hpp"
#include "flexspim/runtime.hpp"
#include "flexspim/verify.hpp"
#include "flexspim/workload_io.hpp"

using namespace flexspim;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kVerifyFailed = 1;
constexpr int kUsage = 2;

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct Common {
  std::string workload;
  std::string calibration;
  std::string outdir = ".";
  std::uint64_t seed = 1;
};

// Every output is rendered into memory first and written only once all of it exists.
using Outputs = std::map<std::string, std::string>;

void write_outputs(const std::string& dir, const Outputs& files) {
  fs::create_directories(dir);
  for (const auto& [name, body] : files) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    if (!out) throw UsageError("cannot write " + (fs::path(dir) / name).string());
    out << body;
  }
}

EnergyParams load_params(const std::string& path) {
  if (path.empty()) return {};
  return parse_calibration(read_file(path));
}

ModelSpec load_model(const Common& c, const std::string& reset_rule) {
  ModelSpec m = load_workload(c.workload).model;
  if (!reset_rule.empty()) {
    ResetRule r;
    if (reset_rule == "subtract") r = ResetRule::SubtractThreshold;
    else if (reset_rule == "zero") r = ResetRule::ToZero;
    else throw UsageError("--reset-rule must be subtract or zero");
    for (auto& l : m.layers) l.reset = r;
  }
  return m;
}

std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

void add_common(CLI::App* sub, Common& c, bool needs_workload) {
  if (needs_workload) sub->add_option("workload", c.workload, "workload description file")->required();
  sub->add_option("--calibration", c.calibration, "energy calibration file (key = value)");
  sub->add_option("-o,--outdir", c.outdir, "output directory");
  sub->add_option("--seed", c.seed, "seed for any generated data");
}

AdderFault parse_fault(const std::string& s) {
  if (s == "none") return AdderFault::None;
  if (s == "carry-stuck") return AdderFault::CarryStuckAtZero;
  if (s == "sum-inverted") return AdderFault::SumInverted;
  throw UsageError("--fault must be none, carry-stuck or sum-inverted");
}

// ---- verify

struct VerifyArgs {
  std::uint64_t seed = 1;
  bool full = false;
  std::string fault = "none";
};

int cmd_verify(const VerifyArgs& a) {
  VerifyOptions o;
  o.seed = a.seed;
  o.full = a.full;
  o.fault = parse_fault(a.fault);
  bool ok = true;
  for (const auto& r : run_verify(o)) {
    std::cout << (r.passed ? "ok   " : "FAIL ") << std::left << std::setw(22) << r.name << r.cases << " cases\n";
    if (!r.passed) {
      std::cout << "  counterexample: " << r.counterexample << "\n";
      ok = false;
    }
  }
  return ok ? kOk : kVerifyFailed;
}

// ---- simulate

struct SimArgs {
  Common c;
  std::string events;
  double event_density = 0.2;
  std::string policy = "hs-opt";
  std::size_t n_macros = 16;
  std::string reset_rule;
  bool dense_check = false;
  bool dump_grid = false;
};

int cmd_simulate(const SimArgs& a) {
  const ModelSpec m = load_model(a.c, a.reset_rule);
  const EnergyParams p = load_params(a.c.calibration);
  const Policy pol = parse_policy(a.policy);
  if (a.n_macros == 0) throw UsageError("--n-macros must be positive");
  EventStream ev;
  if (!a.events.empty()) {
    ev = load_events(a.events);
  } else {
    if (a.event_density < 0.0 || a.event_density > 1.0) throw UsageError("--event-density must be in [0, 1]");
    std::mt19937_64 rng(a.c.seed);
    ev = gen::random_events(rng, m, a.event_density);
  }
  ev.validate(m);

  MapperConfig mc;
  mc.n_macros = a.n_macros;
  const DataflowPlan pl = plan(m, pol, mc);
  RunOptions ro;
  ro.dump_grids = a.dump_grid;
  const RunResult r = run_on_macros(m, ev, pl, ro);

  std::string mismatch;
  if (a.dense_check) {
    mismatch = compare_runs(reference_run(m, ev, false), r);
    if (mismatch.empty()) mismatch = compare_runs(reference_run(m, ev, true), r);
  }

  SystemOptions so;
  so.n_macros = a.n_macros;
  const EnergyReport er = system_energy(m, pl, r.stats, p, so);

  nlohmann::json rep = report_header("simulate", a.c.workload, a.c.seed, p);
  rep["config"] = {{"policy", policy_name(pol)},
                   {"n_macros", a.n_macros},
                   {"events", a.events.empty() ? "generated" : a.events},
                   {"event_density", a.events.empty() ? nlohmann::json(a.event_density) : nlohmann::json(nullptr)},
                   {"reset_rule", a.reset_rule.empty() ? "workload" : a.reset_rule},
                   {"dense_check", a.dense_check}};
  rep["plan"] = plan_json(pl);
  rep["stats"] = stats_json(r.stats);
  rep["energy"] = energy_json(er);
  rep["dropped_events"] = r.dropped_events;
  rep["warnings"] = r.warnings;
  if (a.dense_check) rep["reference_match"] = mismatch.empty();

  Outputs out;
  std::ostringstream spikes, stats;
  write_spikes_csv(spikes, spike_records(m, r));
  write_stats_csv(stats, r.stats);
  out["spikes.csv"] = spikes.str();
  out["stats.csv"] = stats.str();
  out["report.json"] = dump_json(rep);
  if (a.events.empty()) {
    std::ostringstream e;
    write_events(e, ev);
    out["events.csv"] = e.str();
  }
  for (std::size_t i = 0; i < r.grid_dumps.size(); ++i) out["grid_layer" + std::to_string(i) + ".hex"] = r.grid_dumps[i];
  write_outputs(a.c.outdir, out);

  const auto tot = r.stats.total();
  std::cout << "layers " << m.layers.size() << "  timesteps " << m.timesteps << "  input events " << ev.events.size()
            << "  sops " << tot.sops << "  output spikes " << tot.output_spikes << "\n";
  std::cout << std::fixed << std::setprecision(4) << "energy " << er.total.total() << " pJ  " << er.pj_per_sop
            << " pJ/SOP\n";
  if (a.dense_check) {
    if (!mismatch.empty()) {
      std::cout << "dense check FAILED: " << mismatch << "\n";
      return kVerifyFailed;
    }
    std::cout << "dense check ok\n";
  }
  return kOk;
}

// ---- map

struct MapArgs {
  Common c;
  std::size_t n_macros = 16;
  std::uint64_t capacity_bits = kMacroCapacityBits;
  std::uint64_t reserve_bits = 0;
};

int cmd_map(const MapArgs& a) {
  const ModelSpec m = load_model(a.c, "");
  const EnergyParams p = load_params(a.c.calibration);
  if (a.n_macros == 0) throw UsageError("--n-macros must be positive");
  MapperConfig mc;
  mc.n_macros = a.n_macros;
  mc.capacity_bits = a.capacity_bits;
  mc.reserve_bits = a.reserve_bits;
  if (mc.reserve_bits >= mc.capacity_bits) throw UsageError("--reserve-bits must be below --capacity-bits");

  nlohmann::json rep = report_header("map", a.c.workload, a.c.seed, p);
  rep["config"] = {{"n_macros", a.n_macros}, {"capacity_bits", a.capacity_bits}, {"reserve_bits", a.reserve_bits}};
  nlohmann::json plans = nlohmann::json::array();
  std::ostringstream table;
  table << std::left << std::setw(10) << "policy" << std::right << std::setw(16) << "stationary_bits" << std::setw(16)
        << "streamed_bits" << std::setw(8) << "tiled" << std::setw(8) << "macros" << std::setw(14) << "stationarity"
        << "\n";
  for (Policy pol : all_policies()) {
    const DataflowPlan pl = plan(m, pol, mc);
    plans.push_back(plan_json(pl));
    const auto o = pl.objective();
    const auto st = stationarity_metric(pl);
    table << std::left << std::setw(10) << policy_name(pol) << std::right << std::setw(16) << st.stationary_bits
          << std::setw(16) << o.streamed_bits << std::setw(8) << o.tiled_layers << std::setw(8) << o.macros_used
          << std::setw(14) << std::fixed << std::setprecision(4) << st.fraction << "\n";
  }
  rep["plans"] = plans;
  write_outputs(a.c.outdir, {{"plan.json", dump_json(rep)}});
  std::cout << table.str();
  return kOk;
}

// ---- estimate

struct EstimateArgs {
  Common c;
  std::string policy = "hs-opt";
  std::size_t n_macros = 16;
  std::vector<double> sparsity{0.85, 0.9, 0.95, 0.99};
};

void check_sparsities(const std::vector<double>& s) {
  if (s.empty()) throw UsageError("need at least one sparsity");
  for (double v : s)
    if (!(v >= 0.0 && v <= 1.0)) throw UsageError("sparsity must be in [0, 1]");
}

int cmd_estimate(const EstimateArgs& a) {
  const ModelSpec m = load_model(a.c, "");
  const EnergyParams p = load_params(a.c.calibration);
  const Policy pol = parse_policy(a.policy);
  if (a.n_macros == 0) throw UsageError("--n-macros must be positive");
  check_sparsities(a.sparsity);

  SystemConfig flex;
  flex.policy = pol;
  flex.n_macros = a.n_macros;
  flex.params = p;
  const SystemConfig b48 = fixed_precision_baseline(p);
  const SystemConfig b611 = fixed_6_11_baseline(p);
  const auto g48 = efficiency_gain(m, flex, b48, a.sparsity);
  const auto g611 = efficiency_gain(m, flex, b611, a.sparsity);

  nlohmann::json rep = report_header("estimate", a.c.workload, a.c.seed, p);
  rep["config"] = {{"policy", policy_name(pol)}, {"n_macros", a.n_macros}, {"sparsity", a.sparsity}};
  nlohmann::json points = nlohmann::json::array();
  std::ostringstream table;
  table << std::fixed << std::setprecision(4);
  table << "sparsity  energy_pj       pj_per_sop  gain_vs_4_8_16  gain_vs_6_11\n";
  for (std::size_t i = 0; i < a.sparsity.size(); ++i) {
    const EnergyReport er = config_energy(m, flex, a.sparsity[i]);
    points.push_back({{"sparsity", a.sparsity[i]},
                      {"energy", energy_json(er)},
                      {"gain_vs_fixed_4_8_16", round_to(g48[i].gain)},
                      {"baseline_4_8_16_pj", round_to(g48[i].e_baseline_pj)},
                      {"gain_vs_fixed_6_11", round_to(g611[i].gain)},
                      {"baseline_6_11_pj", round_to(g611[i].e_baseline_pj)}});
    table << std::setw(8) << a.sparsity[i] << "  " << std::setw(14) << er.total.total() << "  " << std::setw(10)
          << er.pj_per_sop << "  " << std::setw(14) << g48[i].gain << "  " << std::setw(12) << g611[i].gain << "\n";
  }
  rep["points"] = points;
  write_outputs(a.c.outdir, {{"energy.json", dump_json(rep)}});
  std::cout << table.str();
  return kOk;
}

// ---- sweep

struct SweepArgs {
  Common c;
  std::vector<double> sparsity{0.85, 0.87, 0.9, 0.93, 0.95, 0.97, 0.99};
  std::vector<std::string> policies;
  std::vector<std::size_t> n_macros{2, 4, 8, 16};
};

int cmd_sweep(const SweepArgs& a) {
  const ModelSpec m = load_model(a.c, "");
  const EnergyParams p = load_params(a.c.calibration);
  check_sparsities(a.sparsity);
  std::vector<Policy> pols;
  if (a.policies.empty()) pols = all_policies();
  for (const auto& s : a.policies) pols.push_back(parse_policy(s));
  for (auto n : a.n_macros)
    if (n == 0) throw UsageError("--n-macros must be positive");

  std::ostringstream csv;
  csv << "# calibration_hash=" << calibration_hash(p) << " workload=" << a.c.workload << "\n";
  csv << "sparsity,policy,n_macros,streamed_bits,tiled_layers,sops,e_cim_pj,e_compare_pj,e_broadcast_pj,e_buffer_pj,"
         "e_dram_pj,e_total_pj,pj_per_sop,cycles\n";
  csv << std::fixed;
  for (auto n : a.n_macros)
    for (Policy pol : pols) {
      MapperConfig mc;
      mc.n_macros = n;
      const DataflowPlan pl = plan(m, pol, mc);
      SystemOptions so;
      so.n_macros = n;
      const auto o = pl.objective();
      for (double s : a.sparsity) {
        const EnergyReport er = system_energy(m, pl, s, p, so);
        const auto& t = er.total;
        csv << std::setprecision(4) << s << ',' << policy_name(pol) << ',' << n << ',' << o.streamed_bits << ','
            << o.tiled_layers << ',' << std::setprecision(1) << t.sops << std::setprecision(4) << ',' << t.e_cim
            << ',' << t.e_compare << ',' << t.e_broadcast << ',' << t.e_buffer << ',' << t.e_dram << ',' << t.total()
            << ',' << er.pj_per_sop << ',' << std::setprecision(1) << t.cycles << '\n';
      }
    }
  write_outputs(a.c.outdir, {{"sweep.csv", csv.str()}});
  std::cout << "wrote " << (fs::path(a.c.outdir) / "sweep.csv").string() << " ("
            << a.n_macros.size() * pols.size() * a.sparsity.size() << " points)\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flexspim: bit-level simulator for a flexible-precision spiking CIM accelerator"};
  app.require_subcommand(1);

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "run the oracle-equivalence suite");
  verify->add_option("--seed", va.seed, "seed for randomized cases");
  verify->add_flag("--full", va.full, "acceptance-sized case counts");
  verify->add_option("--fault", va.fault, "inject an adder fault: none, carry-stuck, sum-inverted");

  SimArgs sa;
  auto* sim = app.add_subcommand("simulate", "run a workload on simulated macros");
  add_common(sim, sa.c, true);
  sim->add_option("--events", sa.events, "input events CSV (t,c,x,y); generated from --seed when absent");
  sim->add_option("--event-density", sa.event_density, "spike probability per input per timestep when generating");
  sim->add_option("--policy", sa.policy, "ws-only, hs-min, hs-max, hs-greedy, hs-opt");
  sim->add_option("--n-macros", sa.n_macros, "macros available to the mapper");
  sim->add_option("--reset-rule", sa.reset_rule, "override every layer: subtract or zero");
  sim->add_flag("--dense-check", sa.dense_check, "cross-check against the scalar reference in event and dense mode");
  sim->add_flag("--dump-grid", sa.dump_grid, "write a hex dump of every layer's macro after the run");

  MapArgs ma;
  auto* map = app.add_subcommand("map", "plan the workload under every policy");
  add_common(map, ma.c, true);
  map->add_option("--n-macros", ma.n_macros, "macros available");
  map->add_option("--capacity-bits", ma.capacity_bits, "bits per macro");
  map->add_option("--reserve-bits", ma.reserve_bits, "bits per macro kept for working operands");

  EstimateArgs ea;
  auto* est = app.add_subcommand("estimate", "energy report and gain against fixed-precision baselines");
  add_common(est, ea.c, true);
  est->add_option("--policy", ea.policy, "mapping policy");
  est->add_option("--n-macros", ea.n_macros, "macros available");
  est->add_option("--sparsity", ea.sparsity, "input sparsities")->delimiter(',');

  SweepArgs wa;
  auto* sweep = app.add_subcommand("sweep", "tidy CSV over sparsity x policy x macro count");
  add_common(sweep, wa.c, true);
  sweep->add_option("--sparsity", wa.sparsity, "input sparsities")->delimiter(',');
  sweep->add_option("--policy", wa.policies, "policies (default all)")->delimiter(',');
  sweep->add_option("--n-macros", wa.n_macros, "macro counts")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (verify->parsed()) return cmd_verify(va);
    if (sim->parsed()) return cmd_simulate(sa);
    if (map->parsed()) return cmd_map(ma);
    if (est->parsed()) return cmd_estimate(ea);
    if (sweep->parsed()) return cmd_sweep(wa);
  } catch (const ContractViolation& e) {
    std::cerr << "error: internal check failed: " << e.what() << "\n";
    return kVerifyFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
