// One PASS/FAIL line per acceptance criterion, with the measured numbers.
// Exit status counts failing criteria, minus the ones named by --expect-fail
// (those still print FAIL; an expected failure that passes is an error).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "flexspim/cost_model.hpp"
#include "flexspim/mapper.hpp"
#include "flexspim/model.hpp"
#include "flexspim/random_model.hpp"
#include "flexspim/verify.hpp"
#include "flexspim/workload_io.hpp"
#include "support/mapper_oracle.hpp"

using namespace flexspim;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << std::fixed << v;
  return os.str();
}

const std::string kWorkloads = FLEXSPIM_WORKLOADS;

Outcome all_checks(const std::vector<CheckResult>& rs) {
  Outcome o{true, ""};
  for (const auto& r : rs) {
    if (!o.detail.empty()) o.detail += ", ";
    o.detail += r.name + " " + std::to_string(r.cases) + (r.passed ? " ok" : " FAILED");
    if (!r.passed) {
      o.pass = false;
      o.detail += " [" + r.counterexample + "]";
    }
  }
  return o;
}

Outcome c1_adder() {
  return all_checks({check_full_adder(), check_chain_exhaustive(10), check_chain_random(100000, 256, 11)});
}

Outcome c2_shapes() {
  SnnCheckOptions o;
  o.res_pairs = 24;
  o.max_res = 24;
  o.timesteps = 20;
  o.seed = 21;
  return all_checks({check_shape_oracle(4, 21), check_snn_shapes(o)});
}

Outcome c3_throughput() {
  const auto lay = plan_layout(8, 16, 16);
  const auto hi = peak_throughput(lay, 157.0);
  const auto lo = peak_throughput(lay, 75.5);
  const bool ok = std::abs(hi.gsops / 2.5 - 1) <= 0.01 && std::abs(lo.gsops / 1.2 - 1) <= 0.01 &&
                  std::abs(hi.normalized_gsops / 320.0 - 1) <= 0.01;
  return {ok, "157 MHz " + fmt(hi.gsops, 3) + " GSOP/s, 75.5 MHz " + fmt(lo.gsops, 3) + " GSOP/s, normalized " +
                  fmt(hi.normalized_gsops, 1) + " GSOP/s"};
}

Outcome c4_linearity() {
  EnergyParams p;
  const double base = energy_per_sop(plan_layout(4, 4, 4), p) / 4.0;
  double worst = 0;
  std::string d;
  for (std::size_t r : {4u, 8u, 16u, 32u}) {
    const double e = energy_per_sop(plan_layout(r, r, r), p);
    worst = std::max(worst, std::abs(e / r / base - 1.0));
    d += "r=" + std::to_string(r) + " " + fmt(e) + " pJ/SOP; ";
  }
  return {worst <= 0.05, d + "max deviation " + fmt(100 * worst, 2) + "%"};
}

Outcome c5_shape_sweep() {
  const auto p = parse_calibration(read_file(kWorkloads + "/default.cal"));
  const auto s = shape_sweep(16, 32, divisor_shapes(16), p);
  const bool ok = s.variation_ratio <= 1.24 && s.best_vs_baseline >= 3.8 && s.best_vs_baseline <= 4.8;
  std::string d = "max/min " + fmt(s.variation_ratio) + " (need <= 1.24), best vs baseline " +
                  fmt(s.best_vs_baseline, 3) + "x (need 3.8..4.8), bit-serial shape vs baseline " +
                  fmt(s.same_shape_vs_baseline, 3) + "x; points:";
  for (const auto& pt : s.points) d += " " + std::to_string(pt.n_rows) + "x" + std::to_string(pt.n_cols) + "=" + fmt(pt.pj_per_sop, 3);
  return {ok, d};
}

Outcome c6_standby() {
  EnergyParams full, gated;
  full.standby_factor = 1.0;
  gated.standby_factor = 0.13;
  double worst = 0;
  for (std::size_t nc : {1u, 3u, 5u, 7u, 16u})
    for (std::size_t a : {0u, 1u, 9u}) {
      const auto lay = plan_layout(8, 16, nc);
      const double f = idle_cycle_energy_pj(lay, a, full);
      worst = std::max(worst, std::abs(1.0 - idle_cycle_energy_pj(lay, a, gated) / f - 0.87));
    }
  const auto sf = shape_sweep(16, 32, divisor_shapes(16), full);
  const auto sg = shape_sweep(16, 32, divisor_shapes(16), gated);
  double idle_f = 0, idle_g = 0;
  for (std::size_t i = 0; i < sf.points.size(); ++i) {
    idle_f += sf.points[i].idle_pj_per_sop;
    idle_g += sg.points[i].idle_pj_per_sop;
  }
  const double sweep_red = 1.0 - idle_g / idle_f;
  worst = std::max(worst, std::abs(sweep_red - 0.87));
  return {worst < 1e-12, "idle-column reduction " + fmt(100 * (1 - idle_g / idle_f), 6) + "% in sweep totals, max error " +
                             std::to_string(worst)};
}

Outcome c7_mapper() {
  std::mt19937_64 rng(77);
  std::size_t mismatches = 0, exceed = 0, min_exceed = 0, max_exceed = 0;
  std::string first;
  for (int i = 0; i < 100; ++i) {
    const auto inst = fixtures::random_instance(rng, 8, 3);
    const auto want = fixtures::exhaustive_best(inst.layers, inst.config);
    const auto got = plan_optimal(inst.layers, inst.config).objective();
    if (!(got == want)) {
      ++mismatches;
      if (first.empty()) first = "instance " + std::to_string(i) + ": opt streamed " + std::to_string(got.streamed_bits) +
                                 " vs exhaustive " + std::to_string(want.streamed_bits);
    }
    const auto ws = plan_layers(inst.layers, Policy::WsOnly, inst.config).objective().streamed_bits;
    for (Policy p : {Policy::HsGreedy, Policy::HsOpt})
      if (plan_layers(inst.layers, p, inst.config).objective().streamed_bits > ws) ++exceed;
    if (plan_layers(inst.layers, Policy::HsMin, inst.config).objective().streamed_bits > ws) ++min_exceed;
    if (plan_layers(inst.layers, Policy::HsMax, inst.config).objective().streamed_bits > ws) ++max_exceed;
  }
  return {mismatches == 0 && exceed == 0,
          "100 instances: " + std::to_string(mismatches) + " optimum mismatches, HS_GREEDY/HS_OPT above WS_ONLY " +
              std::to_string(exceed) + " times; fixed-rule HS_MIN above WS " + std::to_string(min_exceed) +
              ", HS_MAX above WS " + std::to_string(max_exceed) + " (informational)" +
              (first.empty() ? "" : "; " + first)};
}

Outcome c8_invariance() { return all_checks({check_dataflow_invariance(20, 88)}); }

Outcome c9_gain() {
  const ModelSpec m = load_workload(kWorkloads + "/scnn_6c3f.wl").model;
  const auto p = parse_calibration(read_file(kWorkloads + "/default.cal"));
  SystemConfig flex;
  flex.params = p;
  const std::vector<double> sp{0.85, 0.87, 0.9, 0.93, 0.95, 0.97, 0.99};
  const auto g = efficiency_gain(m, flex, fixed_precision_baseline(p), sp);
  double lo = 1, hi = 0;
  for (const auto& x : g) {
    lo = std::min(lo, x.gain);
    hi = std::max(hi, x.gain);
  }
  const bool a = lo > 0.5;

  bool mono = true;
  double prev = -1e300;
  std::string trend;
  for (std::size_t rv : {8u, 11u, 12u, 16u, 20u, 24u, 32u}) {
    SystemConfig base = fixed_precision_baseline(p);
    base.fixed_resolutions.reset();
    base.forced_resolutions = std::make_pair(std::size_t{8}, rv);
    const double gg = efficiency_gain(m, flex, base, {0.9}).at(0).gain;
    mono = mono && gg >= prev;
    prev = gg;
    trend += " " + std::to_string(rv) + ":" + fmt(gg, 3);
  }
  const auto g611 = efficiency_gain(m, flex, fixed_6_11_baseline(p), sp);
  double lo2 = 1, hi2 = 0;
  for (const auto& x : g611) {
    lo2 = std::min(lo2, x.gain);
    hi2 = std::max(hi2, x.gain);
  }
  return {a && mono, "gain vs 4/8-16 baseline " + fmt(100 * lo, 1) + "%.." + fmt(100 * hi, 1) +
                         "% over s=0.85..0.99; vs 6-11 baseline " + fmt(100 * lo2, 1) + "%.." + fmt(100 * hi2, 1) +
                         "%; gain by baseline res_v at s=0.9:" + trend + (mono ? " (monotone)" : " (NOT monotone)") +
                         "; calibration " + calibration_hash(p)};
}

Outcome c10_footprint() {
  ResolutionPolicy pol{{4, 8}, {16}};
  std::mt19937_64 rng(1010);
  std::size_t bad = 0, checked = 0;
  for (int i = 0; i < 200; ++i) {
    gen::RandomModelOptions o;
    o.min_res = 1;
    o.max_res = 16;
    ModelSpec m = gen::random_model(rng, o);
    // force one sub-floor resolution
    m.layers[gen::pick(rng, 0, m.layers.size() - 1)].res_w = gen::pick(rng, 1, 3);
    for (auto& l : m.layers) {
      l.res_w = std::min<std::size_t>(l.res_w, 8);  // the policy tops out at 8/16
      l.res_v = std::max(l.res_v, l.res_w);
    }
    const auto c = model_footprint_comparison(m, pol);
    // double entry: recompute both sides from the layer list
    std::uint64_t own = 0, con = 0;
    for (const auto& l : m.layers) {
      own += l.weight_count() * l.res_w + l.neurons() * l.res_v;
      const std::size_t rw = l.res_w <= 4 ? 4 : 8;
      con += l.weight_count() * rw + l.neurons() * 16;
    }
    ++checked;
    if (c.own_bits != own || c.constrained_bits != con || !(c.ratio < 1.0) ||
        std::abs(c.ratio - double(own) / double(con)) > 1e-12)
      ++bad;
  }
  const ModelSpec ex = load_workload(kWorkloads + "/scnn_6c3f.wl").model;
  const auto e = model_footprint_comparison(ex, pol);
  return {bad == 0, std::to_string(checked) + " random models with a sub-floor layer, " + std::to_string(bad) +
                        " failures; example workload ratio " + fmt(e.ratio) + " (" + fmt(100 * (1 - e.ratio), 1) +
                        "% smaller, depends on its per-layer resolutions)"};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expected_fail;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--expect-fail") == 0 && i + 1 < argc) {
      expected_fail.insert(std::atoi(argv[++i]));
    } else {
      std::cerr << "usage: acceptance [--expect-fail N]...\n";
      return 2;
    }
  }
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"adder and chain exactness", c1_adder},       {"shape-independent arithmetic", c2_shapes},
      {"peak throughput", c3_throughput},             {"energy linear in resolution", c4_linearity},
      {"shape sweep spread and gain", c5_shape_sweep}, {"standby factor", c6_standby},
      {"mapper optimality", c7_mapper},               {"dataflow invariance", c8_invariance},
      {"system gain", c9_gain},                       {"footprint comparison", c10_footprint}};
  int unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i + 1);
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool known = expected_fail.count(n) != 0;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << n << " " << criteria[i].first << ": " << o.detail << " ["
              << fmt(secs, 1) << " s]" << (known && !o.pass ? " (known failure)" : "") << "\n";
    if (o.pass == known) ++unexpected;
  }
  std::cout.flush();
  return unexpected;
}
