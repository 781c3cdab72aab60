#include <gtest/gtest.h>

#include <cmath>

#include "flexspim/cost_model.hpp"
#include "flexspim/workload_io.hpp"

using namespace flexspim;

namespace {

ModelSpec tiny() { return load_workload(std::string(FLEXSPIM_WORKLOADS) + "/tiny.wl").model; }
ModelSpec scnn() { return load_workload(std::string(FLEXSPIM_WORKLOADS) + "/scnn_6c3f.wl").model; }

double component_sum(const LayerEnergy& e) { return e.e_cim + e.e_compare + e.e_broadcast + e.e_buffer + e.e_dram; }

}  // namespace

TEST(Throughput, SingleRowEightSixteen) {
  const auto lay = plan_layout(8, 16, 16);
  ASSERT_EQ(lay.parallelism, 16u);
  ASSERT_EQ(cycles_per_sop(lay), 1u);
  const auto hi = peak_throughput(lay, 157.0);
  EXPECT_NEAR(hi.gsops, 2.512, 1e-9);
  EXPECT_NEAR(hi.normalized_gsops, 321.536, 1e-9);
  EXPECT_NEAR(peak_throughput(lay, 75.5).gsops, 1.208, 1e-9);
  // within 1% of the published endpoints
  EXPECT_LT(std::abs(hi.gsops / 2.5 - 1.0), 0.01);
  EXPECT_LT(std::abs(hi.normalized_gsops / 320.0 - 1.0), 0.01);
  EXPECT_LT(std::abs(peak_throughput(lay, 75.5).gsops / 1.2 - 1.0), 0.01);
}

TEST(Throughput, MoreRowsMeanMoreCycles) {
  const auto one = peak_throughput(plan_layout(8, 16, 16), 157.0);
  const auto four = peak_throughput(plan_layout(8, 16, 4), 157.0);
  // 4 cycles x 64 slots == 1 cycle x 16 slots
  EXPECT_NEAR(four.gsops, one.gsops * 64.0 / 16.0 / 4.0, 1e-12);
}

TEST(Energy, HandComputedSingleRowPoint) {
  EnergyParams p;
  // 256 active columns, 16 columns per chain, 16 SOPs per cycle
  const double want = 256 * 0.45 * (1.0 + 0.05 * 15.0 / 255.0) / 16.0;
  EXPECT_NEAR(energy_per_sop(plan_layout(16, 16, 16), p), want, 1e-12);
  EXPECT_NEAR(baseline_energy_per_sop(16, 32, p), 256 * 0.45 * 16 / 32.0, 1e-12);
}

TEST(Energy, LinearInResolution) {
  EnergyParams p;
  const double per_bit4 = energy_per_sop(plan_layout(4, 4, 4), p) / 4.0;
  for (std::size_t r : {4u, 8u, 16u, 32u}) {
    const double per_bit = energy_per_sop(plan_layout(r, r, r), p) / static_cast<double>(r);
    EXPECT_LE(std::abs(per_bit / per_bit4 - 1.0), 0.05) << r;
  }
}

TEST(Energy, CarryOverheadBounds) {
  EnergyParams p;
  EXPECT_EQ(p.carry_overhead(1), 0.0);
  EXPECT_NEAR(p.carry_overhead(256), 0.05, 1e-15);
  for (std::size_t c = 2; c <= 256; ++c) EXPECT_GT(p.carry_overhead(c), p.carry_overhead(c - 1));
}

TEST(Energy, StandbyIdentity) {
  EnergyParams full, gated;
  full.standby_factor = 1.0;
  gated.standby_factor = 0.13;
  for (std::size_t nc : {1u, 3u, 5u, 16u}) {
    const auto lay = plan_layout(8, 16, nc);
    for (std::size_t a : {0u, 1u, 7u}) {
      const double f = idle_cycle_energy_pj(lay, a, full);
      const double g = idle_cycle_energy_pj(lay, a, gated);
      ASSERT_GT(f, 0.0);
      EXPECT_NEAR(1.0 - g / f, 0.87, 1e-12);
    }
  }
  // and through the sweep totals
  const auto sf = shape_sweep(16, 32, divisor_shapes(16), full);
  const auto sg = shape_sweep(16, 32, divisor_shapes(16), gated);
  for (std::size_t i = 0; i < sf.points.size(); ++i) {
    if (sf.points[i].idle_pj_per_sop == 0.0) continue;
    EXPECT_NEAR(1.0 - sg.points[i].idle_pj_per_sop / sf.points[i].idle_pj_per_sop, 0.87, 1e-12);
    EXPECT_NEAR(sf.points[i].pj_per_sop - sg.points[i].pj_per_sop,
                sf.points[i].idle_pj_per_sop - sg.points[i].idle_pj_per_sop, 1e-9);
  }
}

TEST(Energy, AllStandbyFloor) {
  EnergyParams p;
  const auto lay = plan_layout(8, 16, 4);
  EXPECT_NEAR(macro_cycle_energy_pj(lay, 0, p), 256 * 0.45 * 0.13, 1e-12);
}

TEST(ShapeSweep, DivisorFamily) {
  EXPECT_EQ(divisor_shapes(16), (std::vector<std::size_t>{16, 8, 4, 2, 1}));
  EXPECT_EQ(divisor_shapes(1), (std::vector<std::size_t>{1}));
  const auto s = shape_sweep(16, 32, divisor_shapes(16), EnergyParams{});
  ASSERT_EQ(s.points.size(), 5u);
  double lo = 1e300, hi = 0;
  for (const auto& pt : s.points) {
    EXPECT_EQ(pt.n_rows * pt.n_cols, 16u);
    EXPECT_EQ(pt.active_slots, std::min<std::size_t>(pt.parallelism, 32));
    lo = std::min(lo, pt.pj_per_sop);
    hi = std::max(hi, pt.pj_per_sop);
  }
  EXPECT_NEAR(s.variation_ratio, hi / lo, 1e-12);
  EXPECT_NEAR(s.best_vs_baseline, s.baseline_pj_per_sop / lo, 1e-12);
}

TEST(Calibration, RoundTripAndHash) {
  EnergyParams p;
  p.e_dram_bit_pj = 12.5;
  p.buffer_bits = 1234;
  EXPECT_EQ(parse_calibration(calibration_text(p)), p);
  EXPECT_EQ(calibration_hash(p).size(), 16u);
  EXPECT_EQ(calibration_hash(p), calibration_hash(parse_calibration(calibration_text(p))));
  EXPECT_NE(calibration_hash(p), calibration_hash(EnergyParams{}));
}

TEST(Calibration, ShippedFileIsTheDefault) {
  const auto p = parse_calibration(read_file(std::string(FLEXSPIM_WORKLOADS) + "/default.cal"));
  EXPECT_EQ(p, EnergyParams{});
  EXPECT_EQ(calibration_hash(p), calibration_hash(EnergyParams{}));
}

TEST(Calibration, Errors) {
  auto msg = [](const std::string& text) {
    try {
      parse_calibration(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(msg("e_col_active_pj = 0.4\nbogus = 1\n").find("line 2"), std::string::npos);
  EXPECT_NE(msg("standby_factor = x\n").find("line 1"), std::string::npos);
  EXPECT_NE(msg("standby_factor\n").find("line 1"), std::string::npos);
  EXPECT_NE(msg("standby_factor = 1.5\n"), "no error");
  EXPECT_NE(msg("carry_overhead_max = 0.2\n"), "no error");
  EXPECT_NE(msg("e_dram_bit_pj = -1\n"), "no error");
  EXPECT_EQ(msg("# only a comment\n\n"), "no error");
}

TEST(System, DecompositionAddsUp) {
  const ModelSpec m = scnn();
  MapperConfig mc;
  mc.n_macros = 4;
  for (Policy pol : all_policies()) {
    const auto pl = plan(m, pol, mc);
    SystemOptions so;
    so.n_macros = 4;
    const auto r = system_energy(m, pl, 0.9, EnergyParams{}, so);
    ASSERT_EQ(r.layers.size(), m.layers.size());
    LayerEnergy sum;
    for (const auto& l : r.layers) {
      EXPECT_NEAR(l.total(), component_sum(l), 1e-9 * l.total());
      EXPECT_GE(l.e_cim, 0.0);
      EXPECT_GE(l.e_dram, 0.0);
      sum += l;
    }
    EXPECT_NEAR(sum.total(), r.total.total(), 1e-9 * r.total.total());
    EXPECT_NEAR(sum.sops, r.total.sops, 1e-6);
    EXPECT_NEAR(r.pj_per_sop, r.total.total() / r.total.sops, 1e-9);
  }
}

TEST(System, SopsScaleWithDensity) {
  const ModelSpec m = tiny();
  const auto pl = plan(m, Policy::HsOpt, MapperConfig{});
  const auto dense = dense_sops(m);
  for (double s : {0.0, 0.5, 0.9}) {
    const auto r = system_energy(m, pl, s, EnergyParams{});
    for (std::size_t i = 0; i < m.layers.size(); ++i)
      EXPECT_NEAR(r.layers[i].sops, static_cast<double>(dense[i]) * (1.0 - s) * m.timesteps, 1e-6);
  }
}

TEST(System, ComputeEnergyFallsWithSparsity) {
  const ModelSpec m = scnn();
  SystemConfig c;
  double prev = 1e300;
  for (double s : {0.85, 0.9, 0.95, 0.99}) {
    const double e = config_energy(m, c, s).total.e_cim;
    EXPECT_LT(e, prev);
    prev = e;
  }
}

TEST(System, CountedStatsMatchAnalyticOnDenseFirstLayer) {
  const ModelSpec m = tiny();
  EventStream ev;
  for (std::size_t t = 0; t < m.timesteps; ++t)
    for (std::size_t c = 0; c < m.in_c; ++c)
      for (std::size_t y = 0; y < m.in_h; ++y)
        for (std::size_t x = 0; x < m.in_w; ++x) ev.events.push_back({t, c, x, y});
  const auto pl = plan(m, Policy::HsOpt, MapperConfig{});
  const auto run = run_on_macros(m, ev, pl);
  const auto counted = system_energy(m, pl, run.stats, EnergyParams{});
  const auto analytic = system_energy(m, pl, 0.0, EnergyParams{});
  EXPECT_NEAR(counted.layers[0].sops, analytic.layers[0].sops, 1e-9);
  EXPECT_NEAR(counted.layers[0].e_cim, analytic.layers[0].e_cim, 1e-6);
}

TEST(Gain, IdenticalConfigsGiveZero) {
  const ModelSpec m = tiny();
  SystemConfig c;
  for (const auto& g : efficiency_gain(m, c, c, {0.85, 0.99})) EXPECT_NEAR(g.gain, 0.0, 1e-12);
}

TEST(Gain, MonotoneInBaselinePotentialWidth) {
  const ModelSpec m = scnn();
  SystemConfig flex;
  double prev = -1e300;
  for (std::size_t rv : {8u, 11u, 12u, 16u, 20u, 24u, 32u}) {
    SystemConfig base = fixed_precision_baseline(EnergyParams{});
    base.fixed_resolutions.reset();
    base.forced_resolutions = std::make_pair(std::size_t{8}, rv);
    const double g = efficiency_gain(m, flex, base, {0.9}).at(0).gain;
    EXPECT_GE(g, prev) << rv;
    prev = g;
  }
}

TEST(Gain, HybridBeatsFixedPrecisionOnExample) {
  const ModelSpec m = scnn();
  SystemConfig flex;
  const auto base = fixed_precision_baseline(EnergyParams{});
  for (const auto& g : efficiency_gain(m, flex, base, {0.85, 0.9, 0.95, 0.99})) EXPECT_GT(g.gain, 0.5) << g.sparsity;
}
