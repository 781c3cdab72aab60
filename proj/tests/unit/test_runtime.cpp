#include <gtest/gtest.h>

#include <random>

#include "flexspim/runtime.hpp"
#include "flexspim/random_model.hpp"

using namespace flexspim;

namespace {

ModelSpec single_neuron(std::int64_t w, std::int64_t theta) {
  ModelSpec m;
  m.timesteps = 3;
  m.in_c = 1;
  LayerSpec l;
  l.kind = LayerKind::Fc;
  l.c_in = 1;
  l.c_out = 1;
  l.res_w = 4;
  l.res_v = 8;
  l.theta = theta;
  l.weights = {w};
  m.layers = {l};
  return m;
}

DataflowPlan uniform_plan(const ModelSpec& m, OperandKind k, bool tiled = false) {
  std::vector<Footprint> fp;
  for (const auto& l : m.layers) fp.push_back(footprint(l));
  MapperConfig cfg;
  cfg.n_macros = m.layers.size();
  std::vector<OperandKind> kinds(m.layers.size(), k);
  std::vector<std::optional<std::size_t>> macros;
  for (std::size_t i = 0; i < m.layers.size(); ++i) macros.push_back(tiled ? std::nullopt : std::optional<std::size_t>(i));
  return make_plan(fp, Policy::HsOpt, cfg, kinds, macros);
}

}  // namespace

TEST(Reference, SingleNeuronHandTrace) {
  ModelSpec m = single_neuron(3, 5);
  EventStream e{{{0, 0, 0, 0}, {1, 0, 0, 0}}};
  auto r = reference_run(m, e);
  ASSERT_EQ(r.spikes[0].size(), 3u);
  EXPECT_EQ(r.spikes[0][0][0], 0);
  EXPECT_EQ(r.spikes[0][1][0], 1);
  EXPECT_EQ(r.spikes[0][2][0], 0);
  EXPECT_EQ(r.final_potentials[0][0], 1);
  m.layers[0].reset = ResetRule::ToZero;
  EXPECT_EQ(reference_run(m, e).final_potentials[0][0], 0);
}

TEST(Reference, NoEventsNoActivity) {
  std::mt19937_64 rng(1);
  ModelSpec m = gen::random_model(rng);
  for (auto& l : m.layers) l.theta = std::max<std::int64_t>(l.theta, 1);
  auto r = reference_run(m, EventStream{});
  for (const auto& layer : r.spikes)
    for (const auto& f : layer)
      for (auto s : f) EXPECT_EQ(s, 0);
  for (const auto& v : r.final_potentials)
    for (auto x : v) EXPECT_EQ(x, 0);
  EXPECT_EQ(r.stats.total().sops, 0u);
}

TEST(Reference, DeterministicAndDenseAgrees) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    ModelSpec m = gen::random_model(rng);
    EventStream e = gen::random_events(rng, m);
    auto a = reference_run(m, e);
    auto b = reference_run(m, e);
    auto d = reference_run(m, e, true);
    EXPECT_EQ(compare_runs(a, b), "");
    EXPECT_EQ(compare_runs(a, d), "");
    EXPECT_EQ(a.stats.cells, d.stats.cells);
  }
}

TEST(Reference, SopCountIsFanOutSum) {
  std::mt19937_64 rng(3);
  ModelSpec m = gen::random_model(rng);
  EventStream e = gen::random_events(rng, m);
  auto r = reference_run(m, e);
  for (std::size_t t = 0; t < m.timesteps; ++t) {
    std::vector<std::uint8_t> in = e.frames(m)[t];
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
      std::uint64_t want = 0;
      for (std::size_t i = 0; i < in.size(); ++i)
        if (in[i]) want += fan_out(m.layers[l], i).size();
      EXPECT_EQ(r.stats.at(l, t).sops, want);
      in = r.spikes[l][t];
    }
  }
}

TEST(Reference, DropsLateEvents) {
  ModelSpec m = single_neuron(3, 5);
  EventStream e{{{0, 0, 0, 0}, {7, 0, 0, 0}}};
  auto r = reference_run(m, e);
  EXPECT_EQ(r.dropped_events, 1u);
  EXPECT_FALSE(r.warnings.empty());
}

TEST(Macros, SingleNeuronBothDataflows) {
  ModelSpec m = single_neuron(3, 5);
  EventStream e{{{0, 0, 0, 0}, {1, 0, 0, 0}}};
  auto ref = reference_run(m, e);
  for (OperandKind k : {OperandKind::Weights, OperandKind::Potentials}) {
    auto r = run_on_macros(m, e, uniform_plan(m, k));
    EXPECT_EQ(compare_runs(ref, r), "");
    EXPECT_EQ(r.stats.total().sops, 2u);
    EXPECT_EQ(r.stats.total().compare_ops, 3u);
  }
}

TEST(Macros, MatchReferenceOnRandomModels) {
  std::mt19937_64 rng(4);
  std::uint64_t deep_spikes = 0;
  for (int trial = 0; trial < 12; ++trial) {
    gen::RandomModelOptions o;
    o.timesteps = 6;
    ModelSpec m = gen::random_model(rng, o);
    EventStream e = gen::random_events(rng, m);
    auto ref = reference_run(m, e);
    deep_spikes += ref.stats.layer_total(m.layers.size() - 1).output_spikes;
    for (OperandKind k : {OperandKind::Weights, OperandKind::Potentials}) {
      auto r = run_on_macros(m, e, uniform_plan(m, k));
      EXPECT_EQ(compare_runs(ref, r), "") << "trial " << trial;
      for (std::size_t l = 0; l < m.layers.size(); ++l)
        for (std::size_t t = 0; t < m.timesteps; ++t) {
          EXPECT_EQ(r.stats.at(l, t).sops, ref.stats.at(l, t).sops);
          EXPECT_EQ(r.stats.at(l, t).saturations, ref.stats.at(l, t).saturations);
        }
    }
  }
  EXPECT_GT(deep_spikes, 0u);  // activity reaches the last layer
}

TEST(Macros, EmptyStreamCountsNoSops) {
  std::mt19937_64 rng(5);
  ModelSpec m = gen::random_model(rng);
  for (auto& l : m.layers) l.theta = std::max<std::int64_t>(l.theta, 1);
  for (OperandKind k : {OperandKind::Weights, OperandKind::Potentials}) {
    auto r = run_on_macros(m, EventStream{}, uniform_plan(m, k));
    EXPECT_EQ(r.stats.total().sops, 0u);
    EXPECT_EQ(r.stats.total().broadcast_bits, 0u);
  }
}

TEST(Macros, TilingIsInvisible) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 6; ++trial) {
    gen::RandomModelOptions o;
    o.timesteps = 4;
    o.max_channels = 6;
    o.n_cols = 4;
    o.fixed_res = {{4, 8}};  // rows_W 1, rows_V 2, P 64
    ModelSpec m = gen::random_model(rng, o);
    EventStream e = gen::random_events(rng, m);
    auto ref = reference_run(m, e);
    for (OperandKind k : {OperandKind::Weights, OperandKind::Potentials}) {
      auto whole = run_on_macros(m, e, uniform_plan(m, k));
      RunOptions small;
      small.row_budget = 3;  // one potential band, or working rows plus one weight
      auto tiled = run_on_macros(m, e, uniform_plan(m, k), small);
      EXPECT_EQ(compare_runs(ref, tiled), "") << "trial " << trial;
      auto forced = run_on_macros(m, e, uniform_plan(m, k, true));
      EXPECT_EQ(compare_runs(ref, forced), "") << "trial " << trial;
      for (std::size_t l = 0; l < m.layers.size(); ++l) {
        bool split = k == OperandKind::Weights
                         ? m.layers[l].weights_per_channel() > 1 && tiled.stats.layer_total(l).input_spikes > 0
                         : m.layers[l].neurons() > 64;
        if (split) EXPECT_GT(tiled.stats.layer_total(l).reload_events, 0u) << l;
      }
      EXPECT_GE(forced.stats.total().reload_events, m.timesteps * m.layers.size());
      EXPECT_EQ(whole.stats.total().reload_events, 0u);
      EXPECT_EQ(tiled.stats.total().sops, whole.stats.total().sops);
    }
  }
}

TEST(Macros, ResidentLoadsOnce) {
  std::mt19937_64 rng(7);
  ModelSpec m = gen::random_model(rng);
  EventStream e = gen::random_events(rng, m);
  auto ws = run_on_macros(m, e, uniform_plan(m, OperandKind::Weights));
  auto os = run_on_macros(m, e, uniform_plan(m, OperandKind::Potentials));
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    auto f = footprint(m.layers[l]);
    EXPECT_EQ(ws.stats.layer_total(l).stationary_load_bits, f.bits_w);
    EXPECT_EQ(os.stats.layer_total(l).stationary_load_bits, f.bits_v);
    EXPECT_EQ(ws.stats.at(l, 1).stationary_load_bits, 0u);
  }
  // Weights travel by broadcast only in the potential-stationary flow.
  EXPECT_EQ(ws.stats.total().broadcast_bits, 0u);
  EXPECT_GT(os.stats.total().broadcast_bits, 0u);
}

TEST(Macros, PlanMismatchRejected) {
  std::mt19937_64 rng(8);
  ModelSpec m = gen::random_model(rng);
  ModelSpec other = gen::random_model(rng);
  other.layers.pop_back();
  EXPECT_THROW(run_on_macros(m, EventStream{}, uniform_plan(other, OperandKind::Weights)), ContractViolation);
}

TEST(Macros, CyclesFollowShape) {
  ModelSpec m = single_neuron(3, 5);
  m.layers[0].res_v = 12;
  EventStream e{{{0, 0, 0, 0}}};
  for (std::size_t nc : {1, 3, 4, 12}) {
    m.layers[0].n_cols = nc;
    auto r = run_on_macros(m, e, uniform_plan(m, OperandKind::Potentials));
    std::uint64_t rows = (12 + nc - 1) / nc;
    // One accumulate plus three compares, each subtract-free timestep.
    EXPECT_EQ(r.stats.at(0, 0).cim_cycles % rows, 0u) << nc;
    EXPECT_EQ(compare_runs(reference_run(m, e), r), "");
  }
}

TEST(SpikeRecordsTest, Coordinates) {
  ModelSpec m;
  m.timesteps = 1;
  m.in_c = 1;
  m.in_h = 2;
  m.in_w = 3;
  LayerSpec l;
  l.c_in = 1;
  l.c_out = 2;
  l.kernel = 1;
  l.h_in = 2;
  l.w_in = 3;
  l.derive_output_dims();
  l.theta = 1;
  l.weights = {1, 1};
  m.layers = {l};
  EventStream e{{{0, 0, 2, 1}}};
  auto recs = spike_records(m, reference_run(m, e));
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].c, 0u);
  EXPECT_EQ(recs[1].c, 1u);
  EXPECT_EQ(recs[0].x, 2u);
  EXPECT_EQ(recs[0].y, 1u);
}
