#include <gtest/gtest.h>

#include "flexspim/verify.hpp"

using namespace flexspim;

TEST(Verify, QuickSuitePasses) {
  for (const auto& r : run_verify({})) {
    EXPECT_TRUE(r.passed) << r.name << ": " << r.counterexample;
    EXPECT_GT(r.cases, 0u) << r.name;
  }
}

TEST(Verify, CarryFaultIsCaught) {
  auto r = check_chain_exhaustive(4, AdderFault::CarryStuckAtZero);
  EXPECT_FALSE(r.passed);
  EXPECT_NE(r.counterexample.find("width"), std::string::npos);
  EXPECT_FALSE(check_chain_random(200, 64, 3, AdderFault::CarryStuckAtZero).passed);
}

TEST(Verify, SumFaultIsCaught) {
  EXPECT_FALSE(check_full_adder(AdderFault::SumInverted).passed);
  EXPECT_FALSE(check_shape_oracle(1, 2, AdderFault::SumInverted).passed);
}

TEST(Verify, FaultReachesSnnRuns) {
  SnnCheckOptions o;
  o.res_pairs = 2;
  o.timesteps = 4;
  o.fault = AdderFault::CarryStuckAtZero;
  EXPECT_FALSE(check_snn_shapes(o).passed);
}
