#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "alstm/io.hpp"
#include "alstm/perf_model.hpp"
#include "oracles.hpp"

using namespace alstm;

namespace {

PlatformSpec huge_platform() {
  PlatformSpec p;
  p.peak_gops = 1e12;
  p.mem_bandwidth_bytes_per_s = 1e21;
  p.clock_hz = 1e8;
  p.onchip_bytes = std::uint64_t{1} << 40;
  p.multiplier_budget = std::uint64_t{1} << 40;
  return p;
}

PlatformSpec small_platform(std::uint64_t budget) {
  PlatformSpec p;
  p.peak_gops = 50;
  p.mem_bandwidth_bytes_per_s = 2e9;
  p.clock_hz = 1e8;
  p.onchip_bytes = 1 << 20;
  p.multiplier_budget = budget;
  return p;
}

}  // namespace

TEST(WorkloadOps, Examples) {
  EXPECT_EQ(workload_ops(512, 512, 1), 27140.0);
  EXPECT_EQ(workload_ops(1, 1, 1), 57.0);
  for (std::size_t n = 1; n < 10; ++n)
    EXPECT_EQ(workload_ops(64, 16, n + 1) - workload_ops(64, 16, n), 4.0 * (2 * 16 + 2 * 64 + 1));
}

TEST(InitiationInterval, Examples) {
  EXPECT_EQ(initiation_interval(512, 512, 1, 32, 1), 592.0);
  EXPECT_EQ(initiation_interval(512, 512, 1, 512, 512), 37.0);
  EXPECT_EQ(initiation_interval(10, 7, 1, 3, 2), 37.0 * 4);  // ceilings: R/tr -> 4
}

TEST(InitiationInterval, Errors) {
  EXPECT_THROW(initiation_interval(8, 8, 1, 0, 1), ConfigError);
  EXPECT_THROW(initiation_interval(8, 8, 1, 1, 0), ConfigError);
  EXPECT_THROW(initiation_interval(8, 8, 1, 9, 1), ConfigError);
  EXPECT_THROW(initiation_interval(8, 8, 1, 1, 9), ConfigError);
}

TEST(InitiationInterval, NonIncreasingInTiles) {
  for (std::size_t r : {7, 32, 50})
    for (std::size_t nz : {1, 5, 16})
      for (std::size_t n : {1, 3})
        for (std::size_t tr = 1; tr <= r; ++tr)
          for (std::size_t tc = 1; tc <= nz; ++tc) {
            const double ii = initiation_interval(r, nz, n, tr, tc);
            if (tr < r) {
              EXPECT_LE(initiation_interval(r, nz, n, tr + 1, tc), ii);
            }
            if (tc < nz) {
              EXPECT_LE(initiation_interval(r, nz, n, tr, tc + 1), ii);
            }
          }
}

TEST(Ctc, Examples) {
  EXPECT_DOUBLE_EQ(ctc(512, 512, 1), 27140.0 / 20496.0);
  EXPECT_NEAR(ctc(512, 512, 1), 1.3242, 1e-4);
  const double limit = (2.0 * 64 + 2.0 * 128 + 1) / (4.0 * (64 + 128 + 1));
  EXPECT_NEAR(ctc(128, 64, 1'000'000), limit, 1e-5 * limit);
}

TEST(Ctc, RisesAsNzShrinks) {
  double prev = 0.0;
  for (std::size_t nz = 512; nz >= 1; nz /= 2) {
    const double v = ctc(512, nz, 1);
    EXPECT_GT(v, prev);
    prev = v;
  }
}

// Closed forms against exact integer arithmetic on random tuples.
TEST(PerfModelProperty, MatchesExactArithmetic) {
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::int64_t r = 1 + static_cast<std::int64_t>(rng.below(4096));
    const std::int64_t nz = 1 + static_cast<std::int64_t>(rng.below(4096));
    const std::int64_t n = 1 + static_cast<std::int64_t>(rng.below(64));
    const std::int64_t tr = 1 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(r)));
    const std::int64_t tc = 1 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(nz)));
    const auto m = oracle::approx_model(r, nz, n, tr, tc);
    const auto ur = static_cast<std::size_t>(r), unz = static_cast<std::size_t>(nz), un = static_cast<std::size_t>(n);
    EXPECT_EQ(workload_ops(ur, unz, un), static_cast<double>(m.workload));
    EXPECT_EQ(memory_bytes(ur, unz, un), static_cast<double>(m.bytes));
    EXPECT_EQ(ctc(ur, unz, un), oracle::ratio(m.workload, m.bytes));
    EXPECT_EQ(initiation_interval(ur, unz, un, static_cast<std::size_t>(tr), static_cast<std::size_t>(tc)),
              static_cast<double>(m.ii));
  }
}

TEST(Attainable, Examples) {
  PlatformSpec p = small_platform(100);
  p.peak_gops = 1;  // 1e9 ops/s
  p.mem_bandwidth_bytes_per_s = 1e9;
  EXPECT_EQ(attainable(5e9, 10.0, p), 1e9);    // compute bound
  EXPECT_EQ(attainable(5e9, 0.5, p), 0.5e9);   // memory bound
  EXPECT_EQ(attainable(1e8, 10.0, p), 1e8);    // modelled perf
}

TEST(Attainable, NonDecreasingInRoofs) {
  PlatformSpec p = small_platform(100);
  double prev = 0.0;
  for (double bw = 1e8; bw < 1e12; bw *= 3) {
    p.mem_bandwidth_bytes_per_s = bw;
    const double a = attainable(3e10, 1.3, p);
    EXPECT_GE(a, prev);
    prev = a;
  }
  prev = 0.0;
  for (double peak = 0.1; peak < 1000; peak *= 3) {
    p.peak_gops = peak;
    const double a = attainable(3e10, 1.3, p);
    EXPECT_GE(a, prev);
    prev = a;
  }
}

TEST(Feasible, Examples) {
  PlatformSpec p = huge_platform();
  DesignPoint d;
  d.tr = 4;
  d.tc = 2;
  EXPECT_TRUE(feasible(d, 8, 16, p));
  p.multiplier_budget = 0;
  EXPECT_FALSE(feasible(d, 8, 16, p));
  p.multiplier_budget = 4 * (2 + 3 * 4) + 4;  // exactly the usage
  EXPECT_TRUE(feasible(d, 8, 16, p));
  p.multiplier_budget -= 1;
  EXPECT_FALSE(feasible(d, 8, 16, p));
  p.multiplier_budget = 1000;
  p.onchip_bytes = 4 * 16;
  EXPECT_TRUE(feasible(d, 8, 16, p));
  p.onchip_bytes -= 1;
  EXPECT_FALSE(feasible(d, 8, 16, p));
}

TEST(Baseline, Examples) {
  const auto e = baseline_estimate(2, 4, 2, 1);
  EXPECT_EQ(e.workload_ops, 138.0);
  EXPECT_EQ(e.ii_cycles, 37.0);
  EXPECT_EQ(baseline_estimate(512, 1024, 32, 1).bytes_per_timestep, 8'396'800.0);
}

TEST(Baseline, WorkloadDominatesFactoredAtFewTerms) {
  for (std::size_t r : {8, 64, 512})
    for (std::size_t c : {2 * r, 3 * r})
      for (std::size_t nz = 1; nz <= c; nz *= 2)
        for (std::size_t n : {1, 2}) EXPECT_GE(baseline_estimate(r, c, 1, 1).workload_ops, workload_ops(r, nz, n));
}

TEST(Baseline, PartialAtAllTilesEqualsFull) {
  for (std::size_t tr : {1, 3, 8, 64}) {
    const std::size_t tiles = ceil_div(64, tr);
    const auto full = baseline_estimate(64, 96, tr, 4);
    const auto part = baseline_estimate(64, 96, tr, 4, tiles);
    EXPECT_EQ(full.ii_cycles, part.ii_cycles);
    EXPECT_EQ(full.workload_ops, part.workload_ops);
    EXPECT_EQ(full.bytes_per_timestep, part.bytes_per_timestep);
  }
  EXPECT_THROW(baseline_estimate(64, 96, 8, 4, 9), ConfigError);
  EXPECT_THROW(baseline_estimate(64, 96, 8, 4, 0), ConfigError);
}

TEST(Baseline, PartialLatencyIncreasesWithTiles) {
  double prev = 0.0;
  for (std::size_t k = 1; k <= 8; ++k) {
    const double ii = baseline_estimate(64, 96, 8, 4, k).ii_cycles;
    EXPECT_GT(ii, prev);
    prev = ii;
  }
}

TEST(LatencySeconds, Examples) {
  PlatformSpec p = huge_platform();
  p.clock_hz = 100e6;
  EXPECT_DOUBLE_EQ(latency_seconds(592, p), 5.92e-6);
  EXPECT_DOUBLE_EQ(latency_seconds(2 * 592, p), 2 * latency_seconds(592, p));
  EXPECT_THROW(latency_seconds(0, p), ConfigError);
}

TEST(Roofline, DominanceHoldsForEveryEnumeratedPoint) {
  const auto p = small_platform(400);
  const auto res = dse(p, 40, 80, {1, 7, 40, 80}, 2, DseOptions{false, true});
  ASSERT_FALSE(res.space.empty());
  for (const auto& d : res.space) {
    EXPECT_LE(d.attainable_ops_per_s, p.peak_gops * 1e9);
    EXPECT_LE(d.attainable_ops_per_s, d.ctc_ops_per_byte * p.mem_bandwidth_bytes_per_s);
    EXPECT_LE(d.attainable_ops_per_s, d.perf_ops_per_s);
  }
}

TEST(Dse, UnconstrainedPicksLargestTiles) {
  const auto res = dse(huge_platform(), 48, 96, {1, 12, 96});
  for (const auto& ch : res.choices) {
    ASSERT_TRUE(ch.best);
    EXPECT_EQ(ch.best->ii_cycles, 37.0);
    // Among the II-minimal designs the smallest area wins.
    const auto expect = oracle::brute_force_dse(huge_platform(), 48, 96, static_cast<std::int64_t>(ch.nz), 1);
    EXPECT_EQ(ch.best->tr, expect->tr);
    EXPECT_EQ(ch.best->tc, expect->tc);
  }
}

TEST(Dse, MatchesBruteForceUnderTightBudget) {
  const auto p = small_platform(30);
  const auto res = dse(p, 40, 64, {1, 2, 5, 16});
  for (const auto& ch : res.choices) {
    const auto expect = oracle::brute_force_dse(p, 40, 64, static_cast<std::int64_t>(ch.nz), 1);
    ASSERT_EQ(ch.best.has_value(), expect.has_value());
    EXPECT_EQ(ch.best->tr, expect->tr);
    EXPECT_EQ(ch.best->tc, expect->tc);
    EXPECT_LE(multiplier_usage(ch.best->tr, ch.best->tc), 30u);
  }
}

TEST(DseProperty, MatchesBruteForceOnRandomPlatforms) {
  Rng rng(2);
  for (int trial = 0; trial < 60; ++trial) {
    PlatformSpec p;
    p.peak_gops = rng.uniform(0.1, 200.0);
    p.mem_bandwidth_bytes_per_s = rng.uniform(1e8, 2e10);
    p.clock_hz = rng.uniform(5e7, 3e8);
    p.onchip_bytes = 1 << 16;
    p.multiplier_budget = 5 + rng.below(600);
    const std::size_t r = 1 + rng.below(64);
    const std::size_t c = r + 1 + rng.below(64);
    const std::size_t nz = 1 + rng.below(std::min<std::size_t>(c, 64));  // grid <= 64 x 64
    const std::size_t n = 1 + rng.below(4);
    const auto res = dse(p, r, c, {nz}, n);
    const auto expect = oracle::brute_force_dse(p, static_cast<std::int64_t>(r), static_cast<std::int64_t>(c),
                                                static_cast<std::int64_t>(nz), static_cast<std::int64_t>(n));
    ASSERT_EQ(res.choices[0].best.has_value(), expect.has_value()) << "trial " << trial;
    if (expect) {
      EXPECT_EQ(res.choices[0].best->tr, expect->tr) << "trial " << trial;
      EXPECT_EQ(res.choices[0].best->tc, expect->tc) << "trial " << trial;
      EXPECT_EQ(res.choices[0].best->attainable_ops_per_s, expect->attainable);
    }
  }
}

TEST(Dse, ExhaustiveAgreesWithBruteForceAbove64) {
  const auto p = small_platform(500);
  const auto res = dse(p, 100, 200, {90}, 1, DseOptions{true, false});
  const auto expect = oracle::brute_force_dse(p, 100, 200, 90, 1);
  ASSERT_TRUE(res.choices[0].best && expect);
  EXPECT_EQ(res.choices[0].best->tr, expect->tr);
  EXPECT_EQ(res.choices[0].best->tc, expect->tc);
}

TEST(Dse, NoFeasibleDesign) {
  auto p = small_platform(4);  // the smallest design needs 4*(1+3)+1 = 17
  const auto res = dse(p, 8, 16, {2});
  EXPECT_FALSE(res.choices[0].best);
  p.multiplier_budget = 1000;
  p.onchip_bytes = 4 * 16 - 1;
  EXPECT_FALSE(dse(p, 8, 16, {2}).choices[0].best);
}

TEST(Dse, Errors) {
  EXPECT_THROW(dse(huge_platform(), 8, 16, {}), ConfigError);
  EXPECT_THROW(dse(huge_platform(), 8, 16, {17}), ConfigError);
  EXPECT_THROW(dse(PlatformSpec{}, 8, 16, {1}), ConfigError);
}

TEST(TileCandidates, FullRangeUpTo64AndThinnedAbove) {
  EXPECT_EQ(tile_candidates(5), (std::vector<std::size_t>{1, 2, 3, 4, 5}));
  EXPECT_EQ(tile_candidates(64).size(), 64u);
  for (std::size_t limit : {65, 100, 512, 1000, 4096}) {
    const auto t = tile_candidates(limit);
    EXPECT_LE(t.size(), 64u);
    EXPECT_TRUE(std::is_sorted(t.begin(), t.end()));
    EXPECT_EQ(t.front(), 1u);
    EXPECT_EQ(t.back(), limit);
    for (std::size_t pow2 = 1; pow2 <= limit; pow2 *= 2) EXPECT_TRUE(std::binary_search(t.begin(), t.end(), pow2));
    EXPECT_EQ(tile_candidates(limit, true).size(), limit);
  }
}

TEST(Dse, CalibrationPlatformPicksNarrowColumnTile) {
  const auto p = load_platform(std::string(ALSTM_SOURCE_DIR) + "/config/zc706_calibration.platform");
  const auto res = dse(p, 512, 1024, {512});
  ASSERT_TRUE(res.choices[0].best);
  const auto& d = *res.choices[0].best;
  EXPECT_EQ(d.tc, 1u);
  EXPECT_GT(d.tr, d.tc);
  EXPECT_EQ(d.tr, 32u);
}

TEST(BaselineDse, CalibrationBaselineIsSlowerThanFactored) {
  const auto p = load_platform(std::string(ALSTM_SOURCE_DIR) + "/config/zc706_calibration.platform");
  const auto base = baseline_dse(p, 512, 1024);
  ASSERT_TRUE(base);
  const auto res = dse(p, 512, 1024, {1, 64, 128, 256, 512});
  for (const auto& ch : res.choices) {
    ASSERT_TRUE(ch.best);
    EXPECT_GT(ch.best->attainable_ops_per_s, base->attainable_ops_per_s);
  }
}
