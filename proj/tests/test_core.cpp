#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "ipwm/core.hpp"
#include "ipwm/parallel.hpp"
#include "ipwm/rng.hpp"

using namespace ipwm;

TEST(Core, ExpitLogitRoundTrip) {
  for (double x : {-30.0, -5.0, -0.3, 0.0, 0.7, 4.0, 15.0}) EXPECT_NEAR(logit(expit(x)), x, 1e-8);
  EXPECT_DOUBLE_EQ(expit(0.0), 0.5);
  EXPECT_GE(expit(-800.0), 0.0);
  EXPECT_EQ(expit(800.0), 1.0);
}

TEST(Core, ClampAndBernoulliMass) {
  EXPECT_EQ(clamp_prob(0.0), kProbFloor);
  EXPECT_EQ(clamp_prob(1.0), 1.0 - kProbFloor);
  EXPECT_EQ(clamp_prob(0.3), 0.3);
  EXPECT_DOUBLE_EQ(bern(0.3, 1), 0.3);
  EXPECT_DOUBLE_EQ(bern(0.3, 0), 0.7);
}

TEST(Core, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 12345.678, 1e300}) EXPECT_EQ(std::stod(format_double(v)), v);
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(Core, SingularDesignErrorCarriesColumn) {
  const SingularDesignError e("Z:B", 3);
  EXPECT_EQ(e.column(), "Z:B");
  EXPECT_EQ(e.index(), 3u);
  EXPECT_NE(std::string(e.what()).find("Z:B"), std::string::npos);
}

TEST(Rng, MixSeedIsDeterministicAndIndexSensitive) {
  EXPECT_EQ(mix_seed(1, {2, 3}), mix_seed(1, {2, 3}));
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 50; ++i)
    for (std::uint64_t j = 0; j < 50; ++j) seen.insert(mix_seed(7, {i, j}));
  EXPECT_EQ(seen.size(), 2500u);
  EXPECT_NE(mix_seed(7, {1, 2}), mix_seed(7, {2, 1}));
  EXPECT_NE(mix_seed(7, {0}), mix_seed(7, {}));
}

TEST(Rng, UniformMomentsAndRange) {
  Rng rng = make_rng(11, {});
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = uniform01(rng);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    s += u;
    s2 += u * u;
  }
  EXPECT_NEAR(s / n, 0.5, 0.005);
  EXPECT_NEAR(s2 / n - (s / n) * (s / n), 1.0 / 12.0, 0.002);
}

TEST(Rng, UniformIndexCoversRangeEvenly) {
  Rng rng = make_rng(5, {});
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[uniform_index(rng, 7)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 450);
}

TEST(Rng, NormalMoments) {
  Rng rng = make_rng(3, {});
  NormalSampler normal;
  double s = 0.0, s2 = 0.0, s4 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = normal(rng);
    s += x;
    s2 += x * x;
    s4 += x * x * x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.015);
  EXPECT_NEAR(s4 / n, 3.0, 0.08);
}

TEST(Rng, StreamsReproduce) {
  Rng a = make_rng(9, {4, 2});
  Rng b = make_rng(9, {4, 2});
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a(), b());
}

TEST(Parallel, EverySlotVisitedOnce) {
  for (int threads : {1, 3, 0}) {
    std::vector<std::atomic<int>> hits(257);
    parallel_for(hits.size(), threads, [&](std::size_t i) { ++hits[i]; });
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
}

TEST(Parallel, RethrowsWorkerException) {
  EXPECT_THROW(parallel_for(10, 2,
                            [](std::size_t i) {
                              if (i == 4) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}
