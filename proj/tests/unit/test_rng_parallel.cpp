#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "parallel.hpp"
#include "rng.hpp"

using namespace neckcalib;

TEST(CounterRng, ReplaysFromKeyAndCounter) {
  CounterRng a(12345);
  std::vector<std::uint64_t> first;
  for (int i = 0; i < 10; ++i) first.push_back(a());
  CounterRng b(12345);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(b(), first[static_cast<std::size_t>(i)]);
  CounterRng c(12345, 5);
  for (int i = 5; i < 10; ++i) EXPECT_EQ(c(), first[static_cast<std::size_t>(i)]);
}

TEST(CounterRng, UniformInUnitInterval) {
  CounterRng rng(7);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000, 0.5, 0.01);
}

TEST(CounterRng, NormalMoments) {
  CounterRng rng(8);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(StreamFor, DistinctIndicesGiveDistinctStreams) {
  std::set<std::uint64_t> firsts;
  for (std::uint64_t i = 0; i < 10000; ++i) firsts.insert(stream_for(42, i)());
  EXPECT_EQ(firsts.size(), 10000u);
  EXPECT_NE(stream_for(42, 0)(), stream_for(43, 0)());
  EXPECT_NE(stream_for(42, 3, 0)(), stream_for(42, 3, 1)());
  EXPECT_EQ(stream_for(42, 3, 1)(), stream_for(42, 3, 1)());
}

TEST(ParallelFor, ResultsIndependentOfThreadCount) {
  auto compute = [](unsigned threads) {
    std::vector<double> out(1000);
    parallel_for(out.size(), threads, [&](std::size_t i) {
      CounterRng rng = stream_for(9, i);
      out[i] = rng.normal() + rng.uniform();
    });
    return out;
  };
  const auto one = compute(1);
  for (unsigned t : {2u, 3u, 4u, 7u, 0u}) EXPECT_EQ(compute(t), one);
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(517);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i].fetch_add(1); });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  parallel_for(0, 4, [&](std::size_t) { FAIL(); });
}

TEST(ParallelFor, RethrowsLowestBlockException) {
  try {
    parallel_for(100, 4, [](std::size_t i) {
      if (i == 10) throw std::runtime_error("ten");
      if (i == 90) throw std::runtime_error("ninety");
    });
    FAIL() << "expected an exception";
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "ten");
  }
}
