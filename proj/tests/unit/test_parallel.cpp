#include <gtest/gtest.h>

#include <atomic>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "nvpm/parallel.hpp"

using nvpm::pairwise_sum;
using nvpm::parallel_for;

TEST(ParallelFor, VisitsEveryIndexOnce) {
  for (unsigned workers : {0u, 1u, 2u, 4u, 16u}) {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), workers, [&](std::size_t i) { hits[i].fetch_add(1); });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
  parallel_for(0, 4, [](std::size_t) { FAIL(); });
}

TEST(ParallelFor, RethrowsLowestFailingIndex) {
  for (unsigned workers : {1u, 3u, 8u}) {
    try {
      parallel_for(200, workers, [](std::size_t i) {
        if (i == 17 || i == 150) throw std::runtime_error(std::to_string(i));
      });
      FAIL() << "no exception";
    } catch (const std::runtime_error& e) {
      EXPECT_STREQ(e.what(), "17");
    }
  }
}

TEST(PairwiseSum, AccurateAndOrderDefinedByLength) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(100001);
  for (auto& x : v) x = u(rng);
  long double ref = 0.0L;
  for (double x : v) ref += x;
  EXPECT_NEAR(pairwise_sum(v), static_cast<double>(ref), 1e-10);
  EXPECT_EQ(pairwise_sum(std::vector<double>{}), 0.0);
  EXPECT_EQ(pairwise_sum(std::vector<double>{1.5}), 1.5);
}
