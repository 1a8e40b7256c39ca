#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "hmmforget/parallel.hpp"
#include "hmmforget/rng.hpp"
#include "hmmforget/stats.hpp"

using namespace hmmforget;

TEST(Stats, MomentsAndQuantiles) {
  std::vector<double> xs{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(stats::mean(xs), 2.5);
  EXPECT_DOUBLE_EQ(stats::variance(xs), 5.0 / 3);
  EXPECT_DOUBLE_EQ(stats::standard_error(xs), std::sqrt(5.0 / 12));
  EXPECT_DOUBLE_EQ(stats::median(xs), 2.5);
  EXPECT_DOUBLE_EQ(stats::quantile(xs, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(stats::quantile(xs, 1.0), 4.0);
  std::vector<double> one{7};
  EXPECT_EQ(stats::variance(one), 0.0);
}

TEST(Stats, LeastSquaresRecoversLine) {
  std::vector<double> x, y;
  for (int i = 0; i < 20; ++i) {
    x.push_back(i);
    y.push_back(3.0 - 0.25 * i);
  }
  auto fit = stats::least_squares(x, y);
  EXPECT_NEAR(fit.slope, -0.25, 1e-14);
  EXPECT_NEAR(fit.intercept, 3.0, 1e-13);
  EXPECT_NEAR(fit.slope_stderr, 0.0, 1e-12);
  std::vector<double> flat{1, 1};
  EXPECT_THROW(stats::least_squares(flat, flat), std::invalid_argument);
}

TEST(Stats, BootstrapSeparatesVariances) {
  Rng rng(1);
  std::vector<double> wide, narrow;
  for (int i = 0; i < 64; ++i) {
    wide.push_back(rng.uniform() * 10);
    narrow.push_back(rng.uniform());
  }
  auto ci = stats::bootstrap_variance_difference(wide, narrow, 2000, 0.95, 3);
  EXPECT_LT(ci.upper, 0.0);
  EXPECT_LE(ci.lower, ci.estimate);
  auto again = stats::bootstrap_variance_difference(wide, narrow, 2000, 0.95, 3);
  EXPECT_EQ(ci.upper, again.upper);
}

TEST(Rng, SeedsAndDraws) {
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  Rng c(9);
  std::vector<double> w{0.0, 1.0, 0.0, 3.0};
  int counts[4] = {0, 0, 0, 0};
  for (int i = 0; i < 40000; ++i) ++counts[c.categorical(w)];
  EXPECT_EQ(counts[0], 0);
  EXPECT_EQ(counts[2], 0);
  EXPECT_NEAR(counts[3] / 40000.0, 0.75, 0.01);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(c.below(7), 7u);
  }
}

TEST(Parallel, FillsEverySlotAndRethrows) {
  std::vector<int> out(1000, -1);
  parallel_for(out.size(), [&](std::size_t i) { out[i] = static_cast<int>(i * i % 97); });
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], static_cast<int>(i * i % 97));
  EXPECT_THROW(parallel_for(10, [](std::size_t i) {
                 if (i == 3) throw std::runtime_error("boom");
               }),
               std::runtime_error);
  EXPECT_GE(worker_count(), 1u);
}
