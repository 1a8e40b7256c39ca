#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace hmmforget::stats {

double mean(std::span<const double> xs);
// Unbiased sample variance; 0 for fewer than two values.
double variance(std::span<const double> xs);
double standard_error(std::span<const double> xs);
double median(std::vector<double> xs);
// Linear-interpolated quantile, q in [0, 1].
double quantile(std::vector<double> xs, double q);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  std::size_t points = 0;
};

// Ordinary least squares y = intercept + slope * x. Needs at least two distinct x.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

// Percentile bootstrap for var(b) - var(a), resampling each sample independently.
struct BootstrapInterval {
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};
BootstrapInterval bootstrap_variance_difference(std::span<const double> a,
                                                std::span<const double> b, int resamples,
                                                double confidence, std::uint64_t seed);

}  // namespace hmmforget::stats
