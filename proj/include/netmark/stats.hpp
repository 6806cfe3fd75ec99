#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace netmark {

struct Interval {
  double lo = 0;
  double hi = 0;
};

/// Wilson score interval for k successes in n trials; [0, 1] when n == 0.
Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

/// Ranks starting at 1, ties sharing their average rank.
std::vector<double> average_ranks(std::span<const double> values);

struct Correlation {
  double rho = 0;
  /// Two-sided p-value from the t approximation with n - 2 degrees of freedom.
  double p_value = 1;
  std::size_t n = 0;
};

double pearson(std::span<const double> x, std::span<const double> y);
/// Pearson correlation of average ranks. rho is 0 (p = 1) when either side is constant.
Correlation spearman(std::span<const double> x, std::span<const double> y);

/// Percentile-bootstrap lower bound (one-sided at `confidence`) of
/// mean(a) - mean(b) over paired 0/1 outcomes, resampling pairs.
double paired_bootstrap_lower_bound(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b,
                                    std::size_t resamples, std::uint64_t seed, double confidence = 0.95);

}  // namespace netmark
