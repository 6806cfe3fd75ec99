#include "netmark/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

#include "netmark/rng.hpp"

namespace netmark {

Interval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (successes > trials) throw std::invalid_argument("successes exceed trials");
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2 * n)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom;
  const double lo = successes == 0 ? 0.0 : std::max(0.0, centre - half);
  const double hi = successes == trials ? 1.0 : std::min(1.0, centre + half);
  return {lo, hi};
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  const double n = static_cast<double>(x.size());
  if (x.empty()) return 0.0;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

Correlation spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
  Correlation c;
  c.n = x.size();
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  c.rho = pearson(rx, ry);
  if (c.n < 3 || c.rho == 0.0) return c;
  const double df = static_cast<double>(c.n) - 2;
  if (std::abs(c.rho) >= 1.0) {
    c.p_value = 0.0;
    return c;
  }
  const double t = c.rho * std::sqrt(df / (1 - c.rho * c.rho));
  boost::math::students_t dist(df);
  c.p_value = 2 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return c;
}

double paired_bootstrap_lower_bound(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b,
                                    std::size_t resamples, std::uint64_t seed, double confidence) {
  if (a.size() != b.size()) throw std::invalid_argument("bootstrap: unpaired samples");
  if (a.empty()) throw std::invalid_argument("bootstrap: empty sample");
  if (resamples == 0) throw std::invalid_argument("bootstrap: resamples must be >= 1");
  std::vector<int> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = static_cast<int>(a[i] != 0) - static_cast<int>(b[i] != 0);
  Rng rng(seed);
  std::vector<double> stats(resamples);
  for (auto& s : stats) {
    long sum = 0;
    for (std::size_t i = 0; i < diff.size(); ++i) sum += diff[uniform_below(rng, diff.size())];
    s = static_cast<double>(sum) / static_cast<double>(diff.size());
  }
  std::sort(stats.begin(), stats.end());
  const auto idx = static_cast<std::size_t>(std::floor((1.0 - confidence) * static_cast<double>(resamples)));
  return stats[std::min(idx, resamples - 1)];
}

}  // namespace netmark
