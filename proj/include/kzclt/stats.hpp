#pragma once
// Small statistics helpers shared by the estimators and the test suites.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "kzclt/rng.hpp"

namespace kzclt {

inline double mean(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("mean of empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// Unbiased sample variance (n - 1 denominator).
inline double variance(const std::vector<double>& xs) {
  if (xs.size() < 2) throw std::invalid_argument("variance needs n >= 2");
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

inline double median(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("median of empty sample");
  const std::size_t n = xs.size();
  std::sort(xs.begin(), xs.end());
  if (n % 2 == 1) return xs[n / 2];
  return 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

inline double quantile(std::vector<double> xs, double p) {
  if (xs.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(xs.begin(), xs.end());
  const double pos = p * static_cast<double>(xs.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * xs[lo] + w * xs[hi];
}

inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Kolmogorov-Smirnov distance between the empirical law of xs and the
// N(mu, sigma^2) distribution.
inline double ks_distance_normal(std::vector<double> xs, double mu, double sigma) {
  if (xs.empty()) throw std::invalid_argument("ks of empty sample");
  if (!(sigma > 0.0)) {
    // degenerate reference: distance is the empirical mass away from mu
    std::size_t off = 0;
    for (double x : xs)
      if (x != mu) ++off;
    return static_cast<double>(off) / static_cast<double>(xs.size());
  }
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = std_normal_cdf((xs[i] - mu) / sigma);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

// Two-sample KS distance.
inline double ks_distance_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks of empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

// Percentile bootstrap CI for a statistic given as a callable on a sample.
template <typename Stat>
std::pair<double, double> bootstrap_ci(const std::vector<double>& xs, Stat stat,
                                       int resamples, double level, Rng& rng) {
  if (xs.empty()) throw std::invalid_argument("bootstrap of empty sample");
  std::vector<double> stats(resamples);
  std::vector<double> draw(xs.size());
  for (int r = 0; r < resamples; ++r) {
    for (std::size_t i = 0; i < xs.size(); ++i) draw[i] = xs[rng.below(xs.size())];
    stats[r] = stat(draw);
  }
  const double alpha = 0.5 * (1.0 - level);
  return {quantile(stats, alpha), quantile(stats, 1.0 - alpha)};
}

// Least squares fit y ~ a * x + b.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_line needs matched samples, n >= 2");
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line with constant x");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

// Chi-square statistic against equal bin probabilities.
inline double chi_square_uniform(const std::vector<int>& counts) {
  double total = 0.0;
  for (int c : counts) total += c;
  if (counts.empty() || total == 0.0) throw std::invalid_argument("empty histogram");
  const double expect = total / static_cast<double>(counts.size());
  double stat = 0.0;
  for (int c : counts) stat += (c - expect) * (c - expect) / expect;
  return stat;
}

// Block-averaged standard error of the mean for a correlated series: split
// into nblocks contiguous blocks, use the block means as an iid proxy.
inline double block_se(const std::vector<double>& xs, int nblocks) {
  if (static_cast<int>(xs.size()) < 2 * nblocks)
    throw std::invalid_argument("block_se: series too short for block count");
  const std::size_t bs = xs.size() / static_cast<std::size_t>(nblocks);
  std::vector<double> bm(nblocks);
  for (int b = 0; b < nblocks; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < bs; ++i) s += xs[static_cast<std::size_t>(b) * bs + i];
    bm[b] = s / static_cast<double>(bs);
  }
  return std::sqrt(variance(bm) / static_cast<double>(nblocks));
}

}  // namespace kzclt
