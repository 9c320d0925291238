#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace bfore {

/// Largest number of non-zero differences handled by the exact null distribution.
inline constexpr int kWilcoxonExactMax = 25;

struct WilcoxonResult {
  int n_total = 0;
  /// Pairs left after dropping zero differences.
  int n_used = 0;
  int wins_a = 0;
  int wins_b = 0;
  int ties = 0;
  /// Sum of ranks of positive differences (a > b).
  double w_plus = 0.0;
  double w_minus = 0.0;
  /// P(W+ >= observed) under H0: a tends to exceed b.
  double p_greater = 1.0;
  double p_less = 1.0;
  double p_two_sided = 1.0;
  bool exact = true;
  /// All differences were zero.
  bool degenerate = false;
};

/// Paired signed-rank test on a - b. Zero differences are dropped; tied magnitudes
/// get average ranks. Exact null distribution for n_used <= 25, otherwise a normal
/// approximation with tie and continuity corrections.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

/// Tie-averaged ranks starting at 1.
std::vector<double> average_ranks(std::span<const double> x);

struct SpearmanResult {
  int n = 0;
  double rho = 0.0;
  /// Two-sided, from the t approximation with n - 2 degrees of freedom.
  double p = 1.0;
  /// One of the inputs has no rank variance; rho is reported as 0.
  bool degenerate = false;
};

SpearmanResult spearman(std::span<const double> x, std::span<const double> y);

/// min(1, k p).
double bonferroni(double p, int k);

double median(std::vector<double> v);

struct MedianCi {
  double median = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Percentile-bootstrap confidence interval for the median of `diffs`.
MedianCi bootstrap_median_ci(std::span<const double> diffs, std::uint64_t seed, int resamples = 10000,
                             double level = 0.95);

} // namespace bfore
