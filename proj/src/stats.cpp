#include "bfore/stats.hpp"

#include "bfore/errors.hpp"
#include "bfore/retinex.hpp"
#include "bfore/rng.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bfore {

std::vector<double> average_ranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractError("wilcoxon_signed_rank: samples differ in length");
  WilcoxonResult res;
  res.n_total = static_cast<int>(a.size());
  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (!std::isfinite(d)) throw ContractError("wilcoxon_signed_rank: non-finite difference");
    if (d > 0.0)
      ++res.wins_a;
    else if (d < 0.0)
      ++res.wins_b;
    else
      ++res.ties;
    if (d != 0.0) diffs.push_back(d);
  }
  res.n_used = static_cast<int>(diffs.size());
  if (diffs.empty()) {
    res.degenerate = true;
    return res;
  }

  std::vector<double> mags(diffs.size());
  std::transform(diffs.begin(), diffs.end(), mags.begin(), [](double d) { return std::abs(d); });
  const std::vector<double> ranks = average_ranks(mags);
  for (std::size_t i = 0; i < diffs.size(); ++i) (diffs[i] > 0.0 ? res.w_plus : res.w_minus) += ranks[i];

  const int n = res.n_used;
  if (n <= kWilcoxonExactMax) {
    // Doubled ranks are integers; count sign assignments by their positive-rank sum.
    std::vector<int> doubled(ranks.size());
    std::transform(ranks.begin(), ranks.end(), doubled.begin(), [](double r) { return static_cast<int>(std::lround(2.0 * r)); });
    const int total = std::accumulate(doubled.begin(), doubled.end(), 0);
    std::vector<double> count(static_cast<std::size_t>(total) + 1, 0.0);
    count[0] = 1.0;
    int reach = 0;
    for (int r : doubled) {
      for (int s = reach; s >= 0; --s) count[static_cast<std::size_t>(s + r)] += count[static_cast<std::size_t>(s)];
      reach += r;
    }
    const double all = std::ldexp(1.0, n);
    const int observed = static_cast<int>(std::lround(2.0 * res.w_plus));
    double upper = 0.0, lower = 0.0;
    for (int s = 0; s <= total; ++s) {
      if (s >= observed) upper += count[static_cast<std::size_t>(s)];
      if (s <= observed) lower += count[static_cast<std::size_t>(s)];
    }
    res.p_greater = upper / all;
    res.p_less = lower / all;
    res.exact = true;
  } else {
    double tie_term = 0.0;
    std::vector<double> sorted = ranks;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size();) {
      std::size_t j = i;
      while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i);
      tie_term += t * t * t - t;
      i = j;
    }
    const double nn = n;
    const double mean = nn * (nn + 1.0) / 4.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    const double sd = std::sqrt(var);
    const boost::math::normal_distribution<double> z;
    res.p_greater = boost::math::cdf(boost::math::complement(z, (res.w_plus - mean - 0.5) / sd));
    res.p_less = boost::math::cdf(z, (res.w_plus - mean + 0.5) / sd);
    res.exact = false;
  }
  res.p_greater = std::clamp(res.p_greater, 0.0, 1.0);
  res.p_less = std::clamp(res.p_less, 0.0, 1.0);
  res.p_two_sided = std::min(1.0, 2.0 * std::min(res.p_greater, res.p_less));
  return res;
}

SpearmanResult spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ContractError("spearman: samples differ in length");
  if (x.size() < 3) throw ContractError("spearman: need at least 3 pairs");
  SpearmanResult res;
  res.n = static_cast<int>(x.size());
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(res.n);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) {
    res.degenerate = true;
    return res;
  }
  res.rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  if (std::abs(res.rho) >= 1.0) {
    res.p = 0.0;
    return res;
  }
  const double df = n - 2.0;
  const double t = res.rho * std::sqrt(df / (1.0 - res.rho * res.rho));
  const boost::math::students_t_distribution<double> dist(df);
  res.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
  return res;
}

double bonferroni(double p, int k) {
  if (k < 1) throw ContractError("bonferroni: k must be positive");
  return std::min(1.0, static_cast<double>(k) * p);
}

double median(std::vector<double> v) {
  if (v.empty()) throw ContractError("median of empty sample");
  return percentile(std::move(v), 0.5);
}

MedianCi bootstrap_median_ci(std::span<const double> diffs, std::uint64_t seed, int resamples, double level) {
  if (diffs.empty()) throw ContractError("bootstrap_median_ci: empty sample");
  if (resamples < 1) throw ContractError("bootstrap_median_ci: resamples must be positive");
  MedianCi ci;
  ci.median = median({diffs.begin(), diffs.end()});
  Rng rng(derive_seed(seed, {0xB007ULL}));
  std::vector<double> medians(static_cast<std::size_t>(resamples));
  std::vector<double> sample(diffs.size());
  for (auto& m : medians) {
    for (auto& s : sample) s = diffs[rng.index(diffs.size())];
    m = median(sample);
  }
  const double tail = (1.0 - level) / 2.0;
  ci.lo = percentile(medians, tail);
  ci.hi = percentile(std::move(medians), 1.0 - tail);
  return ci;
}

} // namespace bfore
