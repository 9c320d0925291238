#include "bfore/quality.hpp"

#include "bfore/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace bfore {

std::string_view GnsTargets::term_name(int k) {
  static constexpr std::string_view names[kTerms] = {"entropy", "average_gradient", "std_dev",
                                                     "mean",    "mscn_alpha",       "clipping_ratio"};
  return names[k];
}

void GnsTargets::validate() const {
  double sum = 0.0;
  for (const auto& t : terms) {
    if (!(t.sigma0 > 0.0)) throw ContractError("GnsTargets: every sigma0 must be positive");
    if (t.weight < 0.0) throw ContractError("GnsTargets: weights must be non-negative");
    sum += t.weight;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ContractError("GnsTargets: weights must sum to 1, got " + std::to_string(sum));
}

// ---------------------------------------------------------------------------
// Histogram statistics

std::array<double, 256> histogram256(const Plane& gray) {
  std::array<double, 256> hist{};
  for (Eigen::Index i = 0; i < gray.size(); ++i) hist[quantize(gray(i))] += 1.0;
  return hist;
}

double entropy(const Plane& gray) {
  const auto hist = histogram256(gray);
  const double n = static_cast<double>(gray.size());
  double h = 0.0;
  for (double c : hist) {
    if (c > 0.0) {
      const double p = c / n;
      h -= p * std::log2(p);
    }
  }
  return h;
}

double average_gradient(const Plane& gray) {
  const Eigen::Index rows = gray.rows();
  const Eigen::Index cols = gray.cols();
  if (rows < 2 || cols < 2) throw ContractError("average_gradient: need at least 2x2 samples");
  const auto base = gray.topLeftCorner(rows - 1, cols - 1);
  const auto dx = gray.block(0, 1, rows - 1, cols - 1) - base;
  const auto dy = gray.block(1, 0, rows - 1, cols - 1) - base;
  return 255.0 * ((dx.square() + dy.square()) / 2.0).sqrt().mean();
}

double std_dev(const Plane& gray) {
  const double m = gray.mean();
  return 255.0 * std::sqrt((gray - m).square().mean());
}

double mean_luminance(const Plane& gray) { return 255.0 * gray.mean(); }

double clipping_ratio(const Plane& gray) {
  const auto scaled = gray * 255.0;
  const auto clipped = (scaled <= 5.0) || (scaled >= 250.0);
  return static_cast<double>(clipped.count()) / static_cast<double>(gray.size());
}

// ---------------------------------------------------------------------------
// MSCN and distribution fits

namespace {

std::vector<double> fixed_gaussian_taps(int radius, double sigma) {
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  for (int k = -radius; k <= radius; ++k)
    taps[static_cast<std::size_t>(k + radius)] = std::exp(-static_cast<double>(k * k) / (2.0 * sigma * sigma));
  const double sum = std::accumulate(taps.begin(), taps.end(), 0.0);
  for (double& t : taps) t /= sum;
  return taps;
}

// r(alpha) = Gamma(1/a) Gamma(3/a) / Gamma(2/a)^2, tabulated on a 0.001 grid.
struct RatioTable {
  static constexpr double kMin = 0.2;
  static constexpr double kMax = 10.0;
  static constexpr double kStep = 0.001;
  std::vector<double> alpha;
  std::vector<double> ratio;

  RatioTable() {
    const auto n = static_cast<std::size_t>(std::llround((kMax - kMin) / kStep)) + 1;
    alpha.resize(n);
    ratio.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double a = kMin + kStep * static_cast<double>(i);
      alpha[i] = a;
      ratio[i] = std::exp(std::lgamma(1.0 / a) + std::lgamma(3.0 / a) - 2.0 * std::lgamma(2.0 / a));
    }
  }

  // Inverts the (decreasing) ratio curve with linear interpolation between grid points.
  double invert(double rho) const {
    if (rho >= ratio.front()) return kMin;
    if (rho <= ratio.back()) return kMax;
    // First index whose ratio drops to rho or below.
    const auto it = std::lower_bound(ratio.begin(), ratio.end(), rho, [](double r, double v) { return r > v; });
    const auto hi = static_cast<std::size_t>(it - ratio.begin());
    const std::size_t lo = hi - 1;
    const double t = (ratio[lo] - rho) / (ratio[lo] - ratio[hi]);
    return alpha[lo] + t * (alpha[hi] - alpha[lo]);
  }
};

const RatioTable& ratio_table() {
  static const RatioTable table;
  return table;
}

} // namespace

MscnField mscn_field(const Plane& gray) {
  static const std::vector<double> taps = fixed_gaussian_taps(3, 7.0 / 6.0);
  const Plane mu = filter_separable(gray, taps);
  const Plane second = filter_separable(gray.square(), taps);
  Plane sigma = (second - mu.square()).abs().sqrt();
  Plane coeffs = (gray - mu) / (sigma + 1.0 / 255.0);
  return {std::move(coeffs), std::move(sigma)};
}

Plane mscn(const Plane& gray) { return mscn_field(gray).coeffs; }

ShapeFit ggd_shape(std::span<const double> samples) {
  if (samples.empty()) return {RatioTable::kMax, true};
  double sum_abs = 0.0;
  double sum_sq = 0.0;
  for (double x : samples) {
    sum_abs += std::abs(x);
    sum_sq += x * x;
  }
  const double n = static_cast<double>(samples.size());
  const double mean_abs = sum_abs / n;
  if (!(mean_abs > 0.0)) return {RatioTable::kMax, true};
  const double rho = (sum_sq / n) / (mean_abs * mean_abs);
  return {ratio_table().invert(rho), false};
}

ShapeFit mscn_alpha(const Plane& gray) {
  if (gray.rows() < 16 || gray.cols() < 16) throw ContractError("mscn_alpha: image must be at least 16x16");
  const Plane coeffs = mscn(gray);
  return ggd_shape(std::span<const double>(coeffs.data(), static_cast<std::size_t>(coeffs.size())));
}

AggdFit aggd_fit(std::span<const double> samples) {
  double left_sq = 0.0, right_sq = 0.0, sum_abs = 0.0, sum_sq = 0.0;
  std::size_t left_n = 0, right_n = 0;
  for (double x : samples) {
    if (x < 0.0) {
      left_sq += x * x;
      ++left_n;
    } else if (x > 0.0) {
      right_sq += x * x;
      ++right_n;
    }
    sum_abs += std::abs(x);
    sum_sq += x * x;
  }
  if (samples.empty() || !(sum_sq > 0.0)) return {RatioTable::kMax, 0.0, 0.0, 0.0};

  const double n = static_cast<double>(samples.size());
  const double left_std = left_n > 0 ? std::sqrt(left_sq / static_cast<double>(left_n)) : 0.0;
  const double right_std = right_n > 0 ? std::sqrt(right_sq / static_cast<double>(right_n)) : 0.0;
  const double tiny = 1e-12;
  const double gamma_hat = std::max(left_std, tiny) / std::max(right_std, tiny);
  const double r_hat = (sum_abs / n) * (sum_abs / n) / (sum_sq / n);
  const double g2 = gamma_hat * gamma_hat;
  const double r_norm = r_hat * (g2 * gamma_hat + 1.0) * (gamma_hat + 1.0) / ((g2 + 1.0) * (g2 + 1.0));

  // The AGGD ratio Gamma(2/a)^2 / (Gamma(1/a) Gamma(3/a)) is the reciprocal of the GGD one.
  const double alpha = ratio_table().invert(1.0 / r_norm);
  const double g1 = std::tgamma(1.0 / alpha);
  const double g3 = std::tgamma(3.0 / alpha);
  const double g2a = std::tgamma(2.0 / alpha);
  const double scale = std::sqrt(g1 / g3);
  const double mean = (right_std * scale - left_std * scale) * g2a / g1;
  return {alpha, mean, left_std * left_std, right_std * right_std};
}

// ---------------------------------------------------------------------------
// GNS

ImageStatistics image_statistics(const Plane& gray) {
  ImageStatistics s;
  s.entropy = entropy(gray);
  s.average_gradient = average_gradient(gray);
  s.std_dev = std_dev(gray);
  s.mean = mean_luminance(gray);
  const ShapeFit fit = mscn_alpha(gray);
  s.mscn_alpha = fit.alpha;
  s.mscn_degenerate = fit.degenerate;
  s.clipping_ratio = clipping_ratio(gray);
  return s;
}

GnsScore gns_from_statistics(const ImageStatistics& stats, const GnsTargets& targets) {
  GnsScore score;
  score.stats = stats;
  const auto values = stats.as_array();
  for (int k = 0; k < GnsTargets::kTerms; ++k) {
    const auto& t = targets.terms[static_cast<std::size_t>(k)];
    const double phi = gaussian_score(values[static_cast<std::size_t>(k)], t.mu0, t.sigma0);
    score.sub_scores[static_cast<std::size_t>(k)] = phi;
    score.total += t.weight * phi;
  }
  return score;
}

GnsScore gns(const ImageBuffer& img, const GnsTargets& targets) {
  if (img.empty()) throw ContractError("gns: empty image");
  if (img.colorspace() == ColorSpace::HSV) throw ContractError("gns: expected RGB or GRAY image");
  return gns_from_statistics(image_statistics(img.value()), targets);
}

// ---------------------------------------------------------------------------
// Full-reference metrics

namespace {

void require_same_shape(const ImageBuffer& a, const ImageBuffer& b, std::string_view op) {
  if (a.width() != b.width() || a.height() != b.height() || a.channels() != b.channels()) {
    throw ContractError(std::string(op) + ": images differ in shape");
  }
}

} // namespace

double mse(const ImageBuffer& a, const ImageBuffer& b) {
  require_same_shape(a, b, "mse");
  double sum = 0.0;
  for (int c = 0; c < a.channels(); ++c) sum += ((a.channel(c) - b.channel(c)) * 255.0).square().sum();
  return sum / (static_cast<double>(a.pixel_count()) * a.channels());
}

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
  const double e = mse(a, b);
  if (e == 0.0) return kInfinitePsnr;
  return 10.0 * std::log10(255.0 * 255.0 / e);
}

double ssim_plane(const Plane& a, const Plane& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ContractError("ssim: planes differ in shape");
  static const std::vector<double> taps = fixed_gaussian_taps(5, 1.5);
  const double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  const double c2 = (0.03 * 255.0) * (0.03 * 255.0);
  const Plane x = a * 255.0;
  const Plane y = b * 255.0;
  const Plane mx = filter_separable(x, taps);
  const Plane my = filter_separable(y, taps);
  const Plane sxx = filter_separable(x.square(), taps) - mx.square();
  const Plane syy = filter_separable(y.square(), taps) - my.square();
  const Plane sxy = filter_separable(x * y, taps) - mx * my;
  const Plane map = ((2.0 * mx * my + c1) * (2.0 * sxy + c2)) /
                    ((mx.square() + my.square() + c1) * (sxx + syy + c2));
  return map.mean();
}

double ssim(const ImageBuffer& a, const ImageBuffer& b) {
  require_same_shape(a, b, "ssim");
  return ssim_plane(a.luma(), b.luma());
}

} // namespace bfore
