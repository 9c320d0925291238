#pragma once

#include "bfore/image.hpp"

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string_view>

namespace bfore {

// ---------------------------------------------------------------------------
// Gaussian naturalness score

/// Center, width and weight of one Gaussian sub-score.
struct GnsTerm {
  double mu0;
  double sigma0;
  double weight;
};

/// Targets for the six image statistics, in order
/// entropy, average gradient, std dev, mean luminance, MSCN shape, clipping ratio.
struct GnsTargets {
  static constexpr int kTerms = 6;
  std::array<GnsTerm, kTerms> terms{{
      {7.0, 1.2, 0.30},
      {17.0, 8.0, 0.20},
      {40.0, 18.0, 0.10},
      {128.0, 35.0, 0.15},
      {2.0, 0.8, 0.15},
      {0.01, 0.03, 0.10},
  }};

  static GnsTargets defaults() { return {}; }
  static std::string_view term_name(int k);

  /// Throws ContractError unless weights sum to one and every width is positive.
  void validate() const;
};

/// Raw statistics of an image, all on the 0..255-equivalent scale where applicable.
struct ImageStatistics {
  double entropy = 0.0;
  double average_gradient = 0.0;
  double std_dev = 0.0;
  double mean = 0.0;
  double mscn_alpha = 0.0;
  double clipping_ratio = 0.0;
  bool mscn_degenerate = false;

  std::array<double, GnsTargets::kTerms> as_array() const {
    return {entropy, average_gradient, std_dev, mean, mscn_alpha, clipping_ratio};
  }
};

struct GnsScore {
  std::array<double, GnsTargets::kTerms> sub_scores{};
  double total = 0.0;
  ImageStatistics stats;
};

/// exp(-(x - mu0)^2 / (2 sigma0^2)).
inline double gaussian_score(double x, double mu0, double sigma0) {
  const double d = (x - mu0) / sigma0;
  return std::exp(-0.5 * d * d);
}

/// Scores precomputed statistics.
GnsScore gns_from_statistics(const ImageStatistics& stats, const GnsTargets& targets = {});

/// All six statistics on a single [0, 1] luminance plane.
ImageStatistics image_statistics(const Plane& gray);

/// No-reference score of an RGB (or gray) image, computed on its V channel.
/// There is deliberately no reference-image parameter.
GnsScore gns(const ImageBuffer& img, const GnsTargets& targets = {});

// ---------------------------------------------------------------------------
// Individual statistics. Inputs are [0, 1] planes.

/// Shannon entropy in bits of the 256-bin histogram of quantised samples.
double entropy(const Plane& gray);

/// 256-bin histogram of round-half-up quantised samples.
std::array<double, 256> histogram256(const Plane& gray);

/// Mean of sqrt((dx^2 + dy^2) / 2) over the (h-1) x (w-1) forward-difference grid, x255.
double average_gradient(const Plane& gray);

/// Population standard deviation, x255.
double std_dev(const Plane& gray);

/// Mean, x255.
double mean_luminance(const Plane& gray);

/// Fraction of samples with 255 v <= 5 or 255 v >= 250.
double clipping_ratio(const Plane& gray);

/// Mean-subtracted contrast-normalised coefficients with a 7x7 Gaussian
/// window (sigma 7/6) and C = 1/255.
Plane mscn(const Plane& gray);

/// MSCN coefficients together with the local deviation map they were divided by (minus C).
struct MscnField {
  Plane coeffs;
  Plane sigma;
};
MscnField mscn_field(const Plane& gray);

struct ShapeFit {
  double alpha = 0.0;
  bool degenerate = false;
};

/// Generalised Gaussian shape by moment-ratio matching of E[x^2] / E[|x|]^2
/// on a 0.001-step lookup grid over [0.2, 10], linearly interpolated.
/// An all-zero sample reports alpha = 10 with the degenerate flag set.
ShapeFit ggd_shape(std::span<const double> samples);

/// GGD shape of the MSCN coefficients. Needs at least 16 x 16 samples.
ShapeFit mscn_alpha(const Plane& gray);

/// Asymmetric generalised Gaussian fit (shape, mean, left variance, right variance).
struct AggdFit {
  double alpha = 0.0;
  double mean = 0.0;
  double left_var = 0.0;
  double right_var = 0.0;
};
AggdFit aggd_fit(std::span<const double> samples);

// ---------------------------------------------------------------------------
// Full-reference metrics

/// Mean squared error on the 0..255 scale over all channels.
double mse(const ImageBuffer& a, const ImageBuffer& b);

inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

/// 10 log10(255^2 / MSE). Identical images give kInfinitePsnr.
double psnr(const ImageBuffer& a, const ImageBuffer& b);

/// Mean of the SSIM map with an 11x11 Gaussian window (sigma 1.5, K1 = 0.01,
/// K2 = 0.03), reflect-padded, on Rec.601 luma scaled to 0..255.
double ssim(const ImageBuffer& a, const ImageBuffer& b);

/// SSIM between two gray planes in [0, 1].
double ssim_plane(const Plane& a, const Plane& b);

} // namespace bfore
