#pragma once

#include "bfore/image.hpp"

#include <Eigen/Core>

#include <array>
#include <vector>

namespace bfore {

/// Offset added inside every logarithm: one 8-bit quantisation step.
inline constexpr double kLogEpsilon = 1.0 / 255.0;

/// Multi-scale Retinex with color restoration parameters (the 9-dim BOA phase).
struct MsrcrParams {
  std::array<double, 3> sigma{15.0, 80.0, 250.0};
  /// Raw weights; renormalised to sum to one when applied.
  std::array<double, 3> weight{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  /// Color restoration gain on the 80..150 scale; divided by 100 when applied.
  double mu = 125.0;
  double eta = 125.0;
  double alpha_blend = 1.0;

  static constexpr int kDim = 9;

  static MsrcrParams defaults() { return {}; }
  static Eigen::VectorXd lower_bounds();
  static Eigen::VectorXd upper_bounds();

  Eigen::VectorXd to_vector() const;
  static MsrcrParams from_vector(const Eigen::VectorXd& v);

  /// Weights divided by their sum.
  std::array<double, 3> normalized_weights() const;

  /// Throws ContractError if any field lies outside its search bounds.
  void validate() const;

  bool operator==(const MsrcrParams&) const = default;
};

/// Linear-interpolated percentile, q in [0, 1].
double percentile(std::vector<double> values, double q);

/// Single-scale Retinex: log(I + eps) - log(G_sigma * I + eps).
Plane ssr(const Plane& chan, double sigma);

/// Weighted sum of three SSR maps with renormalised weights.
Plane msr_channel(const Plane& chan, const MsrcrParams& params);

/// Per-channel MSR log maps of an RGB image.
std::vector<Plane> msr(const ImageBuffer& img, const MsrcrParams& params);

/// Maps the [p1, p99] range of a log-domain map linearly onto [0, 1] and clamps.
/// A degenerate map (p1 == p99) becomes constant 0.5.
Plane normalize_stretch(const Plane& map);

/// Color restoration factor for channel j: mu/100 * log(eta * (I_j + eps) / (sum I + 3 eps)).
std::vector<Plane> color_restoration(const ImageBuffer& img, const MsrcrParams& params);

/// The stretched MSRCR image before blending (alpha_blend treated as 1).
ImageBuffer msrcr_unblended(const ImageBuffer& img, const MsrcrParams& params);

/// Full MSRCR: alpha_blend * stretch(C * R_MSR) + (1 - alpha_blend) * input.
ImageBuffer msrcr(const ImageBuffer& img, const MsrcrParams& params);

/// Plain MSR followed by the same per-channel stretch (no color factor).
ImageBuffer msr_image(const ImageBuffer& img, const MsrcrParams& params);

} // namespace bfore
