#pragma once

#include "bfore/image.hpp"
#include "bfore/retinex.hpp"

#include <Eigen/Core>

#include <functional>
#include <string_view>

namespace bfore {

/// LAGC, ANLM and color parameters (the 7-dim FA phase).
/// sigma_min and h are expressed on the 0..255 scale.
struct LagcAnlmParams {
  double gamma0 = 1.0;
  int kernel_size = 9;
  double sigma_min = 6.0;
  double h = 10.0;
  int block_size = 9;
  double sat_scale = 1.0;
  double r = 1.25;

  static constexpr int kDim = 7;

  /// gamma0 = 1 and the midpoint of every other search range (odd sizes rounded up).
  static LagcAnlmParams defaults() { return {}; }
  static Eigen::VectorXd lower_bounds();
  static Eigen::VectorXd upper_bounds();

  Eigen::VectorXd to_vector() const;
  /// Decodes continuous optimiser coordinates; kernel_size and block_size are
  /// rounded to the nearest odd integer inside their bounds.
  static LagcAnlmParams from_vector(const Eigen::VectorXd& v);

  void validate() const;

  bool operator==(const LagcAnlmParams&) const = default;
};

/// Nearest odd integer to x (halves round up), clamped to [lo, hi].
int nearest_odd(double x, int lo, int hi);

struct PipelineParams {
  MsrcrParams msrcr;
  LagcAnlmParams lagc_anlm;

  static constexpr int kDim = MsrcrParams::kDim + LagcAnlmParams::kDim;

  static PipelineParams defaults() { return {}; }
  Eigen::VectorXd to_vector() const;
  static PipelineParams from_vector(const Eigen::VectorXd& v);
  void validate() const;

  bool operator==(const PipelineParams&) const = default;
};

/// Per-pixel exponent clamp(gamma0 * gamma(x, y), 0.2, 3.0), where
/// gamma(x, y) = -log2(max(sigma_L, sigma_min/255) + mu_L) / 2.
Plane lagc_exponent(const Plane& v, double gamma0, int kernel_size, double sigma_min);

/// Local adaptive gamma correction: v ^ lagc_exponent(v, ...).
Plane lagc(const Plane& v, double gamma0, int kernel_size, double sigma_min);

inline constexpr int kAnlmSearchWindow = 21;

/// Non-local means with weights exp(-d / (h/255)^2), d the mean squared
/// difference between block_size x block_size patches, searched over a
/// window x window neighbourhood. Borders use symmetric reflection.
Plane anlm(const Plane& chan, double h, int block_size, int window = kAnlmSearchWindow);

/// C_out = L_out * (C_in / L_in)^r per channel, clamped to [0, 1].
/// Pixels with L_in == 0 take C_out = L_out.
ImageBuffer color_correct(const ImageBuffer& rgb_in, const Plane& l_in, const Plane& l_out, double r);

/// Linear stretch of [min S, max S] onto [0, min(1, sat_scale * max S)].
Plane saturation_stretch(const Plane& s, double sat_scale);

/// Receives the name of each stage as it starts.
using StageObserver = std::function<void(std::string_view)>;

/// Steps 1-6 of the pipeline: everything that runs before MSRCR.
ImageBuffer pre_msrcr_stages(const ImageBuffer& img, const LagcAnlmParams& params,
                             const StageObserver& observer = {});

/// HSV split, LAGC on V, ANLM on V, color correction, saturation stretch,
/// back to RGB, then MSRCR. Deterministic.
ImageBuffer run_pipeline(const ImageBuffer& img, const PipelineParams& params,
                         const StageObserver& observer = {});

} // namespace bfore
