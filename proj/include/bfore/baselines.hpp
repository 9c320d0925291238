#pragma once

#include "bfore/image.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace bfore {

enum class BaselineId { HE, CLAHE, MSR, MSRCR, AGCWD, LAGC_DEFAULT, BFORE_DEFAULT };

std::string_view to_string(BaselineId id);
std::optional<BaselineId> baseline_from_string(std::string_view name);
std::vector<BaselineId> all_baselines();

/// Global histogram equalisation of a [0, 1] plane over 256 quantised levels:
/// level l maps to (cdf(l) - cdf_min) / (N - cdf_min). A single occupied level is left unchanged.
Plane equalize_plane(const Plane& v);

/// Contrast-limited adaptive equalisation. Tiles partition the plane; each tile's
/// histogram is clipped at max(1, clip_limit * area / 256), the excess spread evenly
/// over all bins, and mapped as in equalize_plane. Mappings are blended bilinearly
/// between tile centres. A non-positive clip_limit disables clipping.
Plane clahe_plane(const Plane& v, double clip_limit = 2.0, int tiles_x = 8, int tiles_y = 8);

/// Adaptive gamma correction with weighting distribution:
/// V' = V ^ (1 - c_w(level(V))). A single occupied level is left unchanged.
Plane agcwd_plane(const Plane& v, double alpha = 0.5);

/// Replaces V of an HSV image; H and S are copied untouched.
ImageBuffer he_hsv(const ImageBuffer& hsv);
ImageBuffer clahe_hsv(const ImageBuffer& hsv, double clip_limit = 2.0, int tiles_x = 8, int tiles_y = 8);

/// RGB in, RGB out; the transform acts on V.
ImageBuffer he(const ImageBuffer& img);
ImageBuffer clahe(const ImageBuffer& img, double clip_limit = 2.0, int tiles_x = 8, int tiles_y = 8);
ImageBuffer agcwd(const ImageBuffer& img, double alpha = 0.5);

/// Fixed-default Retinex and pipeline variants.
ImageBuffer msr_default(const ImageBuffer& img);
ImageBuffer msrcr_default(const ImageBuffer& img);
/// LAGC with default parameters on V only.
ImageBuffer lagc_default(const ImageBuffer& img);

ImageBuffer apply_baseline(BaselineId id, const ImageBuffer& img);

} // namespace bfore
