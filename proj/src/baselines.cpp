#include "bfore/baselines.hpp"

#include "bfore/bfore.hpp"
#include "bfore/errors.hpp"
#include "bfore/pipeline.hpp"
#include "bfore/retinex.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace bfore {

namespace {

using Histogram = std::array<double, 256>;
using Lut = std::array<double, 256>;

constexpr std::array<std::pair<BaselineId, std::string_view>, 7> kNames{{
    {BaselineId::HE, "he"},
    {BaselineId::CLAHE, "clahe"},
    {BaselineId::MSR, "msr_default"},
    {BaselineId::MSRCR, "msrcr_default"},
    {BaselineId::AGCWD, "agcwd"},
    {BaselineId::LAGC_DEFAULT, "lagc_default"},
    {BaselineId::BFORE_DEFAULT, "bfore_default"},
}};

int occupied_levels(const Histogram& h) {
  return static_cast<int>(std::count_if(h.begin(), h.end(), [](double c) { return c > 0.0; }));
}

// (cdf(l) - cdf_min) / (total - cdf_min); requires at least two occupied levels.
Lut equalization_lut(const Histogram& h) {
  double total = 0.0;
  for (double c : h) total += c;
  double cdf_min = 0.0;
  for (double c : h)
    if (c > 0.0) {
      cdf_min = c;
      break;
    }
  Lut lut{};
  double cdf = 0.0;
  for (int l = 0; l < 256; ++l) {
    cdf += h[static_cast<std::size_t>(l)];
    lut[static_cast<std::size_t>(l)] = std::clamp((cdf - cdf_min) / (total - cdf_min), 0.0, 1.0);
  }
  return lut;
}

Histogram histogram_of(const Plane& v, Eigen::Index y0, Eigen::Index x0, Eigen::Index rows, Eigen::Index cols) {
  Histogram h{};
  for (Eigen::Index x = x0; x < x0 + cols; ++x)
    for (Eigen::Index y = y0; y < y0 + rows; ++y) h[quantize(v(y, x))] += 1.0;
  return h;
}

struct Axis {
  std::vector<Eigen::Index> start;
  std::vector<double> center;
};

Axis split_axis(Eigen::Index n, int tiles) {
  Axis a;
  for (int i = 0; i <= tiles; ++i) a.start.push_back(static_cast<Eigen::Index>(i) * n / tiles);
  for (int i = 0; i < tiles; ++i) a.center.push_back(0.5 * static_cast<double>(a.start[i] + a.start[i + 1] - 1));
  return a;
}

// Neighbouring tile indices and the weight of the second one.
struct Blend {
  int i0;
  int i1;
  double t;
};

Blend locate(double pos, const std::vector<double>& centers) {
  const int last = static_cast<int>(centers.size()) - 1;
  if (pos <= centers.front()) return {0, 0, 0.0};
  if (pos >= centers.back()) return {last, last, 0.0};
  const auto it = std::upper_bound(centers.begin(), centers.end(), pos);
  const int i1 = static_cast<int>(it - centers.begin());
  const int i0 = i1 - 1;
  return {i0, i1, (pos - centers[static_cast<std::size_t>(i0)]) / (centers[static_cast<std::size_t>(i1)] - centers[static_cast<std::size_t>(i0)])};
}

ImageBuffer replace_value(const ImageBuffer& img, Plane v) {
  require_colorspace(img, ColorSpace::RGB, "baseline");
  ImageBuffer hsv = rgb_to_hsv(img);
  hsv.set_channel(2, std::move(v));
  return hsv_to_rgb(hsv);
}

} // namespace

std::string_view to_string(BaselineId id) {
  for (const auto& [k, name] : kNames)
    if (k == id) return name;
  return "?";
}

std::optional<BaselineId> baseline_from_string(std::string_view name) {
  for (const auto& [k, n] : kNames)
    if (n == name) return k;
  return std::nullopt;
}

std::vector<BaselineId> all_baselines() {
  std::vector<BaselineId> out;
  for (const auto& entry : kNames) out.push_back(entry.first);
  return out;
}

Plane equalize_plane(const Plane& v) {
  const Histogram h = histogram_of(v, 0, 0, v.rows(), v.cols());
  if (occupied_levels(h) < 2) return v;
  const Lut lut = equalization_lut(h);
  return v.unaryExpr([&lut](double s) { return lut[quantize(s)]; });
}

Plane clahe_plane(const Plane& v, double clip_limit, int tiles_x, int tiles_y) {
  if (tiles_x < 1 || tiles_y < 1) throw ContractError("clahe: tile counts must be positive");
  tiles_x = std::min<int>(tiles_x, static_cast<int>(v.cols()));
  tiles_y = std::min<int>(tiles_y, static_cast<int>(v.rows()));
  const Axis ax = split_axis(v.cols(), tiles_x);
  const Axis ay = split_axis(v.rows(), tiles_y);

  // One LUT per tile; an empty optional marks the identity map.
  std::vector<std::optional<Lut>> luts(static_cast<std::size_t>(tiles_x * tiles_y));
  for (int tx = 0; tx < tiles_x; ++tx) {
    for (int ty = 0; ty < tiles_y; ++ty) {
      const Eigen::Index rows = ay.start[ty + 1] - ay.start[ty];
      const Eigen::Index cols = ax.start[tx + 1] - ax.start[tx];
      Histogram h = histogram_of(v, ay.start[ty], ax.start[tx], rows, cols);
      if (occupied_levels(h) < 2) continue;
      if (clip_limit > 0.0) {
        const double limit = std::max(1.0, clip_limit * static_cast<double>(rows * cols) / 256.0);
        double excess = 0.0;
        for (double& c : h)
          if (c > limit) {
            excess += c - limit;
            c = limit;
          }
        for (double& c : h) c += excess / 256.0;
      }
      luts[static_cast<std::size_t>(ty * tiles_x + tx)] = equalization_lut(h);
    }
  }

  Plane out(v.rows(), v.cols());
  for (Eigen::Index x = 0; x < v.cols(); ++x) {
    const Blend bx = locate(static_cast<double>(x), ax.center);
    for (Eigen::Index y = 0; y < v.rows(); ++y) {
      const Blend by = locate(static_cast<double>(y), ay.center);
      const double s = v(y, x);
      const unsigned char q = quantize(s);
      auto map = [&](int ty, int tx) {
        const auto& lut = luts[static_cast<std::size_t>(ty * tiles_x + tx)];
        return lut ? (*lut)[q] : s;
      };
      const double m00 = map(by.i0, bx.i0);
      const double m01 = map(by.i0, bx.i1);
      const double m10 = map(by.i1, bx.i0);
      const double m11 = map(by.i1, bx.i1);
      if (m00 == m01 && m00 == m10 && m00 == m11) {
        out(y, x) = m00;
      } else {
        const double top = (1.0 - bx.t) * m00 + bx.t * m01;
        const double bottom = (1.0 - bx.t) * m10 + bx.t * m11;
        out(y, x) = (1.0 - by.t) * top + by.t * bottom;
      }
    }
  }
  return out.max(0.0).min(1.0);
}

Plane agcwd_plane(const Plane& v, double alpha) {
  if (!(alpha >= 0.0)) throw ContractError("agcwd: alpha must be non-negative");
  const Histogram h = histogram_of(v, 0, 0, v.rows(), v.cols());
  if (occupied_levels(h) < 2) return v;
  const double n = static_cast<double>(v.size());
  const double p_max = *std::max_element(h.begin(), h.end()) / n;
  const double p_min = *std::min_element(h.begin(), h.end()) / n;
  std::array<double, 256> pw{};
  double total = 0.0;
  for (std::size_t l = 0; l < 256; ++l) {
    pw[l] = p_max * std::pow((h[l] / n - p_min) / (p_max - p_min), alpha);
    total += pw[l];
  }
  Lut gamma{};
  double cdf = 0.0;
  for (std::size_t l = 0; l < 256; ++l) {
    cdf += pw[l];
    gamma[l] = std::max(0.0, 1.0 - cdf / total);
  }
  return v.unaryExpr([&gamma](double s) { return std::pow(s, gamma[quantize(s)]); }).max(0.0).min(1.0);
}

ImageBuffer he_hsv(const ImageBuffer& hsv) {
  require_colorspace(hsv, ColorSpace::HSV, "he_hsv");
  ImageBuffer out = hsv;
  out.set_channel(2, equalize_plane(hsv.channel(2)));
  return out;
}

ImageBuffer clahe_hsv(const ImageBuffer& hsv, double clip_limit, int tiles_x, int tiles_y) {
  require_colorspace(hsv, ColorSpace::HSV, "clahe_hsv");
  ImageBuffer out = hsv;
  out.set_channel(2, clahe_plane(hsv.channel(2), clip_limit, tiles_x, tiles_y));
  return out;
}

ImageBuffer he(const ImageBuffer& img) {
  require_colorspace(img, ColorSpace::RGB, "he");
  return hsv_to_rgb(he_hsv(rgb_to_hsv(img)));
}

ImageBuffer clahe(const ImageBuffer& img, double clip_limit, int tiles_x, int tiles_y) {
  require_colorspace(img, ColorSpace::RGB, "clahe");
  return hsv_to_rgb(clahe_hsv(rgb_to_hsv(img), clip_limit, tiles_x, tiles_y));
}

ImageBuffer agcwd(const ImageBuffer& img, double alpha) { return replace_value(img, agcwd_plane(img.value(), alpha)); }

ImageBuffer msr_default(const ImageBuffer& img) { return msr_image(img, MsrcrParams::defaults()); }

ImageBuffer msrcr_default(const ImageBuffer& img) { return msrcr(img, MsrcrParams::defaults()); }

ImageBuffer lagc_default(const ImageBuffer& img) {
  const LagcAnlmParams p = LagcAnlmParams::defaults();
  return replace_value(img, lagc(img.value(), p.gamma0, p.kernel_size, p.sigma_min));
}

ImageBuffer apply_baseline(BaselineId id, const ImageBuffer& img) {
  switch (id) {
    case BaselineId::HE: return he(img);
    case BaselineId::CLAHE: return clahe(img);
    case BaselineId::MSR: return msr_default(img);
    case BaselineId::MSRCR: return msrcr_default(img);
    case BaselineId::AGCWD: return agcwd(img);
    case BaselineId::LAGC_DEFAULT: return lagc_default(img);
    case BaselineId::BFORE_DEFAULT: return bfore_default(img);
  }
  throw ContractError("unknown baseline");
}

} // namespace bfore
