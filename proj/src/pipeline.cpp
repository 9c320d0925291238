#include "bfore/pipeline.hpp"

#include "bfore/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bfore {

Eigen::VectorXd LagcAnlmParams::lower_bounds() {
  Eigen::VectorXd v(kDim);
  v << 0.3, 3.0, 2.0, 5.0, 5.0, 0.5, 0.5;
  return v;
}

Eigen::VectorXd LagcAnlmParams::upper_bounds() {
  Eigen::VectorXd v(kDim);
  v << 1.5, 15.0, 10.0, 15.0, 11.0, 1.5, 2.0;
  return v;
}

Eigen::VectorXd LagcAnlmParams::to_vector() const {
  Eigen::VectorXd v(kDim);
  v << gamma0, kernel_size, sigma_min, h, block_size, sat_scale, r;
  return v;
}

int nearest_odd(double x, int lo, int hi) {
  const int odd = 2 * static_cast<int>(std::floor((x - 1.0) / 2.0 + 0.5)) + 1;
  return std::clamp(odd, lo, hi);
}

LagcAnlmParams LagcAnlmParams::from_vector(const Eigen::VectorXd& v) {
  if (v.size() != kDim) throw ContractError("LagcAnlmParams::from_vector: expected 7 coordinates");
  LagcAnlmParams p;
  p.gamma0 = v[0];
  p.kernel_size = nearest_odd(v[1], 3, 15);
  p.sigma_min = v[2];
  p.h = v[3];
  p.block_size = nearest_odd(v[4], 5, 11);
  p.sat_scale = v[5];
  p.r = v[6];
  return p;
}

void LagcAnlmParams::validate() const {
  const Eigen::VectorXd v = to_vector();
  const Eigen::VectorXd lo = lower_bounds();
  const Eigen::VectorXd hi = upper_bounds();
  static const char* names[kDim] = {"gamma0", "kernel_size", "sigma_min", "h", "block_size", "sat_scale", "r"};
  for (int i = 0; i < kDim; ++i) {
    if (!(v[i] >= lo[i] && v[i] <= hi[i])) {
      throw ContractError(std::string("LagcAnlmParams.") + names[i] + " = " + std::to_string(v[i]) + " outside [" +
                          std::to_string(lo[i]) + ", " + std::to_string(hi[i]) + "]");
    }
  }
  if (kernel_size % 2 == 0 || block_size % 2 == 0) throw ContractError("LagcAnlmParams: kernel sizes must be odd");
}

Eigen::VectorXd PipelineParams::to_vector() const {
  Eigen::VectorXd v(kDim);
  v << msrcr.to_vector(), lagc_anlm.to_vector();
  return v;
}

PipelineParams PipelineParams::from_vector(const Eigen::VectorXd& v) {
  if (v.size() != kDim) throw ContractError("PipelineParams::from_vector: expected 16 coordinates");
  return {MsrcrParams::from_vector(v.head(MsrcrParams::kDim)),
          LagcAnlmParams::from_vector(v.tail(LagcAnlmParams::kDim))};
}

void PipelineParams::validate() const {
  msrcr.validate();
  lagc_anlm.validate();
}

// ---------------------------------------------------------------------------

Plane lagc_exponent(const Plane& v, double gamma0, int kernel_size, double sigma_min) {
  const LocalStats stats = local_stats(v, kernel_size);
  const Plane floor_std = stats.stddev.max(sigma_min / 255.0);
  const Plane gamma = -(floor_std + stats.mean).log() / (2.0 * std::log(2.0));
  return (gamma0 * gamma).max(0.2).min(3.0);
}

Plane lagc(const Plane& v, double gamma0, int kernel_size, double sigma_min) {
  return v.pow(lagc_exponent(v, gamma0, kernel_size, sigma_min));
}

Plane anlm(const Plane& chan, double h, int block_size, int window) {
  if (block_size < 1 || block_size % 2 == 0) throw ContractError("anlm: block_size must be odd");
  if (window < 1 || window % 2 == 0) throw ContractError("anlm: window must be odd");
  if (!(h > 0.0)) throw ContractError("anlm: h must be positive");

  const int rows = static_cast<int>(chan.rows());
  const int cols = static_cast<int>(chan.cols());
  const int b = block_size / 2;
  const int w = window / 2;
  const int pad = w + b;
  const double h_unit = h / 255.0;
  const double inv_h2 = 1.0 / (h_unit * h_unit);
  const double inv_area = 1.0 / (static_cast<double>(block_size) * block_size);

  Plane padded(rows + 2 * pad, cols + 2 * pad);
  for (int x = 0; x < cols + 2 * pad; ++x) {
    const int sx = reflect_index(x - pad, cols);
    for (int y = 0; y < rows + 2 * pad; ++y) padded(y, x) = chan(reflect_index(y - pad, rows), sx);
  }

  // Squared differences live on the patch support region, offset by w from the padded origin.
  const int drows = rows + 2 * b;
  const int dcols = cols + 2 * b;
  Plane integral(drows + 1, dcols + 1);
  Plane acc = Plane::Zero(rows, cols);
  Plane wsum = Plane::Zero(rows, cols);

  for (int dx = -w; dx <= w; ++dx) {
    for (int dy = -w; dy <= w; ++dy) {
      integral.row(0).setZero();
      integral.col(0).setZero();
      for (int x = 0; x < dcols; ++x) {
        double col_run = 0.0;
        for (int y = 0; y < drows; ++y) {
          const double d = padded(y + w, x + w) - padded(y + w + dy, x + w + dx);
          col_run += d * d;
          integral(y + 1, x + 1) = integral(y + 1, x) + col_run;
        }
      }
      for (int x = 0; x < cols; ++x) {
        for (int y = 0; y < rows; ++y) {
          const double box = integral(y + 2 * b + 1, x + 2 * b + 1) - integral(y, x + 2 * b + 1) -
                             integral(y + 2 * b + 1, x) + integral(y, x);
          const double weight = std::exp(-std::max(box, 0.0) * inv_area * inv_h2);
          acc(y, x) += weight * padded(y + pad + dy, x + pad + dx);
          wsum(y, x) += weight;
        }
      }
    }
  }
  return acc / wsum;
}

ImageBuffer color_correct(const ImageBuffer& rgb_in, const Plane& l_in, const Plane& l_out, double r) {
  require_colorspace(rgb_in, ColorSpace::RGB, "color_correct");
  if (l_in.rows() != rgb_in.height() || l_in.cols() != rgb_in.width() || l_out.rows() != l_in.rows() ||
      l_out.cols() != l_in.cols())
    throw ContractError("color_correct: luminance planes must match the image");
  std::vector<Plane> planes;
  planes.reserve(3);
  for (int c = 0; c < 3; ++c) {
    const Plane& cin = rgb_in.channel(c);
    Plane out(cin.rows(), cin.cols());
    for (Eigen::Index i = 0; i < cin.size(); ++i) {
      const double ratio = l_in(i) > 0.0 ? cin(i) / l_in(i) : 1.0;
      out(i) = std::clamp(l_out(i) * std::pow(ratio, r), 0.0, 1.0);
    }
    planes.push_back(std::move(out));
  }
  return ImageBuffer::from_planes(std::move(planes), ColorSpace::RGB);
}

Plane saturation_stretch(const Plane& s, double sat_scale) {
  const double lo = s.minCoeff();
  const double hi = s.maxCoeff();
  if (!(hi > lo)) return s;
  const double target_max = std::clamp(sat_scale * hi, 0.0, 1.0);
  return ((s - lo) * (target_max / (hi - lo))).max(0.0).min(1.0);
}

ImageBuffer pre_msrcr_stages(const ImageBuffer& img, const LagcAnlmParams& params, const StageObserver& observer) {
  require_colorspace(img, ColorSpace::RGB, "run_pipeline");
  auto stage = [&](std::string_view name) {
    if (observer) observer(name);
  };

  stage("rgb_to_hsv");
  const ImageBuffer hsv = rgb_to_hsv(img);
  const Plane& value_in = hsv.channel(2);

  stage("lagc");
  const Plane brightened = lagc(value_in, params.gamma0, params.kernel_size, params.sigma_min);

  stage("anlm");
  const Plane denoised = anlm(brightened, params.h, params.block_size);

  stage("color_correct");
  const ImageBuffer corrected = color_correct(img, value_in, denoised, params.r);

  stage("saturation_stretch");
  ImageBuffer hsv_out = rgb_to_hsv(corrected);
  hsv_out.set_channel(1, saturation_stretch(hsv_out.channel(1), params.sat_scale));

  stage("hsv_to_rgb");
  return hsv_to_rgb(hsv_out);
}

ImageBuffer run_pipeline(const ImageBuffer& img, const PipelineParams& params, const StageObserver& observer) {
  const ImageBuffer rgb = pre_msrcr_stages(img, params.lagc_anlm, observer);
  if (observer) observer("msrcr");
  return msrcr(rgb, params.msrcr);
}

} // namespace bfore
