#include "bfore/retinex.hpp"

#include "bfore/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bfore {

Eigen::VectorXd MsrcrParams::lower_bounds() {
  Eigen::VectorXd v(kDim);
  v << 5.0, 50.0, 150.0, 0.1, 0.1, 0.1, 80.0, 100.0, 0.3;
  return v;
}

Eigen::VectorXd MsrcrParams::upper_bounds() {
  Eigen::VectorXd v(kDim);
  v << 30.0, 150.0, 350.0, 0.6, 0.6, 0.6, 150.0, 200.0, 1.0;
  return v;
}

Eigen::VectorXd MsrcrParams::to_vector() const {
  Eigen::VectorXd v(kDim);
  v << sigma[0], sigma[1], sigma[2], weight[0], weight[1], weight[2], mu, eta, alpha_blend;
  return v;
}

MsrcrParams MsrcrParams::from_vector(const Eigen::VectorXd& v) {
  if (v.size() != kDim) throw ContractError("MsrcrParams::from_vector: expected 9 coordinates");
  MsrcrParams p;
  p.sigma = {v[0], v[1], v[2]};
  p.weight = {v[3], v[4], v[5]};
  p.mu = v[6];
  p.eta = v[7];
  p.alpha_blend = v[8];
  return p;
}

std::array<double, 3> MsrcrParams::normalized_weights() const {
  const double sum = weight[0] + weight[1] + weight[2];
  return {weight[0] / sum, weight[1] / sum, weight[2] / sum};
}

void MsrcrParams::validate() const {
  const Eigen::VectorXd v = to_vector();
  const Eigen::VectorXd lo = lower_bounds();
  const Eigen::VectorXd hi = upper_bounds();
  static const char* names[kDim] = {"sigma1", "sigma2", "sigma3", "w1", "w2", "w3", "mu", "eta", "alpha_blend"};
  for (int i = 0; i < kDim; ++i) {
    if (!(v[i] >= lo[i] && v[i] <= hi[i])) {
      throw ContractError(std::string("MsrcrParams.") + names[i] + " = " + std::to_string(v[i]) + " outside [" +
                          std::to_string(lo[i]) + ", " + std::to_string(hi[i]) + "]");
    }
  }
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw ContractError("percentile of empty sample");
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
  const double a = values[lo];
  if (frac == 0.0 || lo + 1 >= values.size()) return a;
  const double b = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1, values.end());
  return a + frac * (b - a);
}

Plane ssr(const Plane& chan, double sigma) {
  const Plane blurred = gaussian_blur(chan, sigma);
  return (chan + kLogEpsilon).log() - (blurred + kLogEpsilon).log();
}

Plane msr_channel(const Plane& chan, const MsrcrParams& params) {
  const auto w = params.normalized_weights();
  const Plane log_in = (chan + kLogEpsilon).log();
  Plane acc = Plane::Zero(chan.rows(), chan.cols());
  for (int k = 0; k < 3; ++k) {
    const Plane blurred = gaussian_blur(chan, params.sigma[static_cast<std::size_t>(k)]);
    acc += w[static_cast<std::size_t>(k)] * (log_in - (blurred + kLogEpsilon).log());
  }
  return acc;
}

std::vector<Plane> msr(const ImageBuffer& img, const MsrcrParams& params) {
  require_colorspace(img, ColorSpace::RGB, "msr");
  std::vector<Plane> out;
  out.reserve(3);
  for (int c = 0; c < 3; ++c) out.push_back(msr_channel(img.channel(c), params));
  return out;
}

Plane normalize_stretch(const Plane& map) {
  if (!map.allFinite()) throw ContractError("normalize_stretch: non-finite map");
  std::vector<double> values(map.data(), map.data() + map.size());
  const double p1 = percentile(values, 0.01);
  const double p99 = percentile(std::move(values), 0.99);
  if (!(p99 > p1)) return Plane::Constant(map.rows(), map.cols(), 0.5);
  return ((map - p1) / (p99 - p1)).max(0.0).min(1.0);
}

std::vector<Plane> color_restoration(const ImageBuffer& img, const MsrcrParams& params) {
  require_colorspace(img, ColorSpace::RGB, "color_restoration");
  const double gain = params.mu / 100.0;
  const Plane total = img.channel(0) + img.channel(1) + img.channel(2) + 3.0 * kLogEpsilon;
  std::vector<Plane> out;
  out.reserve(3);
  for (int c = 0; c < 3; ++c) out.push_back(gain * (params.eta * (img.channel(c) + kLogEpsilon) / total).log());
  return out;
}

ImageBuffer msrcr_unblended(const ImageBuffer& img, const MsrcrParams& params) {
  const auto retinex = msr(img, params);
  const auto color = color_restoration(img, params);
  std::vector<Plane> planes;
  planes.reserve(3);
  for (std::size_t c = 0; c < 3; ++c) planes.push_back(normalize_stretch(color[c] * retinex[c]));
  return ImageBuffer::from_planes(std::move(planes), ColorSpace::RGB);
}

ImageBuffer msrcr(const ImageBuffer& img, const MsrcrParams& params) {
  const ImageBuffer restored = msrcr_unblended(img, params);
  const double a = params.alpha_blend;
  if (a == 1.0) return restored;
  std::vector<Plane> planes;
  planes.reserve(3);
  for (int c = 0; c < 3; ++c) planes.push_back(a * restored.channel(c) + (1.0 - a) * img.channel(c));
  return ImageBuffer::from_planes(std::move(planes), ColorSpace::RGB);
}

ImageBuffer msr_image(const ImageBuffer& img, const MsrcrParams& params) {
  const auto retinex = msr(img, params);
  std::vector<Plane> planes;
  planes.reserve(3);
  for (const auto& r : retinex) planes.push_back(normalize_stretch(r));
  return ImageBuffer::from_planes(std::move(planes), ColorSpace::RGB);
}

} // namespace bfore
