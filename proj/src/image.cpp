#include "bfore/image.hpp"

#include "bfore/errors.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

namespace bfore {

std::string_view to_string(ColorSpace cs) {
  switch (cs) {
    case ColorSpace::RGB: return "RGB";
    case ColorSpace::HSV: return "HSV";
    case ColorSpace::GRAY: return "GRAY";
  }
  return "?";
}

namespace {

int expected_channels(ColorSpace cs) { return cs == ColorSpace::GRAY ? 1 : 3; }

void check_side(int w, int h) {
  if (w < ImageBuffer::kMinSide || h < ImageBuffer::kMinSide) {
    throw ContractError("image must be at least " + std::to_string(ImageBuffer::kMinSide) + "x" +
                        std::to_string(ImageBuffer::kMinSide) + ", got " + std::to_string(w) + "x" +
                        std::to_string(h));
  }
}

} // namespace

ImageBuffer::ImageBuffer(int width, int height, ColorSpace cs, double fill)
    : width_(width), height_(height), colorspace_(cs) {
  check_side(width, height);
  if (!std::isfinite(fill)) throw ContractError("fill value must be finite");
  planes_.assign(static_cast<std::size_t>(expected_channels(cs)),
                 Plane::Constant(height, width, std::clamp(fill, 0.0, 1.0)));
}

ImageBuffer ImageBuffer::from_planes(std::vector<Plane> planes, ColorSpace cs) {
  if (static_cast<int>(planes.size()) != expected_channels(cs)) {
    throw ContractError(std::string("colorspace ") + std::string(to_string(cs)) + " needs " +
                        std::to_string(expected_channels(cs)) + " planes, got " +
                        std::to_string(planes.size()));
  }
  ImageBuffer img;
  img.height_ = static_cast<int>(planes.front().rows());
  img.width_ = static_cast<int>(planes.front().cols());
  check_side(img.width_, img.height_);
  for (auto& p : planes) {
    if (p.rows() != img.height_ || p.cols() != img.width_) throw ContractError("plane dimensions differ");
    if (!p.allFinite()) throw ContractError("non-finite sample in image plane");
    p = p.max(0.0).min(1.0);
  }
  img.colorspace_ = cs;
  img.planes_ = std::move(planes);
  return img;
}

void ImageBuffer::set_channel(int c, Plane plane) {
  if (plane.rows() != height_ || plane.cols() != width_) throw ContractError("plane dimensions differ");
  if (!plane.allFinite()) throw ContractError("non-finite sample in image plane");
  planes_.at(static_cast<std::size_t>(c)) = plane.max(0.0).min(1.0);
}

Plane ImageBuffer::value() const {
  if (channels() == 1) return planes_[0];
  return planes_[0].max(planes_[1]).max(planes_[2]);
}

Plane ImageBuffer::luma() const {
  if (channels() == 1) return planes_[0];
  return 0.299 * planes_[0] + 0.587 * planes_[1] + 0.114 * planes_[2];
}

bool ImageBuffer::operator==(const ImageBuffer& other) const {
  if (width_ != other.width_ || height_ != other.height_ || colorspace_ != other.colorspace_ ||
      planes_.size() != other.planes_.size())
    return false;
  for (std::size_t c = 0; c < planes_.size(); ++c) {
    if (!(planes_[c] == other.planes_[c]).all()) return false;
  }
  return true;
}

void require_colorspace(const ImageBuffer& img, ColorSpace expected, std::string_view op) {
  if (img.empty() || img.colorspace() != expected) {
    throw ContractError(std::string(op) + ": expected " + std::string(to_string(expected)) +
                        " image, got " + (img.empty() ? std::string("empty") : std::string(to_string(img.colorspace()))));
  }
}

// ---------------------------------------------------------------------------
// Color conversion

std::array<double, 3> rgb_to_hsv_pixel(double r, double g, double b) noexcept {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;
  const double s = mx > 0.0 ? d / mx : 0.0;
  double h = 0.0;
  if (d > 0.0) {
    if (mx == r)
      h = (g - b) / d;
    else if (mx == g)
      h = (b - r) / d + 2.0;
    else
      h = (r - g) / d + 4.0;
    h /= 6.0;
    if (h < 0.0) h += 1.0;
    if (h >= 1.0) h -= 1.0;
  }
  return {h, s, mx};
}

std::array<double, 3> hsv_to_rgb_pixel(double h, double s, double v) noexcept {
  if (s <= 0.0) return {v, v, v};
  const double h6 = (h - std::floor(h)) * 6.0;
  const int sector = static_cast<int>(std::floor(h6)) % 6;
  const double f = h6 - std::floor(h6);
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  switch (sector) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

namespace {

template <typename PixelFn>
ImageBuffer convert3(const ImageBuffer& img, ColorSpace out_cs, PixelFn fn) {
  const Plane& a = img.channel(0);
  const Plane& b = img.channel(1);
  const Plane& c = img.channel(2);
  std::vector<Plane> out(3, Plane(a.rows(), a.cols()));
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const auto px = fn(a(i), b(i), c(i));
    out[0](i) = px[0];
    out[1](i) = px[1];
    out[2](i) = px[2];
  }
  return ImageBuffer::from_planes(std::move(out), out_cs);
}

} // namespace

ImageBuffer rgb_to_hsv(const ImageBuffer& img) {
  require_colorspace(img, ColorSpace::RGB, "rgb_to_hsv");
  return convert3(img, ColorSpace::HSV, rgb_to_hsv_pixel);
}

ImageBuffer hsv_to_rgb(const ImageBuffer& img) {
  require_colorspace(img, ColorSpace::HSV, "hsv_to_rgb");
  return convert3(img, ColorSpace::RGB, hsv_to_rgb_pixel);
}

// ---------------------------------------------------------------------------
// Local statistics

LocalStats local_stats(const Plane& chan, int kernel_size) {
  if (kernel_size % 2 == 0 || kernel_size < 3 || kernel_size > 15) {
    throw ContractError("local_stats: kernel size must be odd and in [3, 15], got " + std::to_string(kernel_size));
  }
  const int h = static_cast<int>(chan.rows());
  const int w = static_cast<int>(chan.cols());
  const int r = kernel_size / 2;

  Plane padded(h + 2 * r, w + 2 * r);
  for (int x = 0; x < w + 2 * r; ++x) {
    const int sx = reflect_index(x - r, w);
    for (int y = 0; y < h + 2 * r; ++y) padded(y, x) = chan(reflect_index(y - r, h), sx);
  }

  const double area = static_cast<double>(kernel_size) * kernel_size;
  LocalStats out{Plane(h, w), Plane(h, w)};
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) {
      double sum = 0.0;
      for (int dy = 0; dy < kernel_size; ++dy)
        for (int dx = 0; dx < kernel_size; ++dx) sum += padded(y + dy, x + dx);
      const double mean = sum / area;
      double ss = 0.0;
      for (int dy = 0; dy < kernel_size; ++dy)
        for (int dx = 0; dx < kernel_size; ++dx) {
          const double d = padded(y + dy, x + dx) - mean;
          ss += d * d;
        }
      out.mean(y, x) = mean;
      out.stddev(y, x) = std::sqrt(ss / area);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gaussian blur

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ContractError("gaussian_blur: sigma must be positive");
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(static_cast<std::size_t>(2 * r + 1));
  double sum = 0.0;
  for (int k = -r; k <= r; ++k) {
    const double v = std::exp(-static_cast<double>(k) * k / (2.0 * sigma * sigma));
    taps[static_cast<std::size_t>(k + r)] = v;
    sum += v;
  }
  for (double& t : taps) t /= sum;
  return taps;
}

namespace {

// Blurs every column of `in` (length n = rows) in place of `out`.
void blur_columns_spatial(const Plane& in, Plane& out, const std::vector<double>& taps) {
  const int n = static_cast<int>(in.rows());
  const int r = static_cast<int>(taps.size() / 2);
  std::vector<int> idx(static_cast<std::size_t>(n + 2 * r));
  for (int i = 0; i < n + 2 * r; ++i) idx[static_cast<std::size_t>(i)] = reflect_index(i - r, n);
  for (Eigen::Index c = 0; c < in.cols(); ++c) {
    const double* src = in.col(c).data();
    double* dst = out.col(c).data();
    for (int y = 0; y < n; ++y) {
      double acc = 0.0;
      for (int k = 0; k <= 2 * r; ++k) acc += taps[static_cast<std::size_t>(k)] * src[idx[static_cast<std::size_t>(y + k)]];
      dst[y] = acc;
    }
  }
}

// Same result as blur_columns_spatial, via circular convolution of the
// 2n-periodic symmetric extension with the kernel wrapped onto that period.
void blur_columns_fft(const Plane& in, Plane& out, const std::vector<double>& taps) {
  const int n = static_cast<int>(in.rows());
  const int period = 2 * n;
  const int r = static_cast<int>(taps.size() / 2);

  std::vector<double> wrapped(static_cast<std::size_t>(period), 0.0);
  for (int k = -r; k <= r; ++k) {
    int m = k % period;
    if (m < 0) m += period;
    wrapped[static_cast<std::size_t>(m)] += taps[static_cast<std::size_t>(k + r)];
  }

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> kernel_spec;
  fft.fwd(kernel_spec, wrapped);

  std::vector<double> ext(static_cast<std::size_t>(period));
  std::vector<double> res;
  std::vector<std::complex<double>> spec;
  for (Eigen::Index c = 0; c < in.cols(); ++c) {
    const double* src = in.col(c).data();
    for (int i = 0; i < n; ++i) {
      ext[static_cast<std::size_t>(i)] = src[i];
      ext[static_cast<std::size_t>(period - 1 - i)] = src[i];
    }
    fft.fwd(spec, ext);
    for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= kernel_spec[i];
    fft.inv(res, spec);
    double* dst = out.col(c).data();
    for (int y = 0; y < n; ++y) dst[y] = res[static_cast<std::size_t>(y)];
  }
}

} // namespace

Plane filter_separable(const Plane& chan, const std::vector<double>& taps) {
  if (taps.size() % 2 == 0) throw ContractError("filter_separable: kernel length must be odd");
  Plane cols(chan.rows(), chan.cols());
  blur_columns_spatial(chan, cols, taps);
  Plane t = cols.transpose();
  Plane rows(t.rows(), t.cols());
  blur_columns_spatial(t, rows, taps);
  return rows.transpose();
}

Plane gaussian_blur(const Plane& chan, double sigma, BlurPath path) {
  const auto taps = gaussian_kernel(sigma);
  const bool use_fft = path == BlurPath::Fft || (path == BlurPath::Auto && sigma > 10.0);
  auto pass = use_fft ? blur_columns_fft : blur_columns_spatial;

  Plane cols(chan.rows(), chan.cols());
  pass(chan, cols, taps);
  // Second pass along x on the transposed plane so that the inner loop stays contiguous.
  Plane t = cols.transpose();
  Plane rows(t.rows(), t.cols());
  pass(t, rows, taps);
  return rows.transpose();
}

} // namespace bfore
