#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <filesystem>
#include <string_view>
#include <utility>
#include <vector>

namespace bfore {

/// One image channel. Rows index y, columns index x.
using Plane = Eigen::ArrayXXd;

enum class ColorSpace { RGB, HSV, GRAY };

std::string_view to_string(ColorSpace cs);

/// Boundary handling for spatial kernels. Only symmetric reflection
/// (`dcba|abcd|dcba`) is supported; it is periodic with period 2n, which is
/// what lets the FFT blur and the direct blur agree exactly.
enum class BoundaryMode { Reflect };

/// Planar floating-point raster in [0, 1].
///
/// Invariants: channels is 1 or 3, channels == 1 iff colorspace == GRAY,
/// width and height are at least `kMinSide`, every sample is finite and in [0, 1].
class ImageBuffer {
public:
  static constexpr int kMinSide = 8;

  ImageBuffer() = default;
  ImageBuffer(int width, int height, ColorSpace cs, double fill = 0.0);

  /// Takes ownership of the planes; samples are clamped to [0, 1].
  /// Throws ContractError on shape mismatch or non-finite samples.
  static ImageBuffer from_planes(std::vector<Plane> planes, ColorSpace cs);
  static ImageBuffer gray(Plane plane) { return from_planes({std::move(plane)}, ColorSpace::GRAY); }
  static ImageBuffer rgb(Plane r, Plane g, Plane b) {
    return from_planes({std::move(r), std::move(g), std::move(b)}, ColorSpace::RGB);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return static_cast<int>(planes_.size()); }
  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }
  ColorSpace colorspace() const noexcept { return colorspace_; }
  bool empty() const noexcept { return planes_.empty(); }

  const Plane& channel(int c) const { return planes_.at(static_cast<std::size_t>(c)); }
  const std::vector<Plane>& planes() const noexcept { return planes_; }

  /// Replaces one channel (clamped to [0, 1]).
  void set_channel(int c, Plane plane);

  /// Per-pixel maximum over channels; the HSV value for RGB images.
  Plane value() const;

  /// Rec.601 luma for RGB, the single channel for GRAY.
  Plane luma() const;

  bool operator==(const ImageBuffer& other) const;

private:
  int width_ = 0;
  int height_ = 0;
  ColorSpace colorspace_ = ColorSpace::GRAY;
  std::vector<Plane> planes_;
};

/// Throws ContractError unless `img` carries the expected colorspace.
void require_colorspace(const ImageBuffer& img, ColorSpace expected, std::string_view op);

ImageBuffer rgb_to_hsv(const ImageBuffer& img);
ImageBuffer hsv_to_rgb(const ImageBuffer& img);

/// Per-pixel HSV triple, H in [0, 1).
std::array<double, 3> rgb_to_hsv_pixel(double r, double g, double b) noexcept;
std::array<double, 3> hsv_to_rgb_pixel(double h, double s, double v) noexcept;

/// Maps an arbitrary integer coordinate into [0, n) by symmetric reflection.
inline int reflect_index(long i, int n) noexcept {
  const long period = 2L * n;
  long m = i % period;
  if (m < 0) m += period;
  return static_cast<int>(m < n ? m : period - 1 - m);
}

struct LocalStats {
  Plane mean;
  Plane stddev;
};

/// Mean and population standard deviation over an M x M reflect-padded window.
/// M must be odd and in [3, 15].
LocalStats local_stats(const Plane& chan, int kernel_size);

/// Normalised Gaussian taps for offsets -r..r, r = ceil(3 sigma).
std::vector<double> gaussian_kernel(double sigma);

/// Applies the same symmetric 1-D kernel along y then x, reflect-padded.
Plane filter_separable(const Plane& chan, const std::vector<double>& taps);

enum class BlurPath { Auto, Spatial, Fft };

/// Separable Gaussian blur with symmetric reflection. `Auto` uses the FFT
/// path for sigma > 10 and direct convolution otherwise.
Plane gaussian_blur(const Plane& chan, double sigma, BlurPath path = BlurPath::Auto);

/// Reads an 8-bit PNG or BMP. Gray files are expanded to RGB.
ImageBuffer load_image(const std::filesystem::path& path);

/// Writes an 8-bit PNG or BMP (chosen by extension), quantising with round-half-up.
void save_image(const ImageBuffer& img, const std::filesystem::path& path);

/// Round-half-up quantisation of a [0, 1] sample to 0..255.
inline unsigned char quantize(double v) noexcept {
  const double x = v * 255.0 + 0.5;
  if (!(x > 0.0)) return 0;
  if (x >= 255.0) return 255;
  return static_cast<unsigned char>(x);
}

} // namespace bfore
