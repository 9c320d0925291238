#include "bfore/errors.hpp"
#include "bfore/image.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace bfore {

namespace fs = std::filesystem;

namespace {

std::string lower_ext(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

ImageBuffer from_interleaved(const std::vector<unsigned char>& px, int w, int h) {
  if (w <= 0 || h <= 0) throw DecodeError("zero-dimension image");
  std::vector<Plane> planes(3, Plane(h, w));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        planes[static_cast<std::size_t>(c)](y, x) = px[(static_cast<std::size_t>(y) * w + x) * 3 + c] / 255.0;
  return ImageBuffer::from_planes(std::move(planes), ColorSpace::RGB);
}

std::vector<unsigned char> to_interleaved(const ImageBuffer& img) {
  const int w = img.width();
  const int h = img.height();
  std::vector<unsigned char> px(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        const int src = img.channels() == 1 ? 0 : c;
        px[(static_cast<std::size_t>(y) * w + x) * 3 + c] = quantize(img.channel(src)(y, x));
      }
  return px;
}

// ---------------------------------------------------------------- PNG

ImageBuffer read_png(const fs::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw DecodeError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  if (image.width == 0 || image.height == 0) {
    png_image_free(&image);
    throw DecodeError("zero-dimension image: " + path.string());
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw DecodeError("cannot decode PNG " + path.string() + ": " + msg);
  }
  return from_interleaved(buf, static_cast<int>(image.width), static_cast<int>(image.height));
}

void write_png(const ImageBuffer& img, const fs::path& path) {
  const auto px = to_interleaved(img);
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.c_str(), 0, px.data(), 0, nullptr)) {
    throw IoError("cannot write PNG " + path.string() + ": " + image.message);
  }
}

// ---------------------------------------------------------------- BMP

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
void put32(std::vector<unsigned char>& b, std::size_t at, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b[at + i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
}
void put16(std::vector<unsigned char>& b, std::size_t at, std::uint16_t v) {
  b[at] = static_cast<unsigned char>(v & 0xFF);
  b[at + 1] = static_cast<unsigned char>(v >> 8);
}

ImageBuffer read_bmp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.size() < 54 || data[0] != 'B' || data[1] != 'M') throw DecodeError("not a BMP file: " + path.string());

  const std::uint32_t offset = le32(&data[10]);
  const std::uint32_t header_size = le32(&data[14]);
  if (header_size < 40) throw DecodeError("unsupported BMP header: " + path.string());
  const auto width = static_cast<std::int32_t>(le32(&data[18]));
  const auto raw_height = static_cast<std::int32_t>(le32(&data[22]));
  const std::uint16_t bpp = le16(&data[28]);
  const std::uint32_t compression = le32(&data[30]);
  if (compression != 0) throw DecodeError("compressed BMP is not supported: " + path.string());
  if (bpp != 24 && bpp != 32 && bpp != 8) throw DecodeError("unsupported BMP bit depth " + std::to_string(bpp));
  if (width <= 0 || raw_height == 0) throw DecodeError("zero-dimension image: " + path.string());

  const bool bottom_up = raw_height > 0;
  const int w = width;
  const int h = bottom_up ? raw_height : -raw_height;
  const std::size_t stride = ((static_cast<std::size_t>(w) * bpp + 31) / 32) * 4;
  if (offset + stride * static_cast<std::size_t>(h) > data.size()) throw DecodeError("truncated BMP: " + path.string());

  std::vector<std::array<unsigned char, 3>> palette;
  if (bpp == 8) {
    std::uint32_t colors = le32(&data[46]);
    if (colors == 0) colors = 256;
    const std::size_t pal_at = 14 + header_size;
    if (pal_at + colors * 4 > data.size()) throw DecodeError("truncated BMP palette: " + path.string());
    for (std::uint32_t i = 0; i < colors; ++i)
      palette.push_back({data[pal_at + i * 4 + 2], data[pal_at + i * 4 + 1], data[pal_at + i * 4]});
  }

  std::vector<unsigned char> px(static_cast<std::size_t>(w) * h * 3);
  for (int row = 0; row < h; ++row) {
    const int y = bottom_up ? h - 1 - row : row;
    const unsigned char* src = &data[offset + stride * static_cast<std::size_t>(row)];
    for (int x = 0; x < w; ++x) {
      unsigned char* dst = &px[(static_cast<std::size_t>(y) * w + x) * 3];
      if (bpp == 8) {
        const unsigned idx = src[x];
        if (idx >= palette.size()) throw DecodeError("BMP palette index out of range");
        std::copy(palette[idx].begin(), palette[idx].end(), dst);
      } else {
        const unsigned char* s = src + static_cast<std::size_t>(x) * (bpp / 8);
        dst[0] = s[2];
        dst[1] = s[1];
        dst[2] = s[0];
      }
    }
  }
  return from_interleaved(px, w, h);
}

void write_bmp(const ImageBuffer& img, const fs::path& path) {
  const int w = img.width();
  const int h = img.height();
  const auto px = to_interleaved(img);
  const std::size_t stride = ((static_cast<std::size_t>(w) * 24 + 31) / 32) * 4;
  std::vector<unsigned char> out(54 + stride * static_cast<std::size_t>(h), 0);
  out[0] = 'B';
  out[1] = 'M';
  put32(out, 2, static_cast<std::uint32_t>(out.size()));
  put32(out, 10, 54);
  put32(out, 14, 40);
  put32(out, 18, static_cast<std::uint32_t>(w));
  put32(out, 22, static_cast<std::uint32_t>(h));
  put16(out, 26, 1);
  put16(out, 28, 24);
  put32(out, 34, static_cast<std::uint32_t>(stride * static_cast<std::size_t>(h)));
  for (int row = 0; row < h; ++row) {
    const int y = h - 1 - row;
    unsigned char* dst = &out[54 + stride * static_cast<std::size_t>(row)];
    for (int x = 0; x < w; ++x) {
      const unsigned char* s = &px[(static_cast<std::size_t>(y) * w + x) * 3];
      dst[x * 3] = s[2];
      dst[x * 3 + 1] = s[1];
      dst[x * 3 + 2] = s[0];
    }
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("short write to " + path.string());
}

} // namespace

ImageBuffer load_image(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("no such file: " + path.string());
  const auto ext = lower_ext(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".bmp") return read_bmp(path);
  throw DecodeError("unsupported image format '" + ext + "' (PNG and BMP only): " + path.string());
}

void save_image(const ImageBuffer& img, const fs::path& path) {
  if (img.empty()) throw ContractError("save_image: empty image");
  if (img.colorspace() == ColorSpace::HSV) throw ContractError("save_image: convert HSV to RGB first");
  const auto ext = lower_ext(path);
  if (ext == ".png")
    write_png(img, path);
  else if (ext == ".bmp")
    write_bmp(img, path);
  else
    throw IoError("unsupported output format '" + ext + "' (PNG and BMP only)");
}

} // namespace bfore
