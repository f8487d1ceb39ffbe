#include "shapetrack/image.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include "shapetrack/error.hpp"

namespace shapetrack {

DepthImage::DepthImage(int w, int h, float fill)
    : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {
  if (w < 0 || h < 0) throw InvalidArgument("DepthImage: negative dimensions");
}

std::size_t DepthImage::valid_count() const {
  return static_cast<std::size_t>(std::count_if(data.begin(), data.end(), [](float d) { return d > 0.0f; }));
}

Mask::Mask(int w, int h, bool fill)
    : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill ? 1 : 0) {
  if (w < 0 || h < 0) throw InvalidArgument("Mask: negative dimensions");
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count_if(data.begin(), data.end(), [](std::uint8_t m) { return m != 0; }));
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "raw depth I/O assumes a little-endian host");

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

// Minimal grayscale PNG writer/reader (8 or 16 bit) on top of libpng.
void write_gray_png(const std::filesystem::path& path, int width, int height, int bit_depth,
                    const std::vector<std::uint8_t>& rows_bytes) {
  FilePtr f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png: cannot create write struct for " + path.string());
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png: write failed for " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, width, height, bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(width) * (bit_depth / 8);
  for (int v = 0; v < height; ++v) {
    png_write_row(png, const_cast<png_bytep>(rows_bytes.data() + v * stride));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

struct GrayPng {
  int width = 0;
  int height = 0;
  int bit_depth = 0;
  std::vector<std::uint8_t> bytes;  // big-endian samples for 16-bit
};

GrayPng read_gray_png(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  std::array<unsigned char, 8> sig{};
  if (std::fread(sig.data(), 1, sig.size(), f.get()) != sig.size() || png_sig_cmp(sig.data(), 0, 8)) {
    throw IoError("png: not a PNG file: " + path.string());
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png: cannot create read struct for " + path.string());
  png_infop info = png_create_info_struct(png);
  GrayPng out;
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("png: read failed for " + path.string());
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const auto color = png_get_color_type(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  if (color != PNG_COLOR_TYPE_GRAY || (out.bit_depth != 8 && out.bit_depth != 16)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("png: expected 8- or 16-bit grayscale: " + path.string());
  }
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  const std::size_t stride = png_get_rowbytes(png, info);
  out.bytes.resize(stride * out.height);
  for (int v = 0; v < out.height; ++v) png_read_row(png, out.bytes.data() + v * stride, nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

}  // namespace

void write_depth_png16(const std::filesystem::path& path, const DepthImage& depth) {
  std::vector<std::uint8_t> bytes(depth.data.size() * 2);
  for (std::size_t i = 0; i < depth.data.size(); ++i) {
    const double mm = std::round(static_cast<double>(depth.data[i]) * 1000.0);
    if (mm < 0.0 || mm > 65535.0) throw IoError("png16: depth out of range in " + path.string());
    const auto value = static_cast<std::uint16_t>(mm);
    bytes[2 * i] = static_cast<std::uint8_t>(value >> 8);
    bytes[2 * i + 1] = static_cast<std::uint8_t>(value & 0xff);
  }
  write_gray_png(path, depth.width, depth.height, 16, bytes);
}

DepthImage read_depth_png16(const std::filesystem::path& path) {
  const GrayPng png = read_gray_png(path);
  if (png.bit_depth != 16) throw IoError("png16: expected 16-bit depth: " + path.string());
  DepthImage depth(png.width, png.height);
  for (std::size_t i = 0; i < depth.data.size(); ++i) {
    const unsigned value = (unsigned(png.bytes[2 * i]) << 8) | png.bytes[2 * i + 1];
    depth.data[i] = static_cast<float>(value / 1000.0);
  }
  return depth;
}

void write_depth_raw(const std::filesystem::path& path, const DepthImage& depth) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string());
  const std::uint32_t dims[2] = {static_cast<std::uint32_t>(depth.width),
                                 static_cast<std::uint32_t>(depth.height)};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  out.write(reinterpret_cast<const char*>(depth.data.data()),
            static_cast<std::streamsize>(depth.data.size() * sizeof(float)));
  if (!out) throw IoError("write failed: " + path.string());
}

DepthImage read_depth_raw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::uint32_t dims[2] = {0, 0};
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!in || dims[0] > 1u << 15 || dims[1] > 1u << 15) {
    throw IoError("raw depth: bad header in " + path.string());
  }
  DepthImage depth(static_cast<int>(dims[0]), static_cast<int>(dims[1]));
  in.read(reinterpret_cast<char*>(depth.data.data()),
          static_cast<std::streamsize>(depth.data.size() * sizeof(float)));
  if (!in) throw IoError("raw depth: truncated file " + path.string());
  return depth;
}

DepthImage read_depth(const std::filesystem::path& path) {
  if (path.extension() == ".png") return read_depth_png16(path);
  return read_depth_raw(path);
}

void write_mask_png(const std::filesystem::path& path, const Mask& mask) {
  std::vector<std::uint8_t> bytes(mask.data.size());
  std::transform(mask.data.begin(), mask.data.end(), bytes.begin(),
                 [](std::uint8_t m) { return static_cast<std::uint8_t>(m ? 255 : 0); });
  write_gray_png(path, mask.width, mask.height, 8, bytes);
}

Mask read_mask_png(const std::filesystem::path& path) {
  const GrayPng png = read_gray_png(path);
  Mask mask(png.width, png.height);
  const int bytes_per = png.bit_depth / 8;
  for (std::size_t i = 0; i < mask.data.size(); ++i) {
    mask.data[i] = png.bytes[i * bytes_per] != 0 ? 1 : 0;
  }
  return mask;
}

}  // namespace shapetrack
