#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace shapetrack {

/// Per-pixel metric depth (meters), row-major. Invalid pixels hold exactly 0.
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  DepthImage() = default;
  DepthImage(int w, int h, float fill = 0.0f);

  float at(int u, int v) const { return data[static_cast<std::size_t>(v) * width + u]; }
  float& at(int u, int v) { return data[static_cast<std::size_t>(v) * width + u]; }
  bool contains(int u, int v) const { return u >= 0 && v >= 0 && u < width && v < height; }
  std::size_t valid_count() const;

  bool operator==(const DepthImage&) const = default;
};

/// Binary mask, row-major, 0 or 1 per pixel.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  Mask() = default;
  Mask(int w, int h, bool fill = false);

  bool at(int u, int v) const { return data[static_cast<std::size_t>(v) * width + u] != 0; }
  void set(int u, int v, bool on) {
    data[static_cast<std::size_t>(v) * width + u] = on ? 1 : 0;
  }
  bool contains(int u, int v) const { return u >= 0 && v >= 0 && u < width && v < height; }
  std::size_t count() const;

  bool operator==(const Mask&) const = default;
};

// Depth persistence. The 16-bit PNG stores millimeters (rounded); the raw
// format is a little-endian header (u32 width, u32 height) followed by
// width*height little-endian f32 meters.
void write_depth_png16(const std::filesystem::path& path, const DepthImage& depth);
DepthImage read_depth_png16(const std::filesystem::path& path);
void write_depth_raw(const std::filesystem::path& path, const DepthImage& depth);
DepthImage read_depth_raw(const std::filesystem::path& path);

/// Dispatches on extension: ".png" -> 16-bit PNG, anything else -> raw f32.
DepthImage read_depth(const std::filesystem::path& path);

void write_mask_png(const std::filesystem::path& path, const Mask& mask);
Mask read_mask_png(const std::filesystem::path& path);

}  // namespace shapetrack
