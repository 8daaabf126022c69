#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "warpkit/geometry.hpp"

namespace warpkit {

/// Interleaved float raster in [0,1], 1 (gray) or 3 (RGB) channels.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<float> data;

  Image() = default;
  Image(int w, int h, int c) : width(w), height(h), channels(c), data(size_t(w) * h * c, 0.f) {}

  float& at(int x, int y, int c) { return data[(size_t(y) * width + x) * channels + c]; }
  float at(int x, int y, int c) const { return data[(size_t(y) * width + x) * channels + c]; }
  ImageSize size() const { return {width, height}; }
  bool empty() const { return data.empty(); }

  Image to_gray() const;
};

/// Binary raster; 0 = background, nonzero = foreground.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;

  Mask() = default;
  Mask(int w, int h) : width(w), height(h), data(size_t(w) * h, 0) {}

  bool foreground(int x, int y) const { return data[size_t(y) * width + x] != 0; }
  void set(int x, int y, bool fg) { data[size_t(y) * width + x] = fg ? 255 : 0; }
  ImageSize size() const { return {width, height}; }
  size_t foreground_count() const;
};

/// PNG or JPEG, selected by file signature. Pixels scaled to [0,1].
Image load_image(const std::filesystem::path& path);
void save_png(const std::filesystem::path& path, const Image& img);

/// Masks are 8-bit PNG; any nonzero sample is foreground.
Mask load_mask(const std::filesystem::path& path);
void save_mask(const std::filesystem::path& path, const Mask& mask);

/// Bilinear sample at fractional pixel coordinates; 0 outside the raster.
float bilinear_sample(const Image& img, double x, double y, int channel);

}  // namespace warpkit
