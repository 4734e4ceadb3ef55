#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "core/errors.hpp"

namespace rehand {

struct Rgb {
  uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

// 8-bit RGB raster, row major, top-left origin.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;  // width*height*3

  Image() = default;
  Image(int w, int h, Rgb fill = {0, 0, 0}) : width(w), height(h) {
    if (w <= 0 || h <= 0) throw_invalid_input("image dimensions must be positive");
    data.resize(static_cast<size_t>(w) * h * 3);
    for (size_t i = 0; i < data.size(); i += 3) {
      data[i] = fill.r;
      data[i + 1] = fill.g;
      data[i + 2] = fill.b;
    }
  }

  uint8_t* px(int x, int y) { return data.data() + (static_cast<size_t>(y) * width + x) * 3; }
  const uint8_t* px(int x, int y) const {
    return data.data() + (static_cast<size_t>(y) * width + x) * 3;
  }
  Rgb at(int x, int y) const {
    const uint8_t* p = px(x, y);
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, Rgb c) {
    uint8_t* p = px(x, y);
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }
  bool empty() const { return data.empty(); }
};

// 8-bit RGBA raster with the same layout. Alpha is a hard matte: 0 or 255.
struct ImageRgba {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;  // width*height*4

  ImageRgba() = default;
  ImageRgba(int w, int h) : width(w), height(h) {
    if (w <= 0 || h <= 0) throw_invalid_input("image dimensions must be positive");
    data.assign(static_cast<size_t>(w) * h * 4, 0);
  }
  uint8_t* px(int x, int y) { return data.data() + (static_cast<size_t>(y) * width + x) * 4; }
  const uint8_t* px(int x, int y) const {
    return data.data() + (static_cast<size_t>(y) * width + x) * 4;
  }
};

struct DepthBuffer {
  int width = 0;
  int height = 0;
  std::vector<double> z;  // camera-space depth in meters, +inf where empty

  DepthBuffer() = default;
  DepthBuffer(int w, int h, double fill) : width(w), height(h) {
    z.assign(static_cast<size_t>(w) * h, fill);
  }
  double& at(int x, int y) { return z[static_cast<size_t>(y) * width + x]; }
  double at(int x, int y) const { return z[static_cast<size_t>(y) * width + x]; }
};

// Round-half-up quantization used for every float -> 8 bit conversion.
inline uint8_t quantize_u8(double v) {
  double r = std::floor(v + 0.5);
  if (r < 0.0) r = 0.0;
  if (r > 255.0) r = 255.0;
  return static_cast<uint8_t>(r);
}

Rgb average_color(const Image& img);
Image resize_bilinear(const Image& img, int out_w, int out_h);

}  // namespace rehand
