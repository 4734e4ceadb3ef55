#include "core/image.hpp"

#include <cmath>

namespace rehand {

Rgb average_color(const Image& img) {
  if (img.empty()) throw_invalid_input("average_color: empty image");
  uint64_t sum[3] = {0, 0, 0};
  const size_t n = static_cast<size_t>(img.width) * img.height;
  for (size_t i = 0; i < n; ++i) {
    sum[0] += img.data[i * 3];
    sum[1] += img.data[i * 3 + 1];
    sum[2] += img.data[i * 3 + 2];
  }
  auto mean = [n](uint64_t s) {
    return quantize_u8(static_cast<double>(s) / static_cast<double>(n));
  };
  return {mean(sum[0]), mean(sum[1]), mean(sum[2])};
}

Image resize_bilinear(const Image& img, int out_w, int out_h) {
  if (out_w <= 0 || out_h <= 0) throw_invalid_input("resize_bilinear: bad target size");
  if (img.empty()) throw_invalid_input("resize_bilinear: empty image");
  if (out_w == img.width && out_h == img.height) return img;

  Image out(out_w, out_h);
  const double sx = static_cast<double>(img.width) / out_w;
  const double sy = static_cast<double>(img.height) / out_h;
  for (int y = 0; y < out_h; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    double wy = fy - y0;
    int y1 = y0 + 1;
    y0 = std::clamp(y0, 0, img.height - 1);
    y1 = std::clamp(y1, 0, img.height - 1);
    for (int x = 0; x < out_w; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      double wx = fx - x0;
      int x1 = x0 + 1;
      x0 = std::clamp(x0, 0, img.width - 1);
      x1 = std::clamp(x1, 0, img.width - 1);
      const uint8_t* p00 = img.px(x0, y0);
      const uint8_t* p10 = img.px(x1, y0);
      const uint8_t* p01 = img.px(x0, y1);
      const uint8_t* p11 = img.px(x1, y1);
      uint8_t* dst = out.px(x, y);
      for (int c = 0; c < 3; ++c) {
        double top = p00[c] * (1.0 - wx) + p10[c] * wx;
        double bot = p01[c] * (1.0 - wx) + p11[c] * wx;
        dst[c] = quantize_u8(top * (1.0 - wy) + bot * wy);
      }
    }
  }
  return out;
}

}  // namespace rehand
