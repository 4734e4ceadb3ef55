#include "core/backgrounds.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "core/rng.hpp"

namespace rehand {
namespace {

Rgb random_color(Rng& rng, int lo, int hi) {
  return {static_cast<uint8_t>(lo + static_cast<int>(rng.below(static_cast<uint64_t>(hi - lo)))),
          static_cast<uint8_t>(lo + static_cast<int>(rng.below(static_cast<uint64_t>(hi - lo)))),
          static_cast<uint8_t>(lo + static_cast<int>(rng.below(static_cast<uint64_t>(hi - lo))))};
}

double lerp(double a, double b, double t) { return a + (b - a) * t; }

Image gradient(Rng& rng, int w, int h) {
  Rgb c0 = random_color(rng, 20, 236);
  Rgb c1 = random_color(rng, 20, 236);
  bool horizontal = rng.below(2) == 0;
  Image img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double t = horizontal ? (w > 1 ? static_cast<double>(x) / (w - 1) : 0.0)
                            : (h > 1 ? static_cast<double>(y) / (h - 1) : 0.0);
      img.set(x, y,
              {quantize_u8(lerp(c0.r, c1.r, t)), quantize_u8(lerp(c0.g, c1.g, t)),
               quantize_u8(lerp(c0.b, c1.b, t))});
    }
  return img;
}

Image value_noise(Rng& rng, int w, int h) {
  const int cells = 5;
  std::vector<Rgb> grid(static_cast<size_t>((cells + 1) * (cells + 1)));
  for (auto& c : grid) c = random_color(rng, 10, 246);
  Image img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double gx = static_cast<double>(x) / w * cells;
      double gy = static_cast<double>(y) / h * cells;
      int cx = std::min(static_cast<int>(gx), cells - 1);
      int cy = std::min(static_cast<int>(gy), cells - 1);
      double tx = gx - cx, ty = gy - cy;
      auto at = [&](int i, int j) { return grid[static_cast<size_t>(j * (cells + 1) + i)]; };
      auto mix = [&](auto get) {
        double top = lerp(get(at(cx, cy)), get(at(cx + 1, cy)), tx);
        double bot = lerp(get(at(cx, cy + 1)), get(at(cx + 1, cy + 1)), tx);
        return quantize_u8(lerp(top, bot, ty));
      };
      img.set(x, y,
              {mix([](Rgb c) { return static_cast<double>(c.r); }),
               mix([](Rgb c) { return static_cast<double>(c.g); }),
               mix([](Rgb c) { return static_cast<double>(c.b); })});
    }
  return img;
}

Image stripes(Rng& rng, int w, int h) {
  Rgb c0 = random_color(rng, 20, 236);
  Rgb c1 = random_color(rng, 20, 236);
  int period = 4 + static_cast<int>(rng.below(13));
  bool horizontal = rng.below(2) == 0;
  Image img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int band = (horizontal ? y : x) / period;
      img.set(x, y, band % 2 ? c1 : c0);
    }
  return img;
}

Image blobs(Rng& rng, int w, int h) {
  Image img(w, h, random_color(rng, 20, 236));
  int count = 5 + static_cast<int>(rng.below(8));
  for (int i = 0; i < count; ++i) {
    Rgb c = random_color(rng, 10, 246);
    int cx = static_cast<int>(rng.below(static_cast<uint64_t>(w)));
    int cy = static_cast<int>(rng.below(static_cast<uint64_t>(h)));
    int r = 4 + static_cast<int>(rng.below(static_cast<uint64_t>(std::max(2, w / 4))));
    for (int y = std::max(0, cy - r); y <= std::min(h - 1, cy + r); ++y)
      for (int x = std::max(0, cx - r); x <= std::min(w - 1, cx + r); ++x)
        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) img.set(x, y, c);
  }
  return img;
}

}  // namespace

Image make_background(uint64_t seed, int width, int height) {
  Rng rng(seed_mix(seed, 0xBA6Du));
  switch (rng.below(4)) {
    case 0: return gradient(rng, width, height);
    case 1: return value_noise(rng, width, height);
    case 2: return stripes(rng, width, height);
    default: return blobs(rng, width, height);
  }
}

}  // namespace rehand
