#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "core/backgrounds.hpp"
#include "core/errors.hpp"
#include "core/hand_model.hpp"
#include "core/image_io.hpp"
#include "core/renderer.hpp"
#include "core/rng.hpp"

using namespace rehand;

namespace {

// Minimal stand-in template carrying only geometry, for micro-scenes.
HandTemplate scene_template(const MatX3& verts, const FacesX3& faces) {
  HandTemplate t;
  t.rest_vertices = verts;
  t.faces = faces;
  t.coarse_count = static_cast<int>(verts.rows());
  return t;
}

CameraIntrinsics simple_camera(int size = 64) {
  CameraIntrinsics mc;
  mc.fx = 100.0;
  mc.fy = 100.0;
  mc.cx = size / 2.0 - 0.5;
  mc.cy = size / 2.0 - 0.5;
  mc.width = size;
  mc.height = size;
  return mc;
}

int coverage(const ImageRgba& img) {
  int n = 0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) n += img.px(x, y)[3] ? 1 : 0;
  return n;
}

// 2D distance from a point to a triangle: zero inside, else distance to the
// nearest edge segment. Independent oracle for silhouette checks.
double point_triangle_distance(double px, double py, const double* xs, const double* ys) {
  auto cross = [](double ax, double ay, double bx, double by) { return ax * by - ay * bx; };
  double d0 = cross(xs[1] - xs[0], ys[1] - ys[0], px - xs[0], py - ys[0]);
  double d1 = cross(xs[2] - xs[1], ys[2] - ys[1], px - xs[1], py - ys[1]);
  double d2 = cross(xs[0] - xs[2], ys[0] - ys[2], px - xs[2], py - ys[2]);
  bool has_neg = d0 < 0 || d1 < 0 || d2 < 0;
  bool has_pos = d0 > 0 || d1 > 0 || d2 > 0;
  if (!(has_neg && has_pos)) return 0.0;
  double best = 1e30;
  for (int e = 0; e < 3; ++e) {
    double ax = xs[e], ay = ys[e];
    double bx = xs[(e + 1) % 3], by = ys[(e + 1) % 3];
    double vx = bx - ax, vy = by - ay;
    double len2 = vx * vx + vy * vy;
    double t = len2 > 0 ? std::clamp(((px - ax) * vx + (py - ay) * vy) / len2, 0.0, 1.0) : 0.0;
    double dx = px - (ax + t * vx), dy = py - (ay + t * vy);
    best = std::min(best, std::sqrt(dx * dx + dy * dy));
  }
  return best;
}

}  // namespace

TEST_CASE("square facing the camera covers exactly its analytic pixel area") {
  // Corners at x,y = ±0.1 m, z = 1 m, fx = 100: a 20 px square from 21.5 to
  // 41.5 in both axes. Pixel centers land in [21.5, 41.5); with the top-left
  // rule that is exactly 20x20 = 400 pixels, shared diagonal counted once.
  MatX3 v(4, 3);
  v << -0.1, -0.1, 1.0, 0.1, -0.1, 1.0, 0.1, 0.1, 1.0, -0.1, 0.1, 1.0;
  FacesX3 f(2, 3);
  f << 0, 1, 2, 0, 2, 3;
  HandTemplate t = scene_template(v, f);
  CameraIntrinsics mc = simple_camera();
  auto [img, depth] = rasterize({v, MeshResolution::Fine}, t, mc, {200, 100, 50});
  CHECK(coverage(img) == 400);

  // All covered pixels share one flat shade: the square faces the camera head
  // on, so intensity = ambient + diffuse * |light z|.
  double intensity = kAmbient + kDiffuse * 0.85 / std::sqrt(0.3 * 0.3 + 0.4 * 0.4 + 0.85 * 0.85);
  uint8_t expect_r = quantize_u8(200 * intensity);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      if (img.px(x, y)[3]) {
        CHECK(img.px(x, y)[0] == expect_r);
        CHECK(depth.at(x, y) == doctest::Approx(1.0).epsilon(1e-12));
      }
}

TEST_CASE("adjacent triangles claim shared-edge pixels exactly once") {
  MatX3 v(4, 3);
  v << -0.13, -0.11, 1.0, 0.09, -0.12, 1.0, 0.12, 0.14, 1.0, -0.1, 0.1, 1.0;
  FacesX3 fa(1, 3), fb(1, 3), fboth(2, 3);
  fa << 0, 1, 2;
  fb << 0, 2, 3;
  fboth << 0, 1, 2, 0, 2, 3;
  CameraIntrinsics mc = simple_camera();
  auto [ia, da] = rasterize({v, MeshResolution::Fine}, scene_template(v, fa), mc, {255, 255, 255});
  auto [ib, db] = rasterize({v, MeshResolution::Fine}, scene_template(v, fb), mc, {255, 255, 255});
  auto [iu, du] =
      rasterize({v, MeshResolution::Fine}, scene_template(v, fboth), mc, {255, 255, 255});
  for (int y = 0; y < mc.height; ++y)
    for (int x = 0; x < mc.width; ++x) {
      bool a = ia.px(x, y)[3] != 0, b = ib.px(x, y)[3] != 0, u = iu.px(x, y)[3] != 0;
      CHECK_FALSE((a && b));  // no double claim along the diagonal
      CHECK(u == (a || b));   // and no gap either
    }
}

TEST_CASE("nearer of two overlapping triangles wins the depth test") {
  MatX3 v(6, 3);
  // Two triangles over the same screen center, one at z=1, a larger one at
  // z=2 that sticks out around it.
  v << -0.1, -0.1, 1.0, 0.1, -0.1, 1.0, 0.0, 0.12, 1.0,
      -0.3, -0.3, 2.0, 0.3, -0.3, 2.0, 0.0, 0.36, 2.0;
  FacesX3 f(2, 3);
  f << 3, 4, 5, 0, 1, 2;  // far triangle drawn first; near one must overwrite
  HandTemplate t = scene_template(v, f);
  CameraIntrinsics mc = simple_camera();
  auto [img, depth] = rasterize({v, MeshResolution::Fine}, t, mc, {255, 255, 255});
  // Screen center is inside both; depth must be the near value.
  CHECK(depth.at(mc.width / 2, mc.height / 2) == doctest::Approx(1.0).epsilon(1e-9));
  int near_px = 0, far_px = 0;
  for (int y = 0; y < mc.height; ++y)
    for (int x = 0; x < mc.width; ++x)
      if (img.px(x, y)[3]) (depth.at(x, y) < 1.5 ? near_px : far_px)++;
  CHECK(near_px > 0);
  CHECK(far_px > 0);
}

TEST_CASE("mesh fully behind the camera is an error, partial skips") {
  MatX3 v(3, 3);
  v << 0, 0, -1.0, 0.1, 0, -1.0, 0, 0.1, -1.0;
  FacesX3 f(1, 3);
  f << 0, 1, 2;
  HandTemplate t = scene_template(v, f);
  CameraIntrinsics mc = simple_camera();
  try {
    rasterize({v, MeshResolution::Fine}, t, mc, {255, 255, 255});
    FAIL("expected a geometry error");
  } catch (const RehandError& e) {
    CHECK(e.kind() == ErrorKind::Geometry);
  }

  MatX3 v2(3, 3);
  v2 << 0, 0, 1.0, 0.1, 0, 1.0, 0, 0.1, -1.0;  // one vertex behind: skip quietly
  auto [img, depth] = rasterize({v2, MeshResolution::Fine}, scene_template(v2, f), mc, {9, 9, 9});
  CHECK(coverage(img) == 0);
}

TEST_CASE("zero-area triangles are skipped") {
  MatX3 v(3, 3);
  v << 0, 0, 1.0, 0.1, 0, 1.0, 0.2, 0, 1.0;  // collinear
  FacesX3 f(1, 3);
  f << 0, 1, 2;
  auto [img, depth] =
      rasterize({v, MeshResolution::Fine}, scene_template(v, f), simple_camera(), {9, 9, 9});
  CHECK(coverage(img) == 0);
}

TEST_CASE("composite obeys the hard matte per pixel") {
  Image bg(8, 8);
  Rng rng(3);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      bg.set(x, y,
             {static_cast<uint8_t>(rng.below(256)), static_cast<uint8_t>(rng.below(256)),
              static_cast<uint8_t>(rng.below(256))});
  ImageRgba fg(8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      uint8_t* p = fg.px(x, y);
      bool cover = rng.below(2) == 0;
      p[0] = 10;
      p[1] = 20;
      p[2] = 30;
      p[3] = cover ? 255 : 0;
    }
  Image out = composite(fg, bg);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      Rgb expect = fg.px(x, y)[3] ? Rgb{10, 20, 30} : bg.at(x, y);
      CHECK(out.at(x, y) == expect);
    }

  Image wrong(4, 4);
  CHECK_THROWS_AS(composite(fg, wrong), RehandError);
}

TEST_CASE("synthetic rendering is deterministic and replays the selection oracle") {
  auto dir = std::filesystem::temp_directory_path() / "rehand_bg_test";
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "backgrounds.txt");
  manifest << "# test corpus\n";
  const int kCount = 10;
  for (int i = 0; i < kCount; ++i) {
    // Uniform color unique per background so the chosen index is readable
    // back from any uncovered pixel.
    Image img(16, 16, {static_cast<uint8_t>(20 + i * 20), 10, 10});
    write_png(img, dir / ("bg" + std::to_string(i) + ".png"));
    manifest << "bg" << i << ".png\n";
  }
  manifest.close();
  BackgroundCorpus corpus = BackgroundCorpus::load(dir / "backgrounds.txt");
  CHECK(corpus.size() == kCount);

  HandTemplate t = build_default_template();
  GeneratedSample s = generate_sample(t, 5, {});

  for (uint64_t seed : {7ull, 8ull, 12345ull}) {
    Image a = render_synthetic(s.fine, t, s.intrinsics, corpus, seed);
    Image b = render_synthetic(s.fine, t, s.intrinsics, corpus, seed);
    CHECK(a.data == b.data);

    uint64_t expect_idx = Rng::derive(seed, kBackgroundStreamTag).below(kCount);
    CHECK(a.at(0, 0).r == 20 + expect_idx * 20);  // corner is never hand
  }
}

TEST_CASE("uniform corpus tints the hand with the background color") {
  auto dir = std::filesystem::temp_directory_path() / "rehand_bg_uniform";
  std::filesystem::create_directories(dir);
  Image gray(16, 16, {90, 90, 90});
  write_png(gray, dir / "gray.png");
  std::ofstream manifest(dir / "m.txt");
  manifest << "gray.png\n";
  manifest.close();
  BackgroundCorpus corpus = BackgroundCorpus::load(dir / "m.txt");

  HandTemplate t = build_default_template();
  GeneratedSample s = generate_sample(t, 11, {});
  auto [fg, depth] = rasterize(s.fine, t, s.intrinsics, average_color(gray));
  Image out = render_synthetic(s.fine, t, s.intrinsics, corpus, 3);
  // Covered pixels must be shaded gray (base 90 scaled by intensity <= 1),
  // uncovered ones exactly the background.
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) {
      Rgb c = out.at(x, y);
      if (fg.px(x, y)[3]) {
        CHECK(c.r == c.g);
        CHECK(c.g == c.b);
        CHECK(c.r <= 90);
      } else {
        CHECK(c == Rgb{90, 90, 90});
      }
    }
}

TEST_CASE("silhouette stays within a pixel of projected geometry") {
  HandTemplate t = build_default_template();
  for (uint64_t seed = 100; seed < 103; ++seed) {
    GeneratedSample s = generate_sample(t, seed, {});
    auto [img, depth] = rasterize(s.fine, t, s.intrinsics, {180, 140, 120});
    MatX2 uv = project(s.fine.vertices, s.intrinsics);

    // Coverage bounding box (pixel extents: a covered pixel spans one unit)
    // vs projected vertex bounding box, within 1 px on each side.
    double cov_min_x = 1e9, cov_max_x = -1e9, cov_min_y = 1e9, cov_max_y = -1e9;
    int covered = 0;
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        if (img.px(x, y)[3]) {
          ++covered;
          cov_min_x = std::min(cov_min_x, static_cast<double>(x));
          cov_max_x = std::max(cov_max_x, x + 1.0);
          cov_min_y = std::min(cov_min_y, static_cast<double>(y));
          cov_max_y = std::max(cov_max_y, y + 1.0);
        }
    REQUIRE(covered > 100);
    CHECK(std::abs(cov_min_x - uv.col(0).minCoeff()) <= 1.0);
    CHECK(std::abs(cov_max_x - uv.col(0).maxCoeff()) <= 1.0);
    CHECK(std::abs(cov_min_y - uv.col(1).minCoeff()) <= 1.0);
    CHECK(std::abs(cov_max_y - uv.col(1).maxCoeff()) <= 1.0);

    // Every covered pixel center lies within 1 px of some projected triangle.
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        if (!img.px(x, y)[3]) continue;
        double best = 1e30;
        for (Eigen::Index f = 0; f < t.faces.rows() && best > 1.0; ++f) {
          double xs[3], ys[3];
          for (int e = 0; e < 3; ++e) {
            xs[e] = uv(t.faces(f, e), 0);
            ys[e] = uv(t.faces(f, e), 1);
          }
          best = std::min(best, point_triangle_distance(x + 0.5, y + 0.5, xs, ys));
        }
        CHECK(best <= 1.0);
      }
  }
}

TEST_CASE("procedural backgrounds are deterministic and varied") {
  Image a = make_background(4, 32, 32);
  Image b = make_background(4, 32, 32);
  CHECK(a.data == b.data);
  int distinct = 0;
  Image prev = make_background(0, 32, 32);
  for (uint64_t s = 1; s < 8; ++s) {
    Image cur = make_background(s, 32, 32);
    if (cur.data != prev.data) ++distinct;
    prev = cur;
  }
  CHECK(distinct == 7);
}

TEST_CASE("png round-trip preserves bytes") {
  auto dir = std::filesystem::temp_directory_path() / "rehand_png_test";
  std::filesystem::create_directories(dir);
  Image img = make_background(99, 24, 18);
  write_png(img, dir / "x.png");
  Image back = read_png(dir / "x.png");
  CHECK(back.width == img.width);
  CHECK(back.height == img.height);
  CHECK(back.data == img.data);
  CHECK_THROWS_AS(read_png(dir / "missing.png"), RehandError);
}

TEST_CASE("background manifest validates its entries") {
  auto dir = std::filesystem::temp_directory_path() / "rehand_bg_bad";
  std::filesystem::create_directories(dir);
  std::ofstream empty(dir / "empty.txt");
  empty << "# nothing here\n\n";
  empty.close();
  CHECK_THROWS_AS(BackgroundCorpus::load(dir / "empty.txt"), RehandError);

  std::ofstream missing(dir / "missing.txt");
  missing << "does_not_exist.png\n";
  missing.close();
  CHECK_THROWS_AS(BackgroundCorpus::load(dir / "missing.txt"), RehandError);
}
