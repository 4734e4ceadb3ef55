#include "core/renderer.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "core/errors.hpp"
#include "core/image_io.hpp"
#include "core/rng.hpp"

namespace rehand {
namespace {

const Vec3 kLightDir = Vec3(-0.3, -0.4, -0.85).normalized();

double orient2d(double ax, double ay, double bx, double by, double px, double py) {
  return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

// Top-left fill rule for counter-clockwise screen triangles (y down): top
// edges run exactly horizontal toward -x, left edges run toward +y.
bool is_top_left(double ax, double ay, double bx, double by) {
  if (ay == by && bx < ax) return true;
  return by > ay;
}

}  // namespace

BackgroundCorpus BackgroundCorpus::load(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw_io("cannot open background manifest: " + manifest.string());
  BackgroundCorpus corpus;
  const auto dir = manifest.parent_path();
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) continue;
    auto end = line.find_last_not_of(" \t\r");
    std::string rel = line.substr(begin, end - begin + 1);
    corpus.images_.push_back(read_png(dir / rel));
    corpus.names_.push_back(rel);
  }
  if (corpus.images_.empty())
    throw_invalid_config("background manifest lists no images: " + manifest.string());
  return corpus;
}

std::pair<ImageRgba, DepthBuffer> rasterize(const HandMesh& mesh, const HandTemplate& t,
                                            const CameraIntrinsics& mc, Rgb base_color) {
  if (mesh.resolution != MeshResolution::Fine)
    throw_invalid_input("rasterize: mesh must be fine resolution");
  if (mesh.vertices.rows() != t.v_fine())
    throw_invalid_input("rasterize: vertex count does not match template");
  mc.validate();

  const Eigen::Index n = mesh.vertices.rows();
  std::vector<double> su(static_cast<size_t>(n)), sv(static_cast<size_t>(n)),
      sz(static_cast<size_t>(n));
  int behind = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double z = mesh.vertices(i, 2);
    sz[static_cast<size_t>(i)] = z;
    if (z <= kDefaultZMin) {
      ++behind;
      continue;
    }
    su[static_cast<size_t>(i)] = mc.fx * mesh.vertices(i, 0) / z + mc.cx;
    sv[static_cast<size_t>(i)] = mc.fy * mesh.vertices(i, 1) / z + mc.cy;
  }
  if (behind == n) throw_geometry("rasterize: mesh entirely behind the camera");

  ImageRgba out(mc.width, mc.height);
  DepthBuffer depth(mc.width, mc.height, std::numeric_limits<double>::infinity());

  for (Eigen::Index f = 0; f < t.faces.rows(); ++f) {
    int i0 = t.faces(f, 0), i1 = t.faces(f, 1), i2 = t.faces(f, 2);
    if (sz[static_cast<size_t>(i0)] <= kDefaultZMin || sz[static_cast<size_t>(i1)] <= kDefaultZMin ||
        sz[static_cast<size_t>(i2)] <= kDefaultZMin)
      continue;

    // Flat Lambertian shading from the camera-space normal, oriented toward
    // the camera so either winding shades the same.
    Vec3 a = mesh.vertices.row(i0).transpose();
    Vec3 b = mesh.vertices.row(i1).transpose();
    Vec3 c = mesh.vertices.row(i2).transpose();
    Vec3 normal = (b - a).cross(c - a);
    double nlen = normal.norm();
    double intensity = kAmbient;
    if (nlen > 0.0) {
      normal /= nlen;
      if (normal.z() > 0) normal = -normal;
      intensity += kDiffuse * std::max(0.0, normal.dot(kLightDir));
    }
    const Rgb shade{quantize_u8(base_color.r * intensity), quantize_u8(base_color.g * intensity),
                    quantize_u8(base_color.b * intensity)};

    double x0 = su[static_cast<size_t>(i0)], y0 = sv[static_cast<size_t>(i0)],
           z0 = sz[static_cast<size_t>(i0)];
    double x1 = su[static_cast<size_t>(i1)], y1 = sv[static_cast<size_t>(i1)],
           z1 = sz[static_cast<size_t>(i1)];
    double x2 = su[static_cast<size_t>(i2)], y2 = sv[static_cast<size_t>(i2)],
           z2 = sz[static_cast<size_t>(i2)];
    double area = orient2d(x0, y0, x1, y1, x2, y2);
    if (area == 0.0) continue;
    if (area < 0.0) {
      std::swap(x1, x2);
      std::swap(y1, y2);
      std::swap(z1, z2);
      area = -area;
    }

    int min_x = std::max(0, static_cast<int>(std::floor(std::min({x0, x1, x2}) - 0.5)));
    int max_x = std::min(mc.width - 1, static_cast<int>(std::ceil(std::max({x0, x1, x2}))));
    int min_y = std::max(0, static_cast<int>(std::floor(std::min({y0, y1, y2}) - 0.5)));
    int max_y = std::min(mc.height - 1, static_cast<int>(std::ceil(std::max({y0, y1, y2}))));

    const bool tl0 = is_top_left(x1, y1, x2, y2);
    const bool tl1 = is_top_left(x2, y2, x0, y0);
    const bool tl2 = is_top_left(x0, y0, x1, y1);

    for (int py = min_y; py <= max_y; ++py) {
      for (int px = min_x; px <= max_x; ++px) {
        double sx = px + 0.5, sy = py + 0.5;
        double w0 = orient2d(x1, y1, x2, y2, sx, sy);
        double w1 = orient2d(x2, y2, x0, y0, sx, sy);
        double w2 = orient2d(x0, y0, x1, y1, sx, sy);
        bool inside = (w0 > 0 || (w0 == 0 && tl0)) && (w1 > 0 || (w1 == 0 && tl1)) &&
                      (w2 > 0 || (w2 == 0 && tl2));
        if (!inside) continue;
        double inv_z = (w0 / z0 + w1 / z1 + w2 / z2) / area;
        double z = 1.0 / inv_z;
        if (z < depth.at(px, py)) {
          depth.at(px, py) = z;
          uint8_t* p = out.px(px, py);
          p[0] = shade.r;
          p[1] = shade.g;
          p[2] = shade.b;
          p[3] = 255;
        }
      }
    }
  }
  return {std::move(out), std::move(depth)};
}

Image composite(const ImageRgba& fg, const Image& bg) {
  if (fg.width != bg.width || fg.height != bg.height)
    throw_invalid_input("composite: foreground and background sizes differ");
  Image out(bg.width, bg.height);
  for (int y = 0; y < bg.height; ++y) {
    for (int x = 0; x < bg.width; ++x) {
      const uint8_t* f = fg.px(x, y);
      out.set(x, y, f[3] ? Rgb{f[0], f[1], f[2]} : bg.at(x, y));
    }
  }
  return out;
}

Image render_synthetic(const HandMesh& mesh, const HandTemplate& t, const CameraIntrinsics& mc,
                       const BackgroundCorpus& corpus, uint64_t seed) {
  if (corpus.size() == 0) throw_invalid_input("render_synthetic: empty background corpus");
  size_t idx = static_cast<size_t>(Rng::derive(seed, kBackgroundStreamTag).below(corpus.size()));
  Image bg = resize_bilinear(corpus.image(idx), mc.width, mc.height);
  Rgb base = average_color(bg);
  auto [fg, depth] = rasterize(mesh, t, mc, base);
  return composite(fg, bg);
}

}  // namespace rehand
