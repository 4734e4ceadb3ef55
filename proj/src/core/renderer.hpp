#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "core/camera.hpp"
#include "core/hand_model.hpp"
#include "core/image.hpp"

namespace rehand {

// Stream tag for background selection. The index drawn for a synthetic render
// is exactly Rng::derive(seed, kBackgroundStreamTag).below(corpus.size()),
// which tests replay independently.
inline constexpr uint64_t kBackgroundStreamTag = 0xB6C7A2E1u;

// Fixed shading model: one directional light plus ambient, flat per triangle.
inline constexpr double kAmbient = 0.4;
inline constexpr double kDiffuse = 0.6;

// Human-free background images listed in a plain-text manifest (one relative
// path per line, '#' starts a comment). Paths resolve against the manifest's
// directory; every entry is loaded eagerly so a bad manifest fails up front.
class BackgroundCorpus {
 public:
  static BackgroundCorpus load(const std::filesystem::path& manifest);

  size_t size() const { return images_.size(); }
  const Image& image(size_t i) const { return images_[i]; }
  const std::string& name(size_t i) const { return names_[i]; }

 private:
  std::vector<Image> images_;
  std::vector<std::string> names_;
};

// Z-buffered triangle rasterization of a fine mesh at (mc.width, mc.height).
// Pixel centers sample at +0.5, coverage follows the top-left fill rule,
// depth is perspective correct (1/z interpolated), the depth test is a strict
// less-than, and there is no backface culling. Alpha is a hard 0/255 matte.
// Triangles touching a vertex at or behind the near plane are skipped; a mesh
// entirely behind it is an error.
std::pair<ImageRgba, DepthBuffer> rasterize(const HandMesh& mesh, const HandTemplate& t,
                                            const CameraIntrinsics& mc, Rgb base_color);

// Hard-matte composite: covered pixels from fg, the rest from bg.
Image composite(const ImageRgba& fg, const Image& bg);

// Background selection -> average-color tinting -> rasterize -> composite.
// The hand is drawn in the chosen background's average color. Backgrounds are
// resized to the camera raster first when their size differs.
Image render_synthetic(const HandMesh& mesh, const HandTemplate& t, const CameraIntrinsics& mc,
                       const BackgroundCorpus& corpus, uint64_t seed);

}  // namespace rehand
