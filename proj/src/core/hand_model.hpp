#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "core/camera.hpp"
#include "core/types.hpp"

namespace rehand {

enum class MeshResolution { Coarse, Fine };

struct HandMesh {
  MatX3 vertices;
  MeshResolution resolution = MeshResolution::Fine;
};

// Fixed-topology hand template. The mesh is a closed manifold triangle
// surface; fine vertices are convex combinations of coarse ones through the
// row-stochastic upsample matrix. By format convention the first
// coarse_count rows of the upsample matrix are the identity, so the coarse
// rest pose is the top block of rest_vertices.
struct HandTemplate {
  MatX3 rest_vertices;        // v_fine x 3, meters
  FacesX3 faces;              // f x 3
  int coarse_count = 0;       // v_coarse
  MatX upsample;              // v_fine x v_coarse, row stochastic
  MatX joint_regressor;       // 21 x v_fine, row stochastic

  // Derived at build/load time, not serialized.
  MatX3 rest_keypoints;             // 21 x 3
  std::vector<int8_t> vertex_finger;   // -1 palm, 0..4 thumb..pinky
  std::vector<int8_t> vertex_segment;  // 0 palm, 1..3 along the finger
  uint64_t content_hash = 0;

  int v_fine() const { return static_cast<int>(rest_vertices.rows()); }
  int v_coarse() const { return coarse_count; }
  int face_count() const { return static_cast<int>(faces.rows()); }
  MatX3 rest_coarse() const { return rest_vertices.topRows(coarse_count); }
};

inline constexpr int kDefaultCoarseCount = 195;
inline constexpr int kDefaultFineCount = 778;

// Keypoint layout: 0 wrist, then 4 joints per finger in the order
// thumb, index, middle, ring, pinky (MCP, PIP, DIP, TIP each).
inline constexpr int kFingerCount = 5;
inline int keypoint_index(int finger, int joint) { return 1 + finger * 4 + joint; }

HandTemplate build_default_template(int coarse_count = kDefaultCoarseCount,
                                    int fine_count = kDefaultFineCount);

void validate_template(const HandTemplate& t);

void save_template(const HandTemplate& t, const std::filesystem::path& path);
HandTemplate load_template(const std::filesystem::path& path);
std::vector<uint8_t> serialize_template(const HandTemplate& t);
HandTemplate deserialize_template(const std::vector<uint8_t>& bytes);

HandMesh upsample_mesh(const HandMesh& coarse, const HandTemplate& t);
MatX3 regress_keypoints(const HandMesh& fine, const HandTemplate& t);

// Procedural sample generation. Draw order per seed is part of the
// determinism contract: intrinsics, finger articulation, then per-attempt
// rigid transform (rotation axis, angle, scale, translation).
struct SampleGenConfig {
  double max_curl = 1.0;      // radians at the MCP joint
  double max_spread = 0.15;   // radians of sideways splay
  double scale_min = 0.92;
  double scale_max = 1.08;
  double max_rotation = 0.7;  // radians about a random axis
  Vec3 t_min{-0.05, -0.05, -0.10};  // meters, about the rest center
  Vec3 t_max{0.05, 0.05, 0.15};
  double fx_min = 150.0;
  double fx_max = 190.0;
  double fy_ratio_min = 0.98;
  double fy_ratio_max = 1.02;
  double principal_jitter = 4.0;  // pixels around the image center
  int width = 128;
  int height = 128;
  double frustum_margin_px = 2.0;
  double z_near = 0.05;  // meters
  int max_retries = 100;
};

struct GeneratedSample {
  HandMesh fine;       // deformed + rigidly placed hand
  MatX3 keypoints;     // regressed from the fine mesh
  CameraIntrinsics intrinsics;
};

GeneratedSample generate_sample(const HandTemplate& t, uint64_t seed,
                                const SampleGenConfig& config);

}  // namespace rehand
