#include "core/hand_model.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>

#include "core/binio.hpp"
#include "core/errors.hpp"
#include "core/hash.hpp"
#include "core/rng.hpp"

namespace rehand {
namespace {

constexpr char kTemplateMagic[8] = {'R', 'H', 'T', 'P', 'L', '0', '0', '1'};
constexpr uint32_t kTemplateVersion = 1;
constexpr uint64_t kSampleStreamTag = 0x5A3D17C9u;

// ---------------------------------------------------------------------------
// Mesh scaffolding used only while constructing the default template.

struct BuildMesh {
  std::vector<Vec3> verts;
  std::vector<std::array<int, 3>> faces;
};

using EdgeKey = std::pair<int, int>;

EdgeKey edge_key(int a, int b) { return {std::min(a, b), std::max(a, b)}; }

// The default hand starts as the boundary surface of a voxel union: a palm
// slab, four fingers off the knuckle edge and a thumb off the side. Voxels
// only ever touch face-to-face, so the extracted surface is a closed
// 2-manifold of genus zero.
struct VoxelHand {
  std::set<std::array<int, 3>> voxels;
  // Finger descriptors in keypoint order (thumb, index, middle, ring, pinky):
  // axis direction, base position and length in voxel units.
  struct Chain {
    Vec3 start;   // center of the first joint (MCP), voxel units
    Vec3 dir;     // unit direction of the chain
    double len;   // voxel units to the tip
  };
  std::array<Chain, kFingerCount> chains;
  Vec3 wrist;  // voxel units
};

VoxelHand make_voxel_hand() {
  VoxelHand h;
  auto add_box = [&h](int x0, int x1, int y0, int y1, int z0, int z1) {
    for (int x = x0; x < x1; ++x)
      for (int y = y0; y < y1; ++y)
        for (int z = z0; z < z1; ++z) h.voxels.insert({x, y, z});
  };
  // Palm: 7 wide, 4 long, 2 thick.
  add_box(0, 7, 0, 4, 0, 2);
  // Fingers along +y, one voxel wide/thick, separated by empty columns.
  const int finger_x[4] = {0, 2, 4, 6};
  const int finger_len[4] = {3, 4, 3, 2};
  for (int i = 0; i < 4; ++i) add_box(finger_x[i], finger_x[i] + 1, 4, 4 + finger_len[i], 0, 1);
  // Thumb along -x, attached near the wrist end of the palm.
  add_box(-3, 0, 1, 2, 0, 1);

  h.wrist = Vec3(3.5, 0.3, 1.0);
  h.chains[0] = {Vec3(0.0, 1.5, 0.5), Vec3(-1, 0, 0), 2.85};  // thumb
  for (int i = 0; i < 4; ++i) {
    h.chains[i + 1] = {Vec3(finger_x[i] + 0.5, 4.0, 0.5), Vec3(0, 1, 0),
                       static_cast<double>(finger_len[i]) - 0.15};
  }
  return h;
}

BuildMesh extract_surface(const std::set<std::array<int, 3>>& voxels) {
  BuildMesh mesh;
  std::map<std::array<int, 3>, int> weld;
  auto vid = [&](int x, int y, int z) {
    auto [it, inserted] = weld.try_emplace({x, y, z}, static_cast<int>(mesh.verts.size()));
    if (inserted) mesh.verts.emplace_back(x, y, z);
    return it->second;
  };
  auto quad = [&](int a, int b, int c, int d) {
    mesh.faces.push_back({a, b, c});
    mesh.faces.push_back({a, c, d});
  };
  for (const auto& v : voxels) {
    const int x = v[0], y = v[1], z = v[2];
    auto filled = [&](int dx, int dy, int dz) {
      return voxels.count({x + dx, y + dy, z + dz}) != 0;
    };
    // Outward-CCW corner order per exposed cube face.
    if (!filled(1, 0, 0))
      quad(vid(x + 1, y, z), vid(x + 1, y + 1, z), vid(x + 1, y + 1, z + 1), vid(x + 1, y, z + 1));
    if (!filled(-1, 0, 0))
      quad(vid(x, y, z), vid(x, y, z + 1), vid(x, y + 1, z + 1), vid(x, y + 1, z));
    if (!filled(0, 1, 0))
      quad(vid(x, y + 1, z), vid(x, y + 1, z + 1), vid(x + 1, y + 1, z + 1), vid(x + 1, y + 1, z));
    if (!filled(0, -1, 0))
      quad(vid(x, y, z), vid(x + 1, y, z), vid(x + 1, y, z + 1), vid(x, y, z + 1));
    if (!filled(0, 0, 1))
      quad(vid(x, y, z + 1), vid(x + 1, y, z + 1), vid(x + 1, y + 1, z + 1), vid(x, y + 1, z + 1));
    if (!filled(0, 0, -1))
      quad(vid(x, y, z), vid(x, y + 1, z), vid(x + 1, y + 1, z), vid(x + 1, y, z));
  }
  return mesh;
}

// Taubin lambda/mu smoothing with uniform weights; rounds the voxel blockiness
// without shrinking the fingers away.
void taubin_smooth(BuildMesh& mesh, int pairs) {
  std::vector<std::set<int>> nbrs(mesh.verts.size());
  for (const auto& f : mesh.faces) {
    for (int e = 0; e < 3; ++e) {
      int a = f[static_cast<size_t>(e)], b = f[static_cast<size_t>((e + 1) % 3)];
      nbrs[static_cast<size_t>(a)].insert(b);
      nbrs[static_cast<size_t>(b)].insert(a);
    }
  }
  auto pass = [&](double factor) {
    std::vector<Vec3> next(mesh.verts.size());
    for (size_t i = 0; i < mesh.verts.size(); ++i) {
      Vec3 avg = Vec3::Zero();
      for (int j : nbrs[i]) avg += mesh.verts[static_cast<size_t>(j)];
      avg /= static_cast<double>(nbrs[i].size());
      next[i] = mesh.verts[i] + factor * (avg - mesh.verts[i]);
    }
    mesh.verts = std::move(next);
  };
  for (int it = 0; it < pairs; ++it) {
    pass(0.5);
    pass(-0.53);
  }
}

// Splits the longest edge at its midpoint; adjacent faces become four. When
// rows is non-null every new vertex records its convex combination of coarse
// vertices as the average of its parents' rows.
void split_longest_edge(BuildMesh& mesh, std::vector<std::map<int, double>>* rows) {
  EdgeKey best{-1, -1};
  double best_len = -1.0;
  std::set<EdgeKey> seen;
  for (const auto& f : mesh.faces) {
    for (int e = 0; e < 3; ++e) {
      EdgeKey k = edge_key(f[static_cast<size_t>(e)], f[static_cast<size_t>((e + 1) % 3)]);
      if (!seen.insert(k).second) continue;
      double len = (mesh.verts[static_cast<size_t>(k.first)] -
                    mesh.verts[static_cast<size_t>(k.second)])
                       .norm();
      if (len > best_len || (len == best_len && k < best)) {
        best_len = len;
        best = k;
      }
    }
  }
  const int a = best.first, b = best.second;
  const int m = static_cast<int>(mesh.verts.size());
  mesh.verts.push_back(0.5 * (mesh.verts[static_cast<size_t>(a)] +
                              mesh.verts[static_cast<size_t>(b)]));
  if (rows) {
    std::map<int, double> row;
    for (const auto& [c, w] : (*rows)[static_cast<size_t>(a)]) row[c] += 0.5 * w;
    for (const auto& [c, w] : (*rows)[static_cast<size_t>(b)]) row[c] += 0.5 * w;
    rows->push_back(std::move(row));
  }
  std::vector<std::array<int, 3>> out;
  out.reserve(mesh.faces.size() + 2);
  for (const auto& f : mesh.faces) {
    int pos = -1;
    for (int e = 0; e < 3; ++e) {
      int p = f[static_cast<size_t>(e)], q = f[static_cast<size_t>((e + 1) % 3)];
      if ((p == a && q == b) || (p == b && q == a)) {
        pos = e;
        break;
      }
    }
    if (pos < 0) {
      out.push_back(f);
      continue;
    }
    int p = f[static_cast<size_t>(pos)];
    int q = f[static_cast<size_t>((pos + 1) % 3)];
    int w = f[static_cast<size_t>((pos + 2) % 3)];
    out.push_back({p, m, w});
    out.push_back({m, q, w});
  }
  mesh.faces = std::move(out);
}

// One 1-to-4 midpoint subdivision. Original vertices keep identity rows.
BuildMesh subdivide_once(const BuildMesh& coarse, std::vector<std::map<int, double>>& rows) {
  BuildMesh fine;
  fine.verts = coarse.verts;
  rows.clear();
  rows.reserve(coarse.verts.size() * 4);
  for (size_t i = 0; i < coarse.verts.size(); ++i) rows.push_back({{static_cast<int>(i), 1.0}});
  std::map<EdgeKey, int> midpoint;
  auto mid = [&](int a, int b) {
    EdgeKey k = edge_key(a, b);
    auto it = midpoint.find(k);
    if (it != midpoint.end()) return it->second;
    int m = static_cast<int>(fine.verts.size());
    fine.verts.push_back(0.5 * (fine.verts[static_cast<size_t>(a)] +
                                fine.verts[static_cast<size_t>(b)]));
    rows.push_back({{k.first, 0.5}, {k.second, 0.5}});
    midpoint.emplace(k, m);
    return m;
  };
  for (const auto& f : coarse.faces) {
    int a = f[0], b = f[1], c = f[2];
    int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
    fine.faces.push_back({a, ab, ca});
    fine.faces.push_back({ab, b, bc});
    fine.faces.push_back({ca, bc, c});
    fine.faces.push_back({ab, bc, ca});
  }
  return fine;
}

MatX3 to_matrix(const std::vector<Vec3>& verts) {
  MatX3 m(static_cast<Eigen::Index>(verts.size()), 3);
  for (size_t i = 0; i < verts.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = verts[i];
  return m;
}

FacesX3 to_faces(const std::vector<std::array<int, 3>>& faces) {
  FacesX3 m(static_cast<Eigen::Index>(faces.size()), 3);
  for (size_t i = 0; i < faces.size(); ++i)
    for (int j = 0; j < 3; ++j) m(static_cast<Eigen::Index>(i), j) = faces[i][static_cast<size_t>(j)];
  return m;
}

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  Vec3 d = b - a;
  double len2 = d.squaredNorm();
  if (len2 < 1e-18) return (p - a).norm();
  double t = std::clamp((p - a).dot(d) / len2, 0.0, 1.0);
  return (p - (a + t * d)).norm();
}

struct Affine {
  Mat3 rot = Mat3::Identity();
  Vec3 t = Vec3::Zero();
  Vec3 apply(const Vec3& p) const { return rot * p + t; }
  Affine then_local(const Affine& local) const {
    // this ∘ local: the local joint rotation happens first, in rest space.
    return {rot * local.rot, rot * local.t + t};
  }
};

Affine rotation_about(const Vec3& pivot, const Vec3& axis, double angle) {
  Mat3 r = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
  return {r, pivot - r * pivot};
}

// Fills everything not stored in the template file: regressed rest keypoints
// and the per-vertex articulation labels (nearest skeletal bone; palm bones
// run wrist to MCP and pin their vertices to the palm).
void compute_derived(HandTemplate& t) {
  t.rest_keypoints = t.joint_regressor * t.rest_vertices;
  const int n = t.v_fine();
  t.vertex_finger.assign(static_cast<size_t>(n), -1);
  t.vertex_segment.assign(static_cast<size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    const Vec3 p = t.rest_vertices.row(i).transpose();
    double best = std::numeric_limits<double>::infinity();
    int best_finger = -1, best_segment = 0;
    for (int f = 0; f < kFingerCount; ++f) {
      const Vec3 wrist = t.rest_keypoints.row(kWristIndex).transpose();
      const Vec3 mcp = t.rest_keypoints.row(keypoint_index(f, 0)).transpose();
      double d_palm = point_segment_distance(p, wrist, mcp);
      if (d_palm < best) {
        best = d_palm;
        best_finger = -1;
        best_segment = 0;
      }
      for (int s = 0; s < 3; ++s) {
        const Vec3 a = t.rest_keypoints.row(keypoint_index(f, s)).transpose();
        const Vec3 b = t.rest_keypoints.row(keypoint_index(f, s + 1)).transpose();
        double d = point_segment_distance(p, a, b);
        if (d < best) {
          best = d;
          best_finger = f;
          best_segment = s + 1;
        }
      }
    }
    t.vertex_finger[static_cast<size_t>(i)] = static_cast<int8_t>(best_finger);
    t.vertex_segment[static_cast<size_t>(i)] = static_cast<int8_t>(best_segment);
  }
}

}  // namespace

// ---------------------------------------------------------------------------

HandTemplate build_default_template(int coarse_count, int fine_count) {
  VoxelHand voxhand = make_voxel_hand();
  BuildMesh base = extract_surface(voxhand.voxels);
  taubin_smooth(base, 6);

  // Voxel units to meters, then recenter at (0, 0, 0.6): the rest hand floats
  // in front of the canonical camera, palm toward -z.
  const Vec3 scale(0.012, 0.022, 0.014);
  for (auto& v : base.verts) v = v.cwiseProduct(scale);
  Vec3 lo = base.verts[0], hi = base.verts[0];
  for (const auto& v : base.verts) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const Vec3 offset = Vec3(0.0, 0.0, 0.60) - 0.5 * (lo + hi);
  for (auto& v : base.verts) v += offset;

  if (coarse_count < static_cast<int>(base.verts.size()))
    throw_invalid_config("coarse_count " + std::to_string(coarse_count) +
                         " below base mesh size " + std::to_string(base.verts.size()));
  while (static_cast<int>(base.verts.size()) < coarse_count) split_longest_edge(base, nullptr);

  std::vector<std::map<int, double>> rows;
  BuildMesh fine = subdivide_once(base, rows);
  if (fine_count < static_cast<int>(fine.verts.size()))
    throw_invalid_config("fine_count " + std::to_string(fine_count) +
                         " below subdivided size " + std::to_string(fine.verts.size()));
  while (static_cast<int>(fine.verts.size()) < fine_count) split_longest_edge(fine, &rows);

  HandTemplate t;
  t.rest_vertices = to_matrix(fine.verts);
  t.faces = to_faces(fine.faces);
  t.coarse_count = coarse_count;
  t.upsample = MatX::Zero(fine_count, coarse_count);
  for (int i = 0; i < fine_count; ++i)
    for (const auto& [c, w] : rows[static_cast<size_t>(i)]) t.upsample(i, c) = w;

  // Joint regressor: each keypoint is a normalized blend of the fine vertices
  // nearest its skeletal target; the wrist row is a plain mean over its set.
  MatX3 targets(kKeypointCount, 3);
  targets.row(0) = (voxhand.wrist.cwiseProduct(scale) + offset).transpose();
  for (int f = 0; f < kFingerCount; ++f) {
    const auto& chain = voxhand.chains[static_cast<size_t>(f)];
    for (int j = 0; j < 4; ++j) {
      double along = chain.len * (j == 3 ? 1.0 : j / 3.0);
      Vec3 p = chain.start + along * chain.dir;
      targets.row(keypoint_index(f, j)) = (p.cwiseProduct(scale) + offset).transpose();
    }
  }
  t.joint_regressor = MatX::Zero(kKeypointCount, fine_count);
  for (int k = 0; k < kKeypointCount; ++k) {
    const Vec3 target = targets.row(k).transpose();
    std::vector<std::pair<double, int>> dist(static_cast<size_t>(fine_count));
    for (int i = 0; i < fine_count; ++i)
      dist[static_cast<size_t>(i)] = {(t.rest_vertices.row(i).transpose() - target).norm(), i};
    const int support = (k == kWristIndex) ? 16 : 12;
    std::partial_sort(dist.begin(), dist.begin() + support, dist.end());
    double total = 0.0;
    for (int s = 0; s < support; ++s) {
      double w = (k == kWristIndex) ? 1.0 : 1.0 / (dist[static_cast<size_t>(s)].first + 1e-6);
      t.joint_regressor(k, dist[static_cast<size_t>(s)].second) = w;
      total += w;
    }
    t.joint_regressor.row(k) /= total;
  }

  auto bytes = serialize_template(t);
  t.content_hash = fnv1a64(bytes.data(), bytes.size());
  compute_derived(t);
  validate_template(t);
  return t;
}

void validate_template(const HandTemplate& t) {
  const int vf = t.v_fine();
  if (vf <= 0 || t.coarse_count <= 0 || t.coarse_count > vf)
    throw_invalid_input("template: bad vertex counts");
  if (!t.rest_vertices.allFinite()) throw_invalid_input("template: non-finite rest vertices");
  if (t.upsample.rows() != vf || t.upsample.cols() != t.coarse_count)
    throw_invalid_input("template: upsample matrix shape mismatch");
  if (t.joint_regressor.rows() != kKeypointCount || t.joint_regressor.cols() != vf)
    throw_invalid_input("template: joint regressor shape mismatch");

  std::map<EdgeKey, int> edge_count;
  for (Eigen::Index fi = 0; fi < t.faces.rows(); ++fi) {
    int a = t.faces(fi, 0), b = t.faces(fi, 1), c = t.faces(fi, 2);
    if (a < 0 || a >= vf || b < 0 || b >= vf || c < 0 || c >= vf)
      throw_invalid_input("template: face index out of range at face " + std::to_string(fi));
    if (a == b || b == c || a == c)
      throw_invalid_input("template: degenerate face " + std::to_string(fi));
    for (auto [p, q] : {std::pair{a, b}, {b, c}, {c, a}}) {
      if (++edge_count[edge_key(p, q)] > 2)
        throw_invalid_input("template: non-manifold edge (" + std::to_string(p) + "," +
                            std::to_string(q) + ")");
    }
  }

  auto check_stochastic = [](const MatX& m, const char* what) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      double sum = 0.0;
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        double w = m(r, c);
        if (!(w >= 0.0))
          throw_invalid_input(std::string("template: negative weight in ") + what + " row " +
                              std::to_string(r));
        sum += w;
      }
      if (std::abs(sum - 1.0) > 1e-9)
        throw_invalid_input(std::string("template: ") + what + " row " + std::to_string(r) +
                            " sums to " + std::to_string(sum));
    }
  };
  check_stochastic(t.upsample, "upsample");
  check_stochastic(t.joint_regressor, "joint_regressor");

  // Format v1 convention: originals come first, so the top block of the
  // upsample matrix is the identity and the coarse rest pose is recoverable.
  for (int i = 0; i < t.coarse_count; ++i)
    for (int j = 0; j < t.coarse_count; ++j) {
      double expect = (i == j) ? 1.0 : 0.0;
      if (std::abs(t.upsample(i, j) - expect) > 1e-12)
        throw_invalid_input("template: upsample top block is not the identity");
    }
}

std::vector<uint8_t> serialize_template(const HandTemplate& t) {
  BinWriter w;
  w.bytes(kTemplateMagic, sizeof kTemplateMagic);
  w.u32(kTemplateVersion);
  w.u32(static_cast<uint32_t>(t.coarse_count));
  w.u32(static_cast<uint32_t>(t.v_fine()));
  w.u32(kKeypointCount);
  w.u32(static_cast<uint32_t>(t.faces.rows()));
  for (Eigen::Index i = 0; i < t.rest_vertices.rows(); ++i)
    for (int j = 0; j < 3; ++j) w.f64(t.rest_vertices(i, j));
  for (Eigen::Index i = 0; i < t.faces.rows(); ++i)
    for (int j = 0; j < 3; ++j) w.u32(static_cast<uint32_t>(t.faces(i, j)));
  for (Eigen::Index i = 0; i < t.upsample.rows(); ++i)
    for (Eigen::Index j = 0; j < t.upsample.cols(); ++j) w.f64(t.upsample(i, j));
  for (Eigen::Index i = 0; i < t.joint_regressor.rows(); ++i)
    for (Eigen::Index j = 0; j < t.joint_regressor.cols(); ++j) w.f64(t.joint_regressor(i, j));
  return w.data();
}

HandTemplate deserialize_template(const std::vector<uint8_t>& bytes) {
  BinReader r(bytes);
  char magic[8];
  for (char& c : magic) c = static_cast<char>(r.u8());
  if (std::memcmp(magic, kTemplateMagic, 8) != 0)
    throw_invalid_input("template: bad magic, not a hand template file");
  uint32_t version = r.u32();
  if (version != kTemplateVersion)
    throw_invalid_input("template: unsupported version " + std::to_string(version));
  HandTemplate t;
  t.coarse_count = static_cast<int>(r.u32());
  int vf = static_cast<int>(r.u32());
  uint32_t k = r.u32();
  if (k != kKeypointCount) throw_invalid_input("template: keypoint count must be 21");
  int nf = static_cast<int>(r.u32());
  if (vf <= 0 || nf <= 0 || t.coarse_count <= 0 || vf > (1 << 20) || nf > (1 << 20))
    throw_invalid_input("template: implausible header counts");
  t.rest_vertices.resize(vf, 3);
  for (int i = 0; i < vf; ++i)
    for (int j = 0; j < 3; ++j) t.rest_vertices(i, j) = r.f64();
  t.faces.resize(nf, 3);
  for (int i = 0; i < nf; ++i)
    for (int j = 0; j < 3; ++j) t.faces(i, j) = static_cast<int>(r.u32());
  t.upsample.resize(vf, t.coarse_count);
  for (int i = 0; i < vf; ++i)
    for (int j = 0; j < t.coarse_count; ++j) t.upsample(i, j) = r.f64();
  t.joint_regressor.resize(kKeypointCount, vf);
  for (int i = 0; i < kKeypointCount; ++i)
    for (int j = 0; j < vf; ++j) t.joint_regressor(i, j) = r.f64();
  validate_template(t);
  t.content_hash = fnv1a64(bytes.data(), bytes.size());
  compute_derived(t);
  return t;
}

void save_template(const HandTemplate& t, const std::filesystem::path& path) {
  auto bytes = serialize_template(t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_io("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw_io("write failed: " + path.string());
}

HandTemplate load_template(const std::filesystem::path& path) {
  return deserialize_template(BinReader::from_file(path).raw());
}

HandMesh upsample_mesh(const HandMesh& coarse, const HandTemplate& t) {
  if (coarse.resolution != MeshResolution::Coarse)
    throw_invalid_input("upsample_mesh: input must be a coarse mesh");
  if (coarse.vertices.rows() != t.coarse_count)
    throw_invalid_input("upsample_mesh: expected " + std::to_string(t.coarse_count) +
                        " vertices, got " + std::to_string(coarse.vertices.rows()));
  return {t.upsample * coarse.vertices, MeshResolution::Fine};
}

MatX3 regress_keypoints(const HandMesh& fine, const HandTemplate& t) {
  if (fine.resolution != MeshResolution::Fine)
    throw_invalid_input("regress_keypoints: input must be a fine mesh");
  if (fine.vertices.rows() != t.v_fine())
    throw_invalid_input("regress_keypoints: expected " + std::to_string(t.v_fine()) +
                        " vertices, got " + std::to_string(fine.vertices.rows()));
  return t.joint_regressor * fine.vertices;
}

namespace {

// Forward kinematics for one finger: spread and flexion at the MCP, then
// progressively smaller flexion at PIP and DIP. Joint pivots and axes live in
// rest space; composition orders child rotations before their parents.
MatX3 articulate(const HandTemplate& t, const std::array<double, kFingerCount>& curl,
                 const std::array<double, kFingerCount>& spread) {
  MatX3 out = t.rest_vertices;
  Vec3 wrist = t.rest_keypoints.row(kWristIndex).transpose();
  Vec3 u1 = t.rest_keypoints.row(keypoint_index(1, 0)).transpose() - wrist;
  Vec3 u2 = t.rest_keypoints.row(keypoint_index(4, 0)).transpose() - wrist;
  Vec3 palm_normal = u1.cross(u2);
  if (palm_normal.norm() < 1e-12) palm_normal = Vec3(0, 0, -1);
  palm_normal.normalize();
  if (palm_normal.z() > 0) palm_normal = -palm_normal;  // rest pose faces the camera

  for (int f = 0; f < kFingerCount; ++f) {
    if (curl[static_cast<size_t>(f)] == 0.0 && spread[static_cast<size_t>(f)] == 0.0) continue;
    Vec3 mcp = t.rest_keypoints.row(keypoint_index(f, 0)).transpose();
    Vec3 pip = t.rest_keypoints.row(keypoint_index(f, 1)).transpose();
    Vec3 dip = t.rest_keypoints.row(keypoint_index(f, 2)).transpose();
    Vec3 dir = (pip - mcp).normalized();
    Vec3 flex_axis = dir.cross(palm_normal);
    if (flex_axis.norm() < 1e-9) flex_axis = Vec3(1, 0, 0);
    flex_axis.normalize();

    const double c = curl[static_cast<size_t>(f)];
    Affine seg1 = rotation_about(mcp, palm_normal, spread[static_cast<size_t>(f)])
                      .then_local(rotation_about(mcp, flex_axis, c));
    Affine seg2 = seg1.then_local(rotation_about(pip, flex_axis, 0.8 * c));
    Affine seg3 = seg2.then_local(rotation_about(dip, flex_axis, 0.6 * c));
    const Affine* segs[3] = {&seg1, &seg2, &seg3};
    for (int i = 0; i < t.v_fine(); ++i) {
      if (t.vertex_finger[static_cast<size_t>(i)] != f) continue;
      int s = t.vertex_segment[static_cast<size_t>(i)];
      if (s < 1) continue;
      out.row(i) = segs[s - 1]->apply(t.rest_vertices.row(i).transpose()).transpose();
    }
  }
  return out;
}

}  // namespace

GeneratedSample generate_sample(const HandTemplate& t, uint64_t seed,
                                const SampleGenConfig& cfg) {
  if (!(std::isfinite(cfg.max_curl) && std::isfinite(cfg.max_spread) &&
        std::isfinite(cfg.scale_min) && std::isfinite(cfg.scale_max) &&
        cfg.t_min.allFinite() && cfg.t_max.allFinite()))
    throw_invalid_config("generate_sample: non-finite deformation bounds");
  if (cfg.width <= 0 || cfg.height <= 0) throw_invalid_config("generate_sample: bad image size");

  Rng rng = Rng::derive(seed, kSampleStreamTag);

  CameraIntrinsics mc;
  mc.width = cfg.width;
  mc.height = cfg.height;
  mc.fx = rng.uniform(cfg.fx_min, cfg.fx_max);
  mc.fy = mc.fx * rng.uniform(cfg.fy_ratio_min, cfg.fy_ratio_max);
  mc.cx = cfg.width / 2.0 + rng.uniform(-cfg.principal_jitter, cfg.principal_jitter);
  mc.cy = cfg.height / 2.0 + rng.uniform(-cfg.principal_jitter, cfg.principal_jitter);
  mc.validate();

  std::array<double, kFingerCount> curl{}, spread{};
  for (int f = 0; f < kFingerCount; ++f) {
    curl[static_cast<size_t>(f)] = rng.uniform(-0.25 * cfg.max_curl, cfg.max_curl);
    spread[static_cast<size_t>(f)] = rng.uniform(-cfg.max_spread, cfg.max_spread);
  }
  MatX3 posed = articulate(t, curl, spread);
  const Vec3 center = t.rest_keypoints.colwise().mean().transpose();

  const double margin = cfg.frustum_margin_px;
  for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
    Vec3 axis(rng.normal(), rng.normal(), rng.normal());
    if (axis.norm() < 1e-12) axis = Vec3(1, 0, 0);
    axis.normalize();
    double angle = rng.uniform(-cfg.max_rotation, cfg.max_rotation);
    double s = rng.uniform(cfg.scale_min, cfg.scale_max);
    Vec3 tr(rng.uniform(cfg.t_min.x(), cfg.t_max.x()), rng.uniform(cfg.t_min.y(), cfg.t_max.y()),
            rng.uniform(cfg.t_min.z(), cfg.t_max.z()));

    Mat3 rot = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
    MatX3 placed = (posed.rowwise() - center.transpose()) * rot.transpose() * s;
    placed.rowwise() += (center + tr).transpose();

    bool ok = true;
    for (Eigen::Index i = 0; i < placed.rows() && ok; ++i) {
      double z = placed(i, 2);
      if (!(z > cfg.z_near)) {
        ok = false;
        break;
      }
      double u = mc.fx * placed(i, 0) / z + mc.cx;
      double v = mc.fy * placed(i, 1) / z + mc.cy;
      ok = u >= margin && u <= cfg.width - 1 - margin && v >= margin && v <= cfg.height - 1 - margin;
    }
    if (!ok) continue;

    GeneratedSample sample;
    sample.fine = {std::move(placed), MeshResolution::Fine};
    sample.keypoints = regress_keypoints(sample.fine, t);
    sample.intrinsics = mc;
    return sample;
  }
  throw_geometry("generate_sample: hand outside frustum after " +
                 std::to_string(cfg.max_retries) + " attempts (seed " + std::to_string(seed) +
                 ")");
}

}  // namespace rehand
