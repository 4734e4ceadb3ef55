#include <doctest.h>

#include <filesystem>
#include <map>
#include <set>
#include <utility>

#include "core/camera.hpp"
#include "core/errors.hpp"
#include "core/hand_model.hpp"
#include "core/hash.hpp"

using namespace rehand;

namespace {

const HandTemplate& default_template() {
  static HandTemplate t = build_default_template();
  return t;
}

}  // namespace

TEST_CASE("default template has the advertised shape") {
  const HandTemplate& t = default_template();
  CHECK(t.v_fine() == kDefaultFineCount);
  CHECK(t.v_coarse() == kDefaultCoarseCount);
  CHECK(t.joint_regressor.rows() == kKeypointCount);
  CHECK(t.faces.rows() > 0);
  CHECK(t.rest_vertices.allFinite());
}

TEST_CASE("default template is a closed manifold") {
  const HandTemplate& t = default_template();
  std::map<std::pair<int, int>, int> edges;
  for (Eigen::Index f = 0; f < t.faces.rows(); ++f) {
    for (int e = 0; e < 3; ++e) {
      int a = t.faces(f, e), b = t.faces(f, (e + 1) % 3);
      edges[{std::min(a, b), std::max(a, b)}]++;
    }
  }
  for (const auto& [edge, count] : edges) CHECK(count == 2);
  // Euler characteristic of a genus-zero closed surface.
  CHECK(t.v_fine() - static_cast<int>(edges.size()) + t.faces.rows() == 2);
}

TEST_CASE("upsample matrix is row-stochastic with identity top block") {
  const HandTemplate& t = default_template();
  for (int i = 0; i < t.v_fine(); ++i) {
    double sum = 0.0;
    for (int j = 0; j < t.v_coarse(); ++j) {
      CHECK(t.upsample(i, j) >= 0.0);
      sum += t.upsample(i, j);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  for (int i = 0; i < t.v_coarse(); ++i)
    for (int j = 0; j < t.v_coarse(); ++j)
      CHECK(t.upsample(i, j) == (i == j ? 1.0 : 0.0));
}

TEST_CASE("fine rest pose is the upsampled coarse rest pose") {
  const HandTemplate& t = default_template();
  HandMesh coarse{t.rest_coarse(), MeshResolution::Coarse};
  HandMesh fine = upsample_mesh(coarse, t);
  CHECK((fine.vertices - t.rest_vertices).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("upsample_mesh rejects wrong shapes") {
  const HandTemplate& t = default_template();
  HandMesh wrong{MatX3::Zero(10, 3), MeshResolution::Coarse};
  CHECK_THROWS_AS(upsample_mesh(wrong, t), RehandError);
  HandMesh fine{t.rest_vertices, MeshResolution::Fine};
  CHECK_THROWS_AS(upsample_mesh(fine, t), RehandError);
  CHECK_THROWS_AS(regress_keypoints({MatX3::Zero(10, 3), MeshResolution::Fine}, t), RehandError);
}

TEST_CASE("joint regressor rows are convex combinations") {
  const HandTemplate& t = default_template();
  for (int k = 0; k < kKeypointCount; ++k) {
    double sum = 0.0;
    for (int v = 0; v < t.v_fine(); ++v) {
      CHECK(t.joint_regressor(k, v) >= 0.0);
      sum += t.joint_regressor(k, v);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("rest keypoints are laid out like a hand") {
  const HandTemplate& t = default_template();
  const MatX3& k = t.rest_keypoints;
  Vec3 wrist = k.row(kWristIndex).transpose();
  // Each finger chain grows monotonically away from the wrist.
  for (int f = 0; f < kFingerCount; ++f) {
    double prev = 0.0;
    for (int j = 0; j < 4; ++j) {
      double d = (k.row(keypoint_index(f, j)).transpose() - wrist).norm();
      CHECK(d > prev);
      prev = d;
    }
  }
  // Fingers (not the thumb) are ordered left to right at the knuckles.
  for (int f = 1; f < 4; ++f)
    CHECK(k(keypoint_index(f, 0), 0) < k(keypoint_index(f + 1, 0), 0));
  // Thumb points the other way.
  CHECK(k(keypoint_index(0, 3), 0) < k(keypoint_index(0, 0), 0));
}

TEST_CASE("template serialization round-trips bit-exactly") {
  const HandTemplate& t = default_template();
  auto bytes = serialize_template(t);
  HandTemplate back = deserialize_template(bytes);
  CHECK(back.content_hash == t.content_hash);
  CHECK((back.rest_vertices - t.rest_vertices).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.upsample - t.upsample).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.joint_regressor - t.joint_regressor).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.faces == t.faces);
  CHECK(back.vertex_finger == t.vertex_finger);
  CHECK(back.vertex_segment == t.vertex_segment);

  auto dir = std::filesystem::temp_directory_path() / "rehand_tpl_test";
  std::filesystem::create_directories(dir);
  save_template(t, dir / "t.rht");
  HandTemplate loaded = load_template(dir / "t.rht");
  CHECK(loaded.content_hash == t.content_hash);
}

TEST_CASE("deserialization rejects corrupted bytes") {
  auto bytes = serialize_template(default_template());
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(deserialize_template(bad), RehandError);
  bad = bytes;
  bad.resize(bytes.size() / 2);
  CHECK_THROWS_AS(deserialize_template(bad), RehandError);
}

TEST_CASE("building twice gives identical templates") {
  HandTemplate a = build_default_template();
  HandTemplate b = build_default_template();
  CHECK(a.content_hash == b.content_hash);
  auto sa = serialize_template(a);
  auto sb = serialize_template(b);
  CHECK(sa == sb);
}

TEST_CASE("template rejects undersized vertex budgets") {
  CHECK_THROWS_AS(build_default_template(10, 778), RehandError);
  CHECK_THROWS_AS(build_default_template(195, 200), RehandError);
}

TEST_CASE("alternate coarse resolutions still satisfy the invariants") {
  HandTemplate t = build_default_template(180, 760);
  CHECK(t.v_coarse() == 180);
  CHECK(t.v_fine() == 760);
  validate_template(t);
}

TEST_CASE("generated samples are deterministic per seed") {
  const HandTemplate& t = default_template();
  GeneratedSample a = generate_sample(t, 1234, {});
  GeneratedSample b = generate_sample(t, 1234, {});
  CHECK((a.fine.vertices - b.fine.vertices).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.keypoints - b.keypoints).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.intrinsics.fx == b.intrinsics.fx);
  CHECK(a.intrinsics.cy == b.intrinsics.cy);

  GeneratedSample c = generate_sample(t, 1235, {});
  CHECK((a.fine.vertices - c.fine.vertices).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("generated samples project inside the image across many seeds") {
  const HandTemplate& t = default_template();
  SampleGenConfig cfg;
  for (uint64_t seed = 0; seed < 200; ++seed) {
    GeneratedSample s = generate_sample(t, seed, cfg);
    CHECK(s.fine.vertices.col(2).minCoeff() > cfg.z_near);
    MatX2 uv = project(s.fine.vertices, s.intrinsics);
    CHECK(uv.col(0).minCoeff() >= 0.0);
    CHECK(uv.col(0).maxCoeff() <= cfg.width - 1);
    CHECK(uv.col(1).minCoeff() >= 0.0);
    CHECK(uv.col(1).maxCoeff() <= cfg.height - 1);
    // Keypoints are convex combinations of vertices, so they are inside too.
    MatX2 kuv = project(s.keypoints, s.intrinsics);
    CHECK(kuv.col(0).minCoeff() >= 0.0);
    CHECK(kuv.col(0).maxCoeff() <= cfg.width - 1);
  }
}

TEST_CASE("generated keypoints equal the regressor applied to the mesh") {
  const HandTemplate& t = default_template();
  GeneratedSample s = generate_sample(t, 42, {});
  MatX3 expect = t.joint_regressor * s.fine.vertices;
  CHECK((s.keypoints - expect).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("unreachable placement bounds raise a generation error") {
  const HandTemplate& t = default_template();
  SampleGenConfig cfg;
  cfg.t_min = Vec3(5.0, 5.0, 5.0);  // hopelessly off-frame
  cfg.t_max = Vec3(6.0, 6.0, 5.5);
  cfg.max_retries = 20;
  try {
    generate_sample(t, 7, cfg);
    FAIL("expected a generation error");
  } catch (const RehandError& e) {
    CHECK(e.kind() == ErrorKind::Geometry);
  }
}
