#include <doctest.h>

#include <cmath>

#include "core/camera.hpp"
#include "core/errors.hpp"
#include "core/rng.hpp"

using namespace rehand;

namespace {

CameraIntrinsics make_intr() {
  CameraIntrinsics mc;
  mc.fx = 170.0;
  mc.fy = 168.0;
  mc.cx = 63.5;
  mc.cy = 64.5;
  mc.width = 128;
  mc.height = 128;
  return mc;
}

}  // namespace

TEST_CASE("projection matches hand-computed pinhole values") {
  CameraIntrinsics mc = make_intr();
  // u = 170 * 0.1 / 0.5 + 63.5 = 97.5, v = 168 * -0.2 / 0.5 + 64.5 = -2.7
  MatX3 pts(1, 3);
  pts << 0.1, -0.2, 0.5;
  MatX2 uv = project(pts, mc);
  CHECK(uv(0, 0) == doctest::Approx(97.5).epsilon(1e-12));
  CHECK(uv(0, 1) == doctest::Approx(-2.7).epsilon(1e-12));

  // Point on the optical axis lands on the principal point.
  pts << 0.0, 0.0, 1.0;
  uv = project(pts, mc);
  CHECK(uv(0, 0) == doctest::Approx(63.5));
  CHECK(uv(0, 1) == doctest::Approx(64.5));
}

TEST_CASE("projection rejects points at or behind the near plane") {
  CameraIntrinsics mc = make_intr();
  MatX3 pts(2, 3);
  pts << 0.0, 0.0, 0.5, 0.1, 0.1, 0.0;
  CHECK_THROWS_AS(project(pts, mc), RehandError);
  try {
    project(pts, mc);
  } catch (const RehandError& e) {
    CHECK(e.kind() == ErrorKind::Geometry);
    CHECK(std::string(e.what()).find("1") != std::string::npos);
  }

  pts(1, 2) = 1e-5;  // below the default z floor
  CHECK_THROWS_AS(project(pts, mc), RehandError);
  pts(1, 2) = 2e-4;  // above it
  CHECK_NOTHROW(project(pts, mc));
}

TEST_CASE("point jacobian agrees with central differences") {
  CameraIntrinsics mc = make_intr();
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    Vec3 p(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(0.2, 1.5));
    Eigen::Matrix<double, 2, 3> J = project_jacobian_point(p, mc);
    const double h = 1e-6;
    for (int a = 0; a < 3; ++a) {
      Vec3 hi = p, lo = p;
      hi[a] += h;
      lo[a] -= h;
      Vec2 d = (project_point(hi, mc) - project_point(lo, mc)) / (2 * h);
      CHECK(J(0, a) == doctest::Approx(d.x()).epsilon(1e-5));
      CHECK(J(1, a) == doctest::Approx(d.y()).epsilon(1e-5));
    }
  }
}

TEST_CASE("intrinsics jacobian agrees with central differences") {
  Rng rng(78);
  for (int trial = 0; trial < 20; ++trial) {
    CameraIntrinsics mc = make_intr();
    Vec3 p(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(0.2, 1.5));
    Eigen::Matrix<double, 2, 4> J = project_jacobian_intrinsics(p);
    const double h = 1e-4;
    double* fields[4] = {&mc.fx, &mc.fy, &mc.cx, &mc.cy};
    for (int a = 0; a < 4; ++a) {
      double saved = *fields[a];
      *fields[a] = saved + h;
      Vec2 up = project_point(p, mc);
      *fields[a] = saved - h;
      Vec2 dn = project_point(p, mc);
      *fields[a] = saved;
      Vec2 d = (up - dn) / (2 * h);
      CHECK(J(0, a) == doctest::Approx(d.x()).epsilon(1e-6));
      CHECK(J(1, a) == doctest::Approx(d.y()).epsilon(1e-6));
    }
  }
}

TEST_CASE("intrinsics validation rejects out-of-range values") {
  CameraIntrinsics mc = make_intr();
  CHECK_NOTHROW(mc.validate());
  auto expect_config_error = [](CameraIntrinsics bad) {
    try {
      bad.validate();
      FAIL("expected a validation error");
    } catch (const RehandError& e) {
      CHECK(e.kind() == ErrorKind::InvalidConfig);
    }
  };
  CameraIntrinsics bad = make_intr();
  bad.fx = 0.0;
  expect_config_error(bad);
  bad = make_intr();
  bad.fy = -2.0;
  expect_config_error(bad);
  bad = make_intr();
  bad.cx = 128.0;
  expect_config_error(bad);
  bad = make_intr();
  bad.cy = -0.5;
  expect_config_error(bad);
  bad = make_intr();
  bad.fx = std::nan("");
  expect_config_error(bad);
}
