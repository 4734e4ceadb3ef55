#pragma once

#include "core/types.hpp"

namespace rehand {

// Pinhole intrinsics in pixel units, no distortion, no extrinsics. All 3D
// inputs are already in camera coordinates (meters, +z into the scene).
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  void validate() const;
};

inline constexpr double kDefaultZMin = 1e-4;  // meters

// u = fx*x/z + cx, v = fy*y/z + cy. Throws a geometry error naming the first
// point with z <= z_min.
MatX2 project(const MatX3& points, const CameraIntrinsics& mc, double z_min = kDefaultZMin);

Vec2 project_point(const Vec3& p, const CameraIntrinsics& mc, double z_min = kDefaultZMin);

// d(u,v)/d(x,y,z) for one point; rows are (u,v), columns (x,y,z).
Eigen::Matrix<double, 2, 3> project_jacobian_point(const Vec3& p, const CameraIntrinsics& mc);

// d(u,v)/d(fx,fy,cx,cy) for one point.
Eigen::Matrix<double, 2, 4> project_jacobian_intrinsics(const Vec3& p);

}  // namespace rehand
