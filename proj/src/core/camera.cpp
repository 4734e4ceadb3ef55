#include "core/camera.hpp"

#include <cmath>
#include <string>

#include "core/errors.hpp"

namespace rehand {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0))
    throw_invalid_config("intrinsics: focal lengths must be positive");
  if (width <= 0 || height <= 0) throw_invalid_config("intrinsics: image size must be positive");
  if (!(cx >= 0.0) || cx >= width || !(cy >= 0.0) || cy >= height)
    throw_invalid_config("intrinsics: principal point outside image");
  if (!std::isfinite(fx) || !std::isfinite(fy) || !std::isfinite(cx) || !std::isfinite(cy))
    throw_invalid_config("intrinsics: non-finite value");
}

Vec2 project_point(const Vec3& p, const CameraIntrinsics& mc, double z_min) {
  if (!(p.z() > z_min))
    throw_geometry("point behind camera (z=" + std::to_string(p.z()) + ")");
  return {mc.fx * p.x() / p.z() + mc.cx, mc.fy * p.y() / p.z() + mc.cy};
}

MatX2 project(const MatX3& points, const CameraIntrinsics& mc, double z_min) {
  MatX2 out(points.rows(), 2);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    double z = points(i, 2);
    if (!(z > z_min))
      throw_geometry("point " + std::to_string(i) + " behind camera (z=" + std::to_string(z) +
                     ")");
    out(i, 0) = mc.fx * points(i, 0) / z + mc.cx;
    out(i, 1) = mc.fy * points(i, 1) / z + mc.cy;
  }
  return out;
}

Eigen::Matrix<double, 2, 3> project_jacobian_point(const Vec3& p, const CameraIntrinsics& mc) {
  Eigen::Matrix<double, 2, 3> j;
  const double z = p.z();
  const double inv_z = 1.0 / z;
  j << mc.fx * inv_z, 0.0, -mc.fx * p.x() * inv_z * inv_z,
       0.0, mc.fy * inv_z, -mc.fy * p.y() * inv_z * inv_z;
  return j;
}

Eigen::Matrix<double, 2, 4> project_jacobian_intrinsics(const Vec3& p) {
  Eigen::Matrix<double, 2, 4> j = Eigen::Matrix<double, 2, 4>::Zero();
  const double inv_z = 1.0 / p.z();
  j(0, 0) = p.x() * inv_z;  // du/dfx
  j(0, 2) = 1.0;            // du/dcx
  j(1, 1) = p.y() * inv_z;  // dv/dfy
  j(1, 3) = 1.0;            // dv/dcy
  return j;
}

}  // namespace rehand
