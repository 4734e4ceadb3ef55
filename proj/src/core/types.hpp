#pragma once

#include <Eigen/Core>

namespace rehand {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using MatX3 = Eigen::MatrixX3d;
using MatX2 = Eigen::MatrixX2d;
using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;
using FacesX3 = Eigen::Matrix<int, Eigen::Dynamic, 3>;

inline constexpr int kKeypointCount = 21;  // index 0 is the wrist
inline constexpr int kWristIndex = 0;

}  // namespace rehand
