#pragma once

#include <string>

#include "core/camera.hpp"
#include "core/types.hpp"

namespace rehand {

enum class Norm { L1, L2 };

struct LossWeights {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  Norm norm = Norm::L1;
  void validate() const;  // finite and non-negative
};

// One phase's estimates: fine vertices, regressed keypoints, and the camera
// used for its projections. intrinsics_predicted routes projection gradients
// into d_intrinsics; with ground-truth intrinsics they stay zero.
struct PhaseOutput {
  MatX3 vertices;   // v_fine x 3
  MatX3 keypoints;  // 21 x 3
  CameraIntrinsics intrinsics;
  bool intrinsics_predicted = false;
};

// Gradients w.r.t. one phase's outputs, accumulated across loss terms.
struct PhaseGrad {
  MatX3 d_vertices;
  MatX3 d_keypoints;
  Vec4 d_intrinsics = Vec4::Zero();  // (fx, fy, cx, cy)

  explicit PhaseGrad(Eigen::Index v_fine)
      : d_vertices(MatX3::Zero(v_fine, 3)), d_keypoints(MatX3::Zero(kKeypointCount, 3)) {}
};

struct DistTerms {
  double dist_k = 0.0, dist_v = 0.0, dist_proj = 0.0;
  double sum() const { return dist_k + dist_v + dist_proj; }
};

struct CorrTerms {
  double corr_k = 0.0, corr_v = 0.0, corr_proj = 0.0;
  double sum() const { return corr_k + corr_v + corr_proj; }
};

// Per-step loss report. dist_* are the phase-1 components; recycle carries the
// phase-2 sum. total = alpha*ori + beta*recycle + gamma*(corr_k+corr_v+corr_proj).
struct LossBreakdown {
  double dist_k = 0.0, dist_v = 0.0, dist_proj = 0.0;
  double corr_k = 0.0, corr_v = 0.0, corr_proj = 0.0;
  double ori = 0.0, recycle = 0.0, total = 0.0;
};

struct GroundTruth {
  MatX3 vertices;   // v_fine x 3
  MatX3 keypoints;  // 21 x 3
  CameraIntrinsics intrinsics;
};

// Mean over elements of |a-b| (L1) or (a-b)^2 (L2).
double similarity(const Eigen::Ref<const MatX>& a, const Eigen::Ref<const MatX>& b, Norm norm);

// Same value; also accumulates weight * d/d{a,b} into ga/gb.
double similarity_grad(const Eigen::Ref<const MatX>& a, const Eigen::Ref<const MatX>& b, Norm norm,
                       double weight, Eigen::Ref<MatX> ga, Eigen::Ref<MatX> gb);

// Subtract the mean keypoint position (translation removal).
MatX3 normalize_keypoints(const MatX3& k);

// Translate every vertex by -wrist.
MatX3 align_vertices_to_wrist(const MatX3& v, const Vec3& wrist);

// Self-correlation terms between the two phases: mean-centered keypoints,
// wrist-aligned vertices (each phase's own predicted wrist, keypoint 0), and
// zero-mean-centered projected keypoints (each phase its own intrinsics).
// When grad_weight > 0 the scaled gradients accumulate into g1/g2. Setting
// with_projection false drops the projected term (value and gradient), which
// leaves an objective that is affine in the 3D outputs — the reference case
// for gradient checking.
CorrTerms loss_corr(const PhaseOutput& p1, const PhaseOutput& p2, Norm norm,
                    double grad_weight = 0.0, PhaseGrad* g1 = nullptr, PhaseGrad* g2 = nullptr,
                    bool with_projection = true);

// Supervised distances to ground truth: keypoints, vertices, and projected
// keypoints (prediction with its own intrinsics, ground truth with its own).
DistTerms loss_dist(const PhaseOutput& pred, const GroundTruth& gt, Norm norm,
                    double grad_weight = 0.0, PhaseGrad* g = nullptr,
                    bool with_projection = true);

// Weighted total; throws a numerical error naming the first non-finite
// component.
LossBreakdown loss_total(const DistTerms& ori, const DistTerms& recycle, const CorrTerms& corr,
                         const LossWeights& w);

const char* norm_name(Norm n);
Norm norm_from_name(const std::string& name);

}  // namespace rehand
