#include "core/losses.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace rehand {

void LossWeights::validate() const {
  if (!(std::isfinite(alpha) && std::isfinite(beta) && std::isfinite(gamma)))
    throw_invalid_config("loss weights must be finite");
  if (alpha < 0.0 || beta < 0.0 || gamma < 0.0)
    throw_invalid_config("loss weights must be non-negative");
}

const char* norm_name(Norm n) { return n == Norm::L1 ? "l1" : "l2"; }

Norm norm_from_name(const std::string& name) {
  if (name == "l1" || name == "L1") return Norm::L1;
  if (name == "l2" || name == "L2") return Norm::L2;
  throw_invalid_config("unknown norm '" + name + "' (expected l1 or l2)");
}

double similarity(const Eigen::Ref<const MatX>& a, const Eigen::Ref<const MatX>& b, Norm norm) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw_invalid_input("similarity: shape mismatch");
  if (a.size() == 0) throw_invalid_input("similarity: empty input");
  MatX d = a - b;
  double n = static_cast<double>(d.size());
  return norm == Norm::L1 ? d.cwiseAbs().sum() / n : d.squaredNorm() / n;
}

double similarity_grad(const Eigen::Ref<const MatX>& a, const Eigen::Ref<const MatX>& b, Norm norm,
                       double weight, Eigen::Ref<MatX> ga, Eigen::Ref<MatX> gb) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw_invalid_input("similarity: shape mismatch");
  if (ga.rows() != a.rows() || ga.cols() != a.cols() || gb.rows() != a.rows() ||
      gb.cols() != a.cols())
    throw_invalid_input("similarity: gradient shape mismatch");
  MatX d = a - b;
  double n = static_cast<double>(d.size());
  double value;
  MatX da;
  if (norm == Norm::L1) {
    value = d.cwiseAbs().sum() / n;
    da = d.unaryExpr([](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }) / n;
  } else {
    value = d.squaredNorm() / n;
    da = 2.0 * d / n;
  }
  ga += weight * da;
  gb -= weight * da;
  return value;
}

MatX3 normalize_keypoints(const MatX3& k) {
  return k.rowwise() - k.colwise().mean();
}

MatX3 align_vertices_to_wrist(const MatX3& v, const Vec3& wrist) {
  return v.rowwise() - wrist.transpose();
}

namespace {

// Backward of row-mean centering: J = I - (1/n) 1 1^T per column.
MatX3 center_backward(const MatX3& g) {
  return g.rowwise() - g.colwise().mean();
}

// Projected keypoints centered to zero mean in pixel space, plus the chain
// back through centering and the pinhole Jacobians.
MatX2 centered_projection(const MatX3& k, const CameraIntrinsics& mc) {
  MatX2 p = project(k, mc);
  return p.rowwise() - p.colwise().mean();
}

void projection_backward(const MatX3& k, const CameraIntrinsics& mc, bool intr_predicted,
                         const MatX2& d_centered, PhaseGrad* g) {
  if (!g) return;
  MatX2 dp = d_centered.rowwise() - d_centered.colwise().mean();
  for (Eigen::Index i = 0; i < k.rows(); ++i) {
    Vec3 p = k.row(i).transpose();
    Vec2 up = dp.row(i).transpose();
    g->d_keypoints.row(i) += (up.transpose() * project_jacobian_point(p, mc));
    if (intr_predicted) g->d_intrinsics += project_jacobian_intrinsics(p).transpose() * up;
  }
}

void check_phase(const PhaseOutput& p, const char* which) {
  if (p.keypoints.rows() != kKeypointCount)
    throw_invalid_input(std::string(which) + ": expected 21 keypoints");
  if (p.vertices.rows() == 0) throw_invalid_input(std::string(which) + ": empty vertices");
}

}  // namespace

CorrTerms loss_corr(const PhaseOutput& p1, const PhaseOutput& p2, Norm norm, double grad_weight,
                    PhaseGrad* g1, PhaseGrad* g2, bool with_projection) {
  check_phase(p1, "loss_corr phase 1");
  check_phase(p2, "loss_corr phase 2");
  if (p1.vertices.rows() != p2.vertices.rows())
    throw_invalid_input("loss_corr: vertex counts differ between phases");

  CorrTerms out;
  const Eigen::Index vn = p1.vertices.rows();
  const bool with_grad = grad_weight != 0.0 && g1 && g2;

  // Keypoints, mean-centered.
  {
    MatX3 n1 = normalize_keypoints(p1.keypoints);
    MatX3 n2 = normalize_keypoints(p2.keypoints);
    if (with_grad) {
      MatX3 ga = MatX3::Zero(kKeypointCount, 3), gb = MatX3::Zero(kKeypointCount, 3);
      out.corr_k = similarity_grad(n1, n2, norm, grad_weight, ga, gb);
      g1->d_keypoints += center_backward(ga);
      g2->d_keypoints += center_backward(gb);
    } else {
      out.corr_k = similarity(n1, n2, norm);
    }
  }

  // Vertices, aligned to each phase's own predicted wrist.
  {
    Vec3 w1 = p1.keypoints.row(kWristIndex).transpose();
    Vec3 w2 = p2.keypoints.row(kWristIndex).transpose();
    MatX3 a1 = align_vertices_to_wrist(p1.vertices, w1);
    MatX3 a2 = align_vertices_to_wrist(p2.vertices, w2);
    if (with_grad) {
      MatX3 ga = MatX3::Zero(vn, 3), gb = MatX3::Zero(vn, 3);
      out.corr_v = similarity_grad(a1, a2, norm, grad_weight, ga, gb);
      g1->d_vertices += ga;
      g1->d_keypoints.row(kWristIndex) -= ga.colwise().sum();
      g2->d_vertices += gb;
      g2->d_keypoints.row(kWristIndex) -= gb.colwise().sum();
    } else {
      out.corr_v = similarity(a1, a2, norm);
    }
  }

  // Projected keypoints, zero-mean in pixel space, each phase through its own
  // camera.
  if (with_projection) {
    MatX2 c1 = centered_projection(p1.keypoints, p1.intrinsics);
    MatX2 c2 = centered_projection(p2.keypoints, p2.intrinsics);
    if (with_grad) {
      MatX2 ga = MatX2::Zero(kKeypointCount, 2), gb = MatX2::Zero(kKeypointCount, 2);
      out.corr_proj = similarity_grad(c1, c2, norm, grad_weight, ga, gb);
      projection_backward(p1.keypoints, p1.intrinsics, p1.intrinsics_predicted, ga, g1);
      projection_backward(p2.keypoints, p2.intrinsics, p2.intrinsics_predicted, gb, g2);
    } else {
      out.corr_proj = similarity(c1, c2, norm);
    }
  }
  return out;
}

DistTerms loss_dist(const PhaseOutput& pred, const GroundTruth& gt, Norm norm, double grad_weight,
                    PhaseGrad* g, bool with_projection) {
  check_phase(pred, "loss_dist prediction");
  if (gt.keypoints.rows() != kKeypointCount || gt.vertices.rows() != pred.vertices.rows())
    throw_invalid_input("loss_dist: ground-truth shapes do not match prediction");

  DistTerms out;
  const Eigen::Index vn = pred.vertices.rows();
  const bool with_grad = grad_weight != 0.0 && g;

  if (with_grad) {
    MatX3 sink_k = MatX3::Zero(kKeypointCount, 3);
    out.dist_k = similarity_grad(pred.keypoints, gt.keypoints, norm, grad_weight, g->d_keypoints,
                                 sink_k);
    MatX3 sink_v = MatX3::Zero(vn, 3);
    out.dist_v = similarity_grad(pred.vertices, gt.vertices, norm, grad_weight, g->d_vertices,
                                 sink_v);
  } else {
    out.dist_k = similarity(pred.keypoints, gt.keypoints, norm);
    out.dist_v = similarity(pred.vertices, gt.vertices, norm);
  }

  if (!with_projection) return out;

  MatX2 proj_pred = project(pred.keypoints, pred.intrinsics);
  MatX2 proj_gt = project(gt.keypoints, gt.intrinsics);
  if (with_grad) {
    MatX2 ga = MatX2::Zero(kKeypointCount, 2), gb = MatX2::Zero(kKeypointCount, 2);
    out.dist_proj = similarity_grad(proj_pred, proj_gt, norm, grad_weight, ga, gb);
    for (Eigen::Index i = 0; i < kKeypointCount; ++i) {
      Vec3 p = pred.keypoints.row(i).transpose();
      Vec2 up = ga.row(i).transpose();
      g->d_keypoints.row(i) += (up.transpose() * project_jacobian_point(p, pred.intrinsics));
      if (pred.intrinsics_predicted)
        g->d_intrinsics += project_jacobian_intrinsics(p).transpose() * up;
    }
  } else {
    out.dist_proj = similarity(proj_pred, proj_gt, norm);
  }
  return out;
}

LossBreakdown loss_total(const DistTerms& ori, const DistTerms& recycle, const CorrTerms& corr,
                         const LossWeights& w) {
  w.validate();
  LossBreakdown b;
  b.dist_k = ori.dist_k;
  b.dist_v = ori.dist_v;
  b.dist_proj = ori.dist_proj;
  b.corr_k = corr.corr_k;
  b.corr_v = corr.corr_v;
  b.corr_proj = corr.corr_proj;
  b.ori = ori.sum();
  b.recycle = recycle.sum();
  b.total = w.alpha * b.ori + w.beta * b.recycle + w.gamma * corr.sum();

  const struct {
    const char* name;
    double value;
  } components[] = {{"dist_k", b.dist_k},     {"dist_v", b.dist_v}, {"dist_proj", b.dist_proj},
                    {"corr_k", b.corr_k},     {"corr_v", b.corr_v}, {"corr_proj", b.corr_proj},
                    {"recycle", b.recycle},   {"ori", b.ori},       {"total", b.total}};
  for (const auto& c : components)
    if (!std::isfinite(c.value))
      throw_numerical(std::string("non-finite loss component: ") + c.name);
  return b;
}

}  // namespace rehand
