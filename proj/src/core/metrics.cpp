#include "core/metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "core/errors.hpp"

namespace rehand {

MatX3 SimilarityTransform::apply(const MatX3& pts) const {
  MatX3 out = scale * (pts * rotation.transpose());
  out.rowwise() += translation.transpose();
  return out;
}

SimilarityTransform procrustes_align(const MatX3& pred, const MatX3& gt) {
  if (pred.rows() != gt.rows()) throw_invalid_input("procrustes: point counts differ");
  const Eigen::Index n = pred.rows();
  if (n < 3) throw_invalid_input("procrustes: need at least 3 points");
  if (!pred.allFinite() || !gt.allFinite()) throw_numerical("procrustes: non-finite input");

  Eigen::RowVector3d mu_p = pred.colwise().mean();
  Eigen::RowVector3d mu_g = gt.colwise().mean();
  MatX3 P = pred.rowwise() - mu_p;
  MatX3 G = gt.rowwise() - mu_g;

  // Degeneracy checks: target must span at least a plane, source must not be
  // a single point.
  Eigen::SelfAdjointEigenSolver<Mat3> gt_spread(G.transpose() * G);
  const Vec3 ev = gt_spread.eigenvalues();  // ascending
  if (!(ev(1) > 1e-12 * std::max(1.0, ev(2))))
    throw_numerical("procrustes: degenerate target (rank < 2 after centering)");
  double sigma_p = P.squaredNorm() / static_cast<double>(n);
  if (!(sigma_p > 0.0)) throw_numerical("procrustes: source points are coincident");

  Mat3 cov = (G.transpose() * P) / static_cast<double>(n);
  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec3 d = Vec3::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) d(2) = -1.0;

  SimilarityTransform t;
  t.rotation = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
  t.scale = svd.singularValues().dot(d) / sigma_p;
  t.translation = mu_g.transpose() - t.scale * t.rotation * mu_p.transpose();
  return t;
}

namespace {

double mean_point_error_mm(const MatX3& a, const MatX3& b) {
  return (a - b).rowwise().norm().mean() * 1000.0;
}

}  // namespace

double pa_mpjpe(const MatX3& pred, const MatX3& gt) {
  SimilarityTransform t = procrustes_align(pred, gt);
  return mean_point_error_mm(t.apply(pred), gt);
}

double pa_mpvpe(const MatX3& pred, const MatX3& gt) { return pa_mpjpe(pred, gt); }

double mpvpe(const MatX3& pred, const MatX3& gt) {
  if (pred.rows() != gt.rows()) throw_invalid_input("mpvpe: vertex counts differ");
  return mean_point_error_mm(pred, gt);
}

double f_score(const MatX3& pred, const MatX3& gt, double tau) {
  if (!(tau > 0.0)) throw_invalid_input("f_score: tau must be positive");
  if (pred.rows() == 0 || gt.rows() == 0) throw_invalid_input("f_score: empty point set");
  const double tau2 = tau * tau;
  auto hits = [tau2](const MatX3& from, const MatX3& to) {
    Eigen::Index count = 0;
    for (Eigen::Index i = 0; i < from.rows(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < to.rows(); ++j)
        best = std::min(best, (from.row(i) - to.row(j)).squaredNorm());
      if (best <= tau2) ++count;
    }
    return static_cast<double>(count);
  };
  double precision = hits(pred, gt) / static_cast<double>(pred.rows());
  double recall = hits(gt, pred) / static_cast<double>(gt.rows());
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

MetricsReport sample_metrics(const MatX3& pred_keypoints, const MatX3& gt_keypoints,
                             const MatX3& pred_vertices, const MatX3& gt_vertices) {
  MetricsReport r;
  r.pa_mpjpe_mm = pa_mpjpe(pred_keypoints, gt_keypoints);
  SimilarityTransform t = procrustes_align(pred_vertices, gt_vertices);
  MatX3 aligned = t.apply(pred_vertices);
  r.pa_mpvpe_mm = mean_point_error_mm(aligned, gt_vertices);
  r.f_at_5mm = f_score(aligned, gt_vertices, 0.005);
  r.f_at_15mm = f_score(aligned, gt_vertices, 0.015);
  r.sample_count = 1;
  return r;
}

MetricsReport aggregate_metrics(const std::vector<MetricsReport>& reports) {
  if (reports.empty()) throw_invalid_input("aggregate_metrics: no samples");
  MetricsReport out;
  for (const auto& r : reports) {
    out.pa_mpjpe_mm += r.pa_mpjpe_mm;
    out.pa_mpvpe_mm += r.pa_mpvpe_mm;
    out.f_at_5mm += r.f_at_5mm;
    out.f_at_15mm += r.f_at_15mm;
    out.sample_count += r.sample_count;
  }
  double n = static_cast<double>(reports.size());
  out.pa_mpjpe_mm /= n;
  out.pa_mpvpe_mm /= n;
  out.f_at_5mm /= n;
  out.f_at_15mm /= n;
  return out;
}

std::string metrics_csv(const MetricsReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "pa_mpjpe_mm,pa_mpvpe_mm,f_at_5mm,f_at_15mm,samples\n%.17g,%.17g,%.17g,%.17g,%d\n",
                r.pa_mpjpe_mm, r.pa_mpvpe_mm, r.f_at_5mm, r.f_at_15mm, r.sample_count);
  return buf;
}

std::string metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  size_t label = 24;
  for (const auto& [name, r] : rows) label = std::max(label, name.size());
  std::string out;
  char buf[320];
  std::snprintf(buf, sizeof buf, "%-*s %12s %12s %8s %8s\n", static_cast<int>(label), "Method",
                "PA-MPJPE", "PA-MPVPE", "F@5mm", "F@15mm");
  out += buf;
  out += std::string(label + 44, '-') + "\n";
  for (const auto& [name, r] : rows) {
    std::snprintf(buf, sizeof buf, "%-*s %12.3f %12.3f %8.3f %8.3f\n", static_cast<int>(label),
                  name.c_str(), r.pa_mpjpe_mm, r.pa_mpvpe_mm, r.f_at_5mm, r.f_at_15mm);
    out += buf;
  }
  return out;
}

}  // namespace rehand
