#pragma once

#include <string>
#include <utility>
#include <vector>

#include "core/hand_model.hpp"
#include "core/types.hpp"

namespace rehand {

// Least-squares similarity (scale, rotation, translation) mapping pred onto
// gt; rotation is always proper (no reflection).
struct SimilarityTransform {
  double scale = 1.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  MatX3 apply(const MatX3& pts) const;
};

SimilarityTransform procrustes_align(const MatX3& pred, const MatX3& gt);

// Mean per-point Euclidean error after Procrustes alignment, in millimeters.
double pa_mpjpe(const MatX3& pred, const MatX3& gt);
double pa_mpvpe(const MatX3& pred, const MatX3& gt);

// Unaligned variant (plain mean per-vertex error, millimeters).
double mpvpe(const MatX3& pred, const MatX3& gt);

// Harmonic mean of precision/recall of nearest-neighbor hits within tau
// (meters). Inputs are expected to be aligned already.
double f_score(const MatX3& pred, const MatX3& gt, double tau);

struct MetricsReport {
  double pa_mpjpe_mm = 0.0;
  double pa_mpvpe_mm = 0.0;
  double f_at_5mm = 0.0;
  double f_at_15mm = 0.0;
  int sample_count = 0;
};

// Per-sample metrics: keypoints aligned for PA-MPJPE, vertices aligned once
// and reused for PA-MPVPE and both F-scores.
MetricsReport sample_metrics(const MatX3& pred_keypoints, const MatX3& gt_keypoints,
                             const MatX3& pred_vertices, const MatX3& gt_vertices);

// Mean over per-sample reports; count must be > 0.
MetricsReport aggregate_metrics(const std::vector<MetricsReport>& reports);

std::string metrics_csv(const MetricsReport& r);
std::string metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows);

}  // namespace rehand
