#pragma once

#include <string>
#include <vector>

#include "core/camera.hpp"
#include "core/hand_model.hpp"
#include "core/image.hpp"
#include "core/losses.hpp"
#include "core/types.hpp"

namespace rehand {

// Named slice of the flat parameter vector. Matrices are stored column-major
// inside their slice.
struct ParamBlock {
  std::string name;
  Eigen::Index offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;

  Eigen::Index size() const { return rows * cols; }
};

// Fixed featurizer + two tanh layers + linear heads for coarse vertices and
// raw intrinsics. Features are the input downsampled to feat_grid² grayscale
// values plus per-channel mean and standard deviation, all in [0, 1].
struct EstimatorLayout {
  int input_width = 128;
  int input_height = 128;
  int feat_grid = 32;
  int hidden = 128;
  Eigen::Index coarse_count = kDefaultCoarseCount;

  Eigen::Index feature_dim() const {
    return static_cast<Eigen::Index>(feat_grid) * feat_grid + 6;
  }
  // Blocks in canonical order: w1, b1, w2, b2, wc, bc, wi, bi. The order is
  // load-bearing: initialization draws and checkpoint layout follow it.
  std::vector<ParamBlock> blocks() const;
  ParamBlock block(const std::string& name) const;
  Eigen::Index total_params() const;
  void validate() const;
};

// Anchor intrinsics the raw head offsets are applied to: focal lengths map
// through softplus shifted so a zero activation yields the anchor; principal
// point maps through a sigmoid scaled to the image, again centered on the
// anchor.
struct IntrinsicsAnchor {
  double fx = 170.0;
  double fy = 170.0;
  double cx = 64.0;
  double cy = 64.0;
};

struct EstimatorParams {
  EstimatorLayout layout;
  IntrinsicsAnchor anchor;
  VecX theta;

  void validate() const;
};

struct EstimatorOutput {
  HandMesh coarse;
  HandMesh fine;
  MatX3 keypoints;
  CameraIntrinsics intrinsics;
  Vec4 raw_intrinsics = Vec4::Zero();
};

// Intermediate activations needed to run backward without re-doing forward.
struct ForwardCache {
  VecX features;
  VecX h1;
  VecX h2;
  Vec4 raw_intrinsics = Vec4::Zero();
};

struct GradCheckConfig {
  LossWeights weights;
  uint64_t seed = 0;
  int sample_coords = 64;
  // The objective sits around 1e2-1e4 (pixel-squared projection residuals),
  // so the difference quotient loses ~|L|*machine_eps/eps to cancellation; a
  // step of 1e-4 keeps that floor four orders below the 1e-4 pass threshold
  // while the smooth tanh/pinhole chain keeps truncation negligible.
  double eps = 1e-4;
  // Empty means every block; otherwise coordinates are sampled from the
  // named blocks only.
  std::vector<std::string> block_filter;
  bool intrinsics_predicted = true;
  // Dropping the projection terms makes the objective exactly quadratic in
  // the coarse head (L2), the reference case where central differences are
  // exact to roundoff.
  bool with_projection = true;
};

class Estimator {
 public:
  Estimator(const HandTemplate& tpl, EstimatorLayout layout);

  const EstimatorLayout& layout() const { return layout_; }
  const HandTemplate& hand_template() const { return *tpl_; }

  // Deterministic and pure. The cache, when given, is filled for backward.
  EstimatorOutput forward(const Image& image, const EstimatorParams& params,
                          ForwardCache* cache = nullptr) const;

  // Gradient of <upstream, output> over theta. Upstream gradients arrive on
  // fine vertices, keypoints, and mapped intrinsics (fx, fy, cx, cy);
  // the intrinsics component is routed through the positivity maps.
  VecX backward(const EstimatorParams& params, const ForwardCache& cache,
                const PhaseGrad& upstream) const;

  // Zero-initialized biases except the coarse head, which starts at the
  // template rest pose; weights drawn uniform in ±1/√fan_in, one draw per
  // entry, blocks in canonical order, entries in storage order.
  EstimatorParams init_params(uint64_t seed) const;

  // Max relative error between analytic and central-difference gradients of
  // the full two-phase objective over sampled theta coordinates. The
  // synthetic image is held fixed (rendering is a gradient barrier), so it
  // is supplied by the caller, rendered at the same params.
  double finite_diff_check(const Image& original, const Image& synthetic,
                           const GroundTruth& gt, const EstimatorParams& params,
                           const GradCheckConfig& cfg) const;

 private:
  const HandTemplate* tpl_;
  EstimatorLayout layout_;
};

VecX featurize(const Image& image, const EstimatorLayout& layout);

// Positivity maps and their derivatives, exposed for direct testing.
double softplus(double x);
double inv_softplus(double y);
Vec4 map_intrinsics(const Vec4& raw, const IntrinsicsAnchor& anchor, int width, int height);
Vec4 map_intrinsics_derivative(const Vec4& raw, const IntrinsicsAnchor& anchor, int width,
                               int height);

}  // namespace rehand
