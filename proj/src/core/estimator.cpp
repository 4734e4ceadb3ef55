#include "core/estimator.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace rehand {

namespace {

constexpr uint64_t kParamStreamTag = 0x9E57A1B3;
constexpr uint64_t kGradCheckStreamTag = 0x6F2D8B41;

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

double softplus(double x) { return x > 40.0 ? x : std::log1p(std::exp(x)); }

double inv_softplus(double y) {
  if (!(y > 0.0)) throw_invalid_config("inv_softplus: needs a positive value");
  return y > 40.0 ? y : std::log(std::expm1(y));
}

Vec4 map_intrinsics(const Vec4& raw, const IntrinsicsAnchor& a, int width, int height) {
  Vec4 out;
  out(0) = softplus(raw(0) + inv_softplus(a.fx));
  out(1) = softplus(raw(1) + inv_softplus(a.fy));
  out(2) = width * sigmoid(raw(2) + logit(a.cx / width));
  out(3) = height * sigmoid(raw(3) + logit(a.cy / height));
  return out;
}

Vec4 map_intrinsics_derivative(const Vec4& raw, const IntrinsicsAnchor& a, int width, int height) {
  Vec4 d;
  d(0) = sigmoid(raw(0) + inv_softplus(a.fx));
  d(1) = sigmoid(raw(1) + inv_softplus(a.fy));
  double sx = sigmoid(raw(2) + logit(a.cx / width));
  double sy = sigmoid(raw(3) + logit(a.cy / height));
  d(2) = width * sx * (1.0 - sx);
  d(3) = height * sy * (1.0 - sy);
  return d;
}

std::vector<ParamBlock> EstimatorLayout::blocks() const {
  const Eigen::Index f = feature_dim();
  const Eigen::Index h = hidden;
  const Eigen::Index c = 3 * coarse_count;
  std::vector<ParamBlock> out = {
      {"w1", 0, h, f}, {"b1", 0, h, 1}, {"w2", 0, h, h}, {"b2", 0, h, 1},
      {"wc", 0, c, h}, {"bc", 0, c, 1}, {"wi", 0, 4, h}, {"bi", 0, 4, 1},
  };
  Eigen::Index offset = 0;
  for (ParamBlock& b : out) {
    b.offset = offset;
    offset += b.size();
  }
  return out;
}

ParamBlock EstimatorLayout::block(const std::string& name) const {
  for (const ParamBlock& b : blocks())
    if (b.name == name) return b;
  throw_invalid_input("unknown parameter block '" + name + "'");
}

Eigen::Index EstimatorLayout::total_params() const {
  Eigen::Index total = 0;
  for (const ParamBlock& b : blocks()) total += b.size();
  return total;
}

void EstimatorLayout::validate() const {
  if (input_width <= 0 || input_height <= 0) throw_invalid_config("estimator: input size");
  if (feat_grid <= 0 || hidden <= 0) throw_invalid_config("estimator: layer sizes");
  if (coarse_count <= 0) throw_invalid_config("estimator: coarse vertex count");
  Eigen::Index offset = 0;
  for (const ParamBlock& b : blocks()) {
    if (b.offset != offset) throw_invalid_config("estimator: layout slices must be contiguous");
    offset += b.size();
  }
}

void EstimatorParams::validate() const {
  layout.validate();
  if (theta.size() != layout.total_params())
    throw_invalid_config("estimator params: theta size does not match layout");
  if (!theta.allFinite()) throw_invalid_config("estimator params: non-finite theta");
  if (!(anchor.fx > 0.0) || !(anchor.fy > 0.0) || !std::isfinite(anchor.fx) ||
      !std::isfinite(anchor.fy))
    throw_invalid_config("estimator params: focal anchors must be positive");
  if (!(anchor.cx > 0.0) || !(anchor.cx < layout.input_width) || !(anchor.cy > 0.0) ||
      !(anchor.cy < layout.input_height))
    throw_invalid_config("estimator params: principal anchors must lie inside the image");
}

VecX featurize(const Image& image, const EstimatorLayout& layout) {
  Image ds = resize_bilinear(image, layout.feat_grid, layout.feat_grid);
  const Eigen::Index grid = static_cast<Eigen::Index>(layout.feat_grid) * layout.feat_grid;
  VecX f(layout.feature_dim());
  double sum[3] = {0, 0, 0}, sumsq[3] = {0, 0, 0};
  Eigen::Index idx = 0;
  for (int y = 0; y < ds.height; ++y)
    for (int x = 0; x < ds.width; ++x, ++idx) {
      const uint8_t* p = ds.px(x, y);
      double r = p[0] / 255.0, g = p[1] / 255.0, b = p[2] / 255.0;
      f(idx) = 0.299 * r + 0.587 * g + 0.114 * b;
      sum[0] += r; sum[1] += g; sum[2] += b;
      sumsq[0] += r * r; sumsq[1] += g * g; sumsq[2] += b * b;
    }
  const double n = static_cast<double>(grid);
  for (int c = 0; c < 3; ++c) {
    double mean = sum[c] / n;
    double var = std::max(0.0, sumsq[c] / n - mean * mean);
    f(grid + c) = mean;
    f(grid + 3 + c) = std::sqrt(var);
  }
  return f;
}

Estimator::Estimator(const HandTemplate& tpl, EstimatorLayout layout)
    : tpl_(&tpl), layout_(layout) {
  layout_.validate();
  if (tpl.v_coarse() != layout_.coarse_count)
    throw_invalid_config("estimator: layout coarse count does not match the template");
}

namespace {

Eigen::Map<const MatX> block_mat(const VecX& theta, const ParamBlock& b) {
  return Eigen::Map<const MatX>(theta.data() + b.offset, b.rows, b.cols);
}

Eigen::Map<const VecX> block_vec(const VecX& theta, const ParamBlock& b) {
  return Eigen::Map<const VecX>(theta.data() + b.offset, b.size());
}

Eigen::Map<MatX> block_mat(VecX& theta, const ParamBlock& b) {
  return Eigen::Map<MatX>(theta.data() + b.offset, b.rows, b.cols);
}

Eigen::Map<VecX> block_vec(VecX& theta, const ParamBlock& b) {
  return Eigen::Map<VecX>(theta.data() + b.offset, b.size());
}

}  // namespace

EstimatorOutput Estimator::forward(const Image& image, const EstimatorParams& params,
                                   ForwardCache* cache) const {
  if (image.width != layout_.input_width || image.height != layout_.input_height)
    throw_invalid_input("estimator forward: image size does not match the configured input");
  if (params.theta.size() != layout_.total_params())
    throw_invalid_input("estimator forward: params do not match the layout");

  const VecX& t = params.theta;
  VecX f = featurize(image, layout_);
  VecX h1 = (block_mat(t, layout_.block("w1")) * f + block_vec(t, layout_.block("b1")))
                .array()
                .tanh();
  VecX h2 = (block_mat(t, layout_.block("w2")) * h1 + block_vec(t, layout_.block("b2")))
                .array()
                .tanh();
  VecX zc = block_mat(t, layout_.block("wc")) * h2 + block_vec(t, layout_.block("bc"));
  Vec4 zi = block_mat(t, layout_.block("wi")) * h2 + block_vec(t, layout_.block("bi"));

  EstimatorOutput out;
  out.coarse.resolution = MeshResolution::Coarse;
  out.coarse.vertices = Eigen::Map<const MatX3>(zc.data(), layout_.coarse_count, 3);
  out.fine = upsample_mesh(out.coarse, *tpl_);
  out.keypoints = regress_keypoints(out.fine, *tpl_);
  out.raw_intrinsics = zi;
  Vec4 mc = map_intrinsics(zi, params.anchor, layout_.input_width, layout_.input_height);
  out.intrinsics.fx = mc(0);
  out.intrinsics.fy = mc(1);
  out.intrinsics.cx = mc(2);
  out.intrinsics.cy = mc(3);
  out.intrinsics.width = layout_.input_width;
  out.intrinsics.height = layout_.input_height;

  if (cache) {
    cache->features = std::move(f);
    cache->h1 = std::move(h1);
    cache->h2 = std::move(h2);
    cache->raw_intrinsics = zi;
  }
  return out;
}

VecX Estimator::backward(const EstimatorParams& params, const ForwardCache& cache,
                         const PhaseGrad& upstream) const {
  if (upstream.d_vertices.rows() != tpl_->v_fine() || upstream.d_vertices.cols() != 3)
    throw_invalid_input("estimator backward: fine-vertex gradient shape mismatch");
  if (upstream.d_keypoints.rows() != kKeypointCount)
    throw_invalid_input("estimator backward: keypoint gradient shape mismatch");
  if (cache.features.size() != layout_.feature_dim())
    throw_invalid_input("estimator backward: cache does not match the layout");

  const VecX& t = params.theta;
  MatX3 d_fine = upstream.d_vertices + tpl_->joint_regressor.transpose() * upstream.d_keypoints;
  MatX3 d_coarse = tpl_->upsample.transpose() * d_fine;
  Eigen::Map<const VecX> dzc(d_coarse.data(), 3 * layout_.coarse_count);
  Vec4 dzi = upstream.d_intrinsics.cwiseProduct(map_intrinsics_derivative(
      cache.raw_intrinsics, params.anchor, layout_.input_width, layout_.input_height));

  VecX dh2 = block_mat(t, layout_.block("wc")).transpose() * dzc +
             block_mat(t, layout_.block("wi")).transpose() * dzi;
  VecX dz2 = dh2.array() * (1.0 - cache.h2.array().square());
  VecX dh1 = block_mat(t, layout_.block("w2")).transpose() * dz2;
  VecX dz1 = dh1.array() * (1.0 - cache.h1.array().square());

  VecX grad = VecX::Zero(layout_.total_params());
  block_mat(grad, layout_.block("w1")) = dz1 * cache.features.transpose();
  block_vec(grad, layout_.block("b1")) = dz1;
  block_mat(grad, layout_.block("w2")) = dz2 * cache.h1.transpose();
  block_vec(grad, layout_.block("b2")) = dz2;
  block_mat(grad, layout_.block("wc")) = dzc * cache.h2.transpose();
  block_vec(grad, layout_.block("bc")) = dzc;
  block_mat(grad, layout_.block("wi")) = dzi * cache.h2.transpose();
  block_vec(grad, layout_.block("bi")) = dzi;
  return grad;
}

EstimatorParams Estimator::init_params(uint64_t seed) const {
  EstimatorParams p;
  p.layout = layout_;
  p.anchor.cx = layout_.input_width / 2.0;
  p.anchor.cy = layout_.input_height / 2.0;
  p.theta = VecX::Zero(layout_.total_params());

  Rng rng = Rng::derive(seed, kParamStreamTag);
  for (const ParamBlock& b : layout_.blocks()) {
    if (b.cols == 1) continue;  // biases stay zero here
    double bound = 1.0 / std::sqrt(static_cast<double>(b.cols));
    for (Eigen::Index k = 0; k < b.size(); ++k)
      p.theta(b.offset + k) = rng.uniform(-bound, bound);
  }
  MatX3 rest = tpl_->rest_coarse();
  block_vec(p.theta, layout_.block("bc")) =
      Eigen::Map<const VecX>(rest.data(), 3 * layout_.coarse_count);
  return p;
}

namespace {

PhaseOutput to_phase(const EstimatorOutput& out, bool predicted, const CameraIntrinsics& gt_mc) {
  PhaseOutput p;
  p.vertices = out.fine.vertices;
  p.keypoints = out.keypoints;
  p.intrinsics = predicted ? out.intrinsics : gt_mc;
  p.intrinsics_predicted = predicted;
  return p;
}

}  // namespace

double Estimator::finite_diff_check(const Image& original, const Image& synthetic,
                                    const GroundTruth& gt, const EstimatorParams& params,
                                    const GradCheckConfig& cfg) const {
  if (!(cfg.eps > 0.0) || cfg.eps > 1e-3)
    throw_invalid_config("finite_diff_check: eps must be in (0, 1e-3]");
  if (cfg.sample_coords <= 0) throw_invalid_config("finite_diff_check: sample_coords");
  cfg.weights.validate();
  const Norm norm = cfg.weights.norm;

  auto objective = [&](const VecX& theta) {
    EstimatorParams p = params;
    p.theta = theta;
    EstimatorOutput o1 = forward(original, p);
    EstimatorOutput o2 = forward(synthetic, p);
    PhaseOutput p1 = to_phase(o1, cfg.intrinsics_predicted, gt.intrinsics);
    PhaseOutput p2 = to_phase(o2, cfg.intrinsics_predicted, gt.intrinsics);
    DistTerms d1 = loss_dist(p1, gt, norm, 0.0, nullptr, cfg.with_projection);
    DistTerms d2 = loss_dist(p2, gt, norm, 0.0, nullptr, cfg.with_projection);
    CorrTerms c = loss_corr(p1, p2, norm, 0.0, nullptr, nullptr, cfg.with_projection);
    return cfg.weights.alpha * d1.sum() + cfg.weights.beta * d2.sum() +
           cfg.weights.gamma * c.sum();
  };

  ForwardCache c1, c2;
  EstimatorOutput o1 = forward(original, params, &c1);
  EstimatorOutput o2 = forward(synthetic, params, &c2);
  PhaseOutput p1 = to_phase(o1, cfg.intrinsics_predicted, gt.intrinsics);
  PhaseOutput p2 = to_phase(o2, cfg.intrinsics_predicted, gt.intrinsics);
  PhaseGrad g1(tpl_->v_fine()), g2(tpl_->v_fine());
  loss_dist(p1, gt, norm, cfg.weights.alpha, &g1, cfg.with_projection);
  loss_dist(p2, gt, norm, cfg.weights.beta, &g2, cfg.with_projection);
  loss_corr(p1, p2, norm, cfg.weights.gamma, &g1, &g2, cfg.with_projection);
  VecX analytic = backward(params, c1, g1) + backward(params, c2, g2);

  std::vector<ParamBlock> pool;
  for (const ParamBlock& b : layout_.blocks()) {
    if (cfg.block_filter.empty() ||
        std::find(cfg.block_filter.begin(), cfg.block_filter.end(), b.name) !=
            cfg.block_filter.end())
      pool.push_back(b);
  }
  if (pool.empty()) throw_invalid_config("finite_diff_check: block filter matched nothing");

  Rng rng = Rng::derive(cfg.seed, kGradCheckStreamTag);
  VecX theta = params.theta;
  const double base = norm == Norm::L1 ? objective(theta) : 0.0;
  // Coordinates whose gradient is this far below the largest one carry only
  // cancellation noise in the difference quotient, so the error floor scales
  // with the gradient's own magnitude rather than treating noise as signal.
  const double floor = std::max(1e-6, 1e-6 * analytic.cwiseAbs().maxCoeff());
  double max_rel = 0.0;
  for (int s = 0; s < cfg.sample_coords; ++s) {
    const ParamBlock& b = pool[rng.below(pool.size())];
    Eigen::Index idx = b.offset + static_cast<Eigen::Index>(rng.below(
                                      static_cast<uint64_t>(b.size())));
    double saved = theta(idx);
    theta(idx) = saved + cfg.eps;
    double up = objective(theta);
    theta(idx) = saved - cfg.eps;
    double dn = objective(theta);
    theta(idx) = saved;
    double fd = (up - dn) / (2.0 * cfg.eps);
    if (norm == Norm::L1) {
      // Skip coordinates whose one-sided slopes disagree: the step straddles
      // an absolute-value kink and central differences are meaningless there.
      double fwd = (up - base) / cfg.eps, bwd = (base - dn) / cfg.eps;
      if (std::abs(fwd - bwd) > 1e-3 * std::max({std::abs(fwd), std::abs(bwd), 1.0})) continue;
    }
    double rel =
        std::abs(analytic(idx) - fd) / std::max({std::abs(analytic(idx)), std::abs(fd), floor});
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

}  // namespace rehand
