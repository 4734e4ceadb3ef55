#include <doctest.h>

#include <cmath>
#include <vector>

#include "core/backgrounds.hpp"
#include "core/errors.hpp"
#include "core/estimator.hpp"
#include "core/hand_model.hpp"
#include "core/rng.hpp"

using namespace rehand;

namespace {

const HandTemplate& shared_template() {
  static HandTemplate tpl = build_default_template();
  return tpl;
}

EstimatorLayout default_layout() {
  EstimatorLayout l;
  l.coarse_count = shared_template().v_coarse();
  return l;
}

Image test_image(uint64_t seed) { return make_background(seed, 128, 128); }

}  // namespace

TEST_CASE("layout blocks partition the parameter vector") {
  EstimatorLayout l = default_layout();
  l.validate();
  Eigen::Index offset = 0;
  for (const ParamBlock& b : l.blocks()) {
    CHECK(b.offset == offset);
    offset += b.size();
  }
  CHECK(offset == l.total_params());
  // 128x1030 + 128 + 128x128 + 128 + 585x128 + 585 + 4x128 + 4
  CHECK(l.total_params() == 224461);
  CHECK(l.block("wc").rows == 3 * l.coarse_count);
  CHECK_THROWS_AS(l.block("nope"), RehandError);
}

TEST_CASE("zero weights leave only the head biases") {
  const HandTemplate& tpl = shared_template();
  Estimator est(tpl, default_layout());
  EstimatorParams p;
  p.layout = est.layout();
  p.theta = VecX::Zero(p.layout.total_params());
  Vec4 bi(0.3, -0.2, 0.5, -0.1);
  p.theta.segment(p.layout.block("bi").offset, 4) = bi;
  p.validate();

  EstimatorOutput out = est.forward(test_image(1), p);
  CHECK(out.coarse.vertices.cwiseAbs().maxCoeff() == 0.0);
  CHECK(out.fine.vertices.cwiseAbs().maxCoeff() == 0.0);
  CHECK(out.keypoints.cwiseAbs().maxCoeff() == 0.0);

  Vec4 expect = map_intrinsics(bi, p.anchor, 128, 128);
  CHECK(out.intrinsics.fx == expect(0));
  CHECK(out.intrinsics.fy == expect(1));
  CHECK(out.intrinsics.cx == expect(2));
  CHECK(out.intrinsics.cy == expect(3));
  // Independent recomputation of the focal map.
  double shifted = 0.3 + std::log(std::expm1(p.anchor.fx));
  CHECK(out.intrinsics.fx == doctest::Approx(std::log1p(std::exp(shifted))).epsilon(1e-12));
  CHECK(out.intrinsics.fx > 0.0);
  CHECK(out.intrinsics.cx > 0.0);
  CHECK(out.intrinsics.cx < 128.0);
}

TEST_CASE("positivity maps hit the anchor at zero and match difference quotients") {
  IntrinsicsAnchor a;
  Vec4 at_zero = map_intrinsics(Vec4::Zero(), a, 128, 128);
  CHECK(at_zero(0) == doctest::Approx(a.fx).epsilon(1e-12));
  CHECK(at_zero(1) == doctest::Approx(a.fy).epsilon(1e-12));
  CHECK(at_zero(2) == doctest::Approx(a.cx).epsilon(1e-12));
  CHECK(at_zero(3) == doctest::Approx(a.cy).epsilon(1e-12));

  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Vec4 raw(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
    Vec4 d = map_intrinsics_derivative(raw, a, 128, 128);
    const double eps = 1e-6;
    for (int i = 0; i < 4; ++i) {
      Vec4 up = raw, dn = raw;
      up(i) += eps;
      dn(i) -= eps;
      double fd = (map_intrinsics(up, a, 128, 128)(i) - map_intrinsics(dn, a, 128, 128)(i)) /
                  (2 * eps);
      CHECK(d(i) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
  CHECK(map_intrinsics(Vec4::Constant(-50.0), a, 128, 128).minCoeff() > 0.0);
  // The sigmoid saturates to 1.0 in doubles at +50, so the bound is only
  // reached-at, never exceeded.
  CHECK(map_intrinsics(Vec4::Constant(50.0), a, 128, 128)(2) <= 128.0);
  CHECK(map_intrinsics(Vec4::Constant(5.0), a, 128, 128)(2) < 128.0);
}

TEST_CASE("forward is deterministic and validates inputs") {
  const HandTemplate& tpl = shared_template();
  Estimator est(tpl, default_layout());
  EstimatorParams p = est.init_params(7);
  Image img = test_image(2);

  EstimatorOutput a = est.forward(img, p);
  EstimatorOutput b = est.forward(img, p);
  CHECK(a.fine.vertices == b.fine.vertices);
  CHECK(a.keypoints == b.keypoints);
  CHECK(a.intrinsics.fx == b.intrinsics.fx);
  CHECK(a.raw_intrinsics == b.raw_intrinsics);

  Image small = make_background(3, 64, 64);
  CHECK_THROWS_AS(est.forward(small, p), RehandError);
  EstimatorParams bad = p;
  bad.theta = VecX::Zero(10);
  CHECK_THROWS_AS(est.forward(img, bad), RehandError);

  EstimatorLayout wrong = default_layout();
  wrong.coarse_count += 1;
  CHECK_THROWS_AS(Estimator(tpl, wrong), RehandError);
}

TEST_CASE("fine vertices and keypoints follow the template maps exactly") {
  const HandTemplate& tpl = shared_template();
  Estimator est(tpl, default_layout());
  EstimatorParams p = est.init_params(11);
  EstimatorOutput out = est.forward(test_image(4), p);

  // Naive matmul oracles against the declared linear maps.
  MatX3 fine = MatX3::Zero(tpl.v_fine(), 3);
  for (int i = 0; i < tpl.v_fine(); ++i)
    for (int j = 0; j < tpl.v_coarse(); ++j)
      for (int c = 0; c < 3; ++c) fine(i, c) += tpl.upsample(i, j) * out.coarse.vertices(j, c);
  CHECK((out.fine.vertices - fine).cwiseAbs().maxCoeff() < 1e-12);

  MatX3 kp = MatX3::Zero(kKeypointCount, 3);
  for (int k = 0; k < kKeypointCount; ++k)
    for (int i = 0; i < tpl.v_fine(); ++i)
      for (int c = 0; c < 3; ++c) kp(k, c) += tpl.joint_regressor(k, i) * fine(i, c);
  CHECK((out.keypoints - kp).cwiseAbs().maxCoeff() < 1e-12);

  CHECK(out.coarse.resolution == MeshResolution::Coarse);
  CHECK(out.fine.resolution == MeshResolution::Fine);
}

TEST_CASE("initialization is seeded, bounded, and starts at the rest pose") {
  const HandTemplate& tpl = shared_template();
  Estimator est(tpl, default_layout());
  EstimatorParams a = est.init_params(42);
  EstimatorParams b = est.init_params(42);
  EstimatorParams c = est.init_params(43);
  a.validate();
  CHECK(a.theta == b.theta);
  CHECK(a.theta != c.theta);

  for (const char* name : {"w1", "w2", "wc", "wi"}) {
    ParamBlock blk = a.layout.block(name);
    double bound = 1.0 / std::sqrt(static_cast<double>(blk.cols));
    double mx = a.theta.segment(blk.offset, blk.size()).cwiseAbs().maxCoeff();
    CHECK(mx <= bound);
    CHECK(mx > 0.0);
  }
  for (const char* name : {"b1", "b2", "bi"}) {
    ParamBlock blk = a.layout.block(name);
    CHECK(a.theta.segment(blk.offset, blk.size()).cwiseAbs().maxCoeff() == 0.0);
  }
  ParamBlock bc = a.layout.block("bc");
  MatX3 rest = tpl.rest_coarse();
  CHECK((a.theta.segment(bc.offset, bc.size()) -
         Eigen::Map<const VecX>(rest.data(), bc.size()))
            .cwiseAbs()
            .maxCoeff() == 0.0);

  // Zero-activation forward therefore reproduces the rest pose at anchor
  // intrinsics when all weights are zeroed.
  EstimatorParams rest_only = a;
  for (const char* name : {"w1", "w2", "wc", "wi"}) {
    ParamBlock blk = a.layout.block(name);
    rest_only.theta.segment(blk.offset, blk.size()).setZero();
  }
  EstimatorOutput out = est.forward(test_image(5), rest_only);
  CHECK((out.coarse.vertices - rest).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("backward matches finite differences through the whole network") {
  const HandTemplate& tpl = shared_template();
  Estimator est(tpl, default_layout());
  Image img = test_image(6);

  for (uint64_t seed : {1ull, 2ull, 3ull}) {
    EstimatorParams p = est.init_params(seed);
    Rng rng(seed + 77);
    PhaseGrad up(tpl.v_fine());
    for (Eigen::Index i = 0; i < up.d_vertices.rows(); ++i)
      for (int j = 0; j < 3; ++j) up.d_vertices(i, j) = rng.uniform(-1, 1);
    for (Eigen::Index i = 0; i < kKeypointCount; ++i)
      for (int j = 0; j < 3; ++j) up.d_keypoints(i, j) = rng.uniform(-1, 1);
    for (int i = 0; i < 4; ++i) up.d_intrinsics(i) = rng.uniform(-1, 1);

    ForwardCache cache;
    est.forward(img, p, &cache);
    VecX analytic = est.backward(p, cache, up);
    REQUIRE(analytic.size() == p.theta.size());

    auto objective = [&](const VecX& theta) {
      EstimatorParams q = p;
      q.theta = theta;
      EstimatorOutput o = est.forward(img, q);
      Vec4 mc(o.intrinsics.fx, o.intrinsics.fy, o.intrinsics.cx, o.intrinsics.cy);
      return (up.d_vertices.cwiseProduct(o.fine.vertices)).sum() +
             (up.d_keypoints.cwiseProduct(o.keypoints)).sum() + up.d_intrinsics.dot(mc);
    };

    VecX theta = p.theta;
    const double eps = 1e-5;
    double max_rel = 0.0;
    for (int s = 0; s < 24; ++s) {
      const auto blocks = p.layout.blocks();
      const ParamBlock& b = blocks[rng.below(blocks.size())];
      Eigen::Index idx = b.offset + static_cast<Eigen::Index>(
                                        rng.below(static_cast<uint64_t>(b.size())));
      double saved = theta(idx);
      theta(idx) = saved + eps;
      double u = objective(theta);
      theta(idx) = saved - eps;
      double d = objective(theta);
      theta(idx) = saved;
      double fd = (u - d) / (2 * eps);
      double rel = std::abs(analytic(idx) - fd) /
                   std::max({std::abs(analytic(idx)), std::abs(fd), 1e-6});
      max_rel = std::max(max_rel, rel);
    }
    CHECK(max_rel < 1e-5);
  }
}

TEST_CASE("zero upstream gradient yields a zero parameter gradient") {
  const HandTemplate& tpl = shared_template();
  Estimator est(tpl, default_layout());
  EstimatorParams p = est.init_params(9);
  ForwardCache cache;
  est.forward(test_image(7), p, &cache);
  VecX g = est.backward(p, cache, PhaseGrad(tpl.v_fine()));
  CHECK(g.cwiseAbs().maxCoeff() == 0.0);

  PhaseGrad wrong(tpl.v_fine() - 1);
  CHECK_THROWS_AS(est.backward(p, cache, wrong), RehandError);
}

TEST_CASE("gradient checker: quadratic head is exact, defaults pass thresholds") {
  const HandTemplate& tpl = shared_template();
  Estimator est(tpl, default_layout());
  EstimatorParams p = est.init_params(3);

  SampleGenConfig gen;
  GeneratedSample sample = generate_sample(tpl, 17, gen);
  GroundTruth gt{sample.fine.vertices, sample.keypoints, sample.intrinsics};
  Image original = test_image(8);
  Image synthetic = test_image(9);

  GradCheckConfig quad;
  quad.weights.norm = Norm::L2;
  quad.block_filter = {"wc", "bc"};
  quad.intrinsics_predicted = false;
  quad.with_projection = false;
  quad.sample_coords = 32;
  // Without the projection terms the output is affine in the coarse head, so
  // this L2 objective is exactly quadratic and central differences are exact
  // up to roundoff.
  CHECK(est.finite_diff_check(original, synthetic, gt, p, quad) < 1e-8);

  GradCheckConfig full;
  full.weights.norm = Norm::L2;
  full.sample_coords = 48;
  CHECK(est.finite_diff_check(original, synthetic, gt, p, full) < 1e-5);

  GradCheckConfig l1;
  l1.weights.norm = Norm::L1;
  l1.sample_coords = 48;
  CHECK(est.finite_diff_check(original, synthetic, gt, p, l1) < 1e-4);

  GradCheckConfig bad;
  bad.eps = 0.0;
  CHECK_THROWS_AS(est.finite_diff_check(original, synthetic, gt, p, bad), RehandError);
  bad.eps = 1e-6;
  bad.block_filter = {"nothing"};
  CHECK_THROWS_AS(est.finite_diff_check(original, synthetic, gt, p, bad), RehandError);
}

TEST_CASE("feature vector layout and range") {
  EstimatorLayout l = default_layout();
  Image img = test_image(10);
  VecX f = featurize(img, l);
  CHECK(f.size() == 1030);
  CHECK(f.minCoeff() >= 0.0);
  CHECK(f.maxCoeff() <= 1.0);

  // Constant image: zero variance, mean equal to the pixel value.
  Image flat(32, 32);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) flat.set(x, y, {102, 51, 204});
  EstimatorLayout small = l;
  small.input_width = small.input_height = 32;
  VecX ff = featurize(flat, small);
  double luma = (0.299 * 102 + 0.587 * 51 + 0.114 * 204) / 255.0;
  CHECK(ff(0) == doctest::Approx(luma).epsilon(1e-12));
  CHECK(ff(1024) == doctest::Approx(102.0 / 255.0).epsilon(1e-12));
  CHECK(ff(1025) == doctest::Approx(51.0 / 255.0).epsilon(1e-12));
  CHECK(ff(1026) == doctest::Approx(204.0 / 255.0).epsilon(1e-12));
  // Variance of a constant channel is zero up to the accumulated roundoff of
  // the 1024-term moment sums.
  CHECK(ff.tail(3).cwiseAbs().maxCoeff() < 1e-6);
}
