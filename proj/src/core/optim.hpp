#pragma once

#include "core/types.hpp"

namespace rehand {

// Adaptive moments with decoupled weight decay. The decay term is applied to
// the parameters directly, not mixed into the gradient moments.
struct AdamWConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;

  void validate() const;
};

struct AdamWState {
  int64_t t = 0;
  VecX m;
  VecX v;

  AdamWState() = default;
  explicit AdamWState(Eigen::Index n) : m(VecX::Zero(n)), v(VecX::Zero(n)) {}
};

// One update in fixed evaluation order: advance t, update both moments,
// bias-correct, then theta -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta).
void adamw_step(VecX& theta, const VecX& grad, AdamWState& state, const AdamWConfig& config);

}  // namespace rehand
