#include "core/optim.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace rehand {

void AdamWConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw_invalid_config("adamw: lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw_invalid_config("adamw: betas must lie in [0, 1)");
  if (!(eps > 0.0)) throw_invalid_config("adamw: eps must be positive");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay))
    throw_invalid_config("adamw: weight decay must be non-negative");
}

void adamw_step(VecX& theta, const VecX& grad, AdamWState& state, const AdamWConfig& config) {
  config.validate();
  if (state.m.size() != theta.size() || state.v.size() != theta.size())
    throw_invalid_input("adamw: state size does not match parameters");
  if (grad.size() != theta.size())
    throw_invalid_input("adamw: gradient size does not match parameters");

  state.t += 1;
  state.m = config.beta1 * state.m + (1.0 - config.beta1) * grad;
  state.v = config.beta2 * state.v + (1.0 - config.beta2) * grad.cwiseProduct(grad);
  double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
  double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
  VecX m_hat = state.m / c1;
  VecX v_hat = state.v / c2;
  theta -= config.lr * (m_hat.array() / (v_hat.array().sqrt() + config.eps) +
                        config.weight_decay * theta.array())
                           .matrix();
}

}  // namespace rehand
