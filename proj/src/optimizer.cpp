#include "svb/optimizer.hpp"

#include "svb/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace svb {

AdamState AdamState::fresh(Eigen::Index size, const AdamConfig& config) {
  if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate)) {
    throw std::invalid_argument("learning rate must be finite and >= 0");
  }
  if (!(config.beta1 > 0.0 && config.beta1 < 1.0) || !(config.beta2 > 0.0 && config.beta2 < 1.0)) {
    throw std::invalid_argument("Adam betas must lie in (0, 1)");
  }
  if (!(config.eps_hat > 0.0)) {
    throw std::invalid_argument("Adam eps_hat must be > 0");
  }
  AdamState state;
  state.first_moment = Eigen::VectorXd::Zero(size);
  state.second_moment = Eigen::VectorXd::Zero(size);
  state.config = config;
  return state;
}

Eigen::VectorXd adam_step(AdamState& state, const Eigen::VectorXd& params,
                          const Eigen::VectorXd& grad) {
  if (params.size() != grad.size() || params.size() != state.first_moment.size()) {
    throw std::invalid_argument("adam_step: parameter, gradient and state lengths differ");
  }
  if (!grad.allFinite()) {
    throw NumericError("adam_step: non-finite gradient");
  }
  const AdamConfig& c = state.config;
  state.step_count += 1;
  state.first_moment = c.beta1 * state.first_moment + (1.0 - c.beta1) * grad;
  state.second_moment =
      c.beta2 * state.second_moment + (1.0 - c.beta2) * grad.cwiseProduct(grad);

  const double t = static_cast<double>(state.step_count);
  const double bias1 = 1.0 - std::pow(c.beta1, t);
  const double bias2 = 1.0 - std::pow(c.beta2, t);
  const Eigen::ArrayXd m_hat = state.first_moment.array() / bias1;
  const Eigen::ArrayXd v_hat = state.second_moment.array() / bias2;
  return (params.array() - c.learning_rate * m_hat / (v_hat.sqrt() + c.eps_hat)).matrix();
}

}  // namespace svb
