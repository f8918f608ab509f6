#pragma once

#include <Eigen/Core>

#include <cstdint>

namespace svb {

struct AdamConfig {
  double learning_rate = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;
};

struct AdamState {
  std::int64_t step_count = 0;
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  AdamConfig config;

  /// Fresh state for `size` parameters. Throws std::invalid_argument on bad config.
  static AdamState fresh(Eigen::Index size, const AdamConfig& config = {});
};

/// One bias-corrected Adam descent step on `grad`; returns the updated
/// parameters. Throws svb::NumericError if any gradient entry is not
/// finite and std::invalid_argument on length mismatch.
[[nodiscard]] Eigen::VectorXd adam_step(AdamState& state, const Eigen::VectorXd& params,
                                        const Eigen::VectorXd& grad);

}  // namespace svb
