#pragma once

// Brute-force posterior over the (mu, log variance) plane. Used as the
// reference that sVB fits are checked against.

#include "svb/distributions.hpp"
#include "svb/engine.hpp"
#include "svb/posterior.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <optional>

namespace svb {

struct AxisRange {
  double lo = 0.0;
  double hi = 1.0;
  /// Node count; 1 pins the axis at lo (lo must equal hi).
  std::size_t resolution = 201;

  [[nodiscard]] Eigen::VectorXd nodes() const;
  [[nodiscard]] double cell_width() const;
};

struct GridSpec {
  AxisRange mu{-1.0, 3.0, 201};
  AxisRange log_var{-0.69314718055994529, 2.7725887222397811, 201};  // log 0.5 .. log 16
  bool include_prior = true;

  void validate() const;
};

struct GridResult {
  Eigen::VectorXd mu_axis;
  Eigen::VectorXd log_var_axis;
  Eigen::MatrixXd mass;  // (mu index, log_var index), sums to 1
  Eigen::Vector2d mean;
  Eigen::Vector2d variance;
  Eigen::Vector2d map;
  double covariance = 0.0;
  double rho = 0.0;
};

/// Evaluates log-likelihood (+ log prior when spec.include_prior) at every
/// node, subtracts the maximum, exponentiates and normalises. Throws
/// std::invalid_argument when the prior is required but missing and
/// std::runtime_error when every cell underflows.
[[nodiscard]] GridResult grid_posterior(ModelKind model, const Dataset& data,
                                        const std::optional<PriorSpec>& prior,
                                        const GridSpec& spec);

/// Same normalisation applied to precomputed log-posterior values.
[[nodiscard]] GridResult normalise_grid(const Eigen::VectorXd& mu_axis,
                                        const Eigen::VectorXd& log_var_axis,
                                        const Eigen::MatrixXd& log_post);

struct MomentSummary {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
  double rho = 0.0;
};

[[nodiscard]] MomentSummary moments(const GridResult& grid);
[[nodiscard]] MomentSummary moments(const PosteriorSummary& posterior);

struct ComparisonReport {
  Eigen::VectorXd mean_abs_diff;
  Eigen::VectorXd variance_ratio_error;  // |candidate / reference - 1|
  double rho_reference = 0.0;
  double rho_candidate = 0.0;
  double rho_abs_diff = 0.0;
  bool rho_sign_agrees = true;
};

/// Throws std::invalid_argument on mismatched parameter counts.
[[nodiscard]] ComparisonReport compare(const MomentSummary& reference,
                                       const MomentSummary& candidate);
[[nodiscard]] ComparisonReport compare(const GridResult& grid, const FitResult& fit);

}  // namespace svb
