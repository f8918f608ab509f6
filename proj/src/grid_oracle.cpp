#include "svb/grid_oracle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace svb {

Eigen::VectorXd AxisRange::nodes() const {
  if (resolution == 1) return Eigen::VectorXd::Constant(1, lo);
  return Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(resolution), lo, hi);
}

double AxisRange::cell_width() const {
  return resolution > 1 ? (hi - lo) / static_cast<double>(resolution - 1) : 0.0;
}

void GridSpec::validate() const {
  for (const AxisRange* axis : {&mu, &log_var}) {
    if (!std::isfinite(axis->lo) || !std::isfinite(axis->hi)) {
      throw std::invalid_argument("grid range must be finite");
    }
    if (axis->resolution == 0) {
      throw std::invalid_argument("grid resolution must be >= 1");
    }
    if (axis->resolution == 1 ? axis->lo != axis->hi : !(axis->lo < axis->hi)) {
      throw std::invalid_argument(
          "grid axis needs lo < hi (or lo == hi with a single node)");
    }
  }
}

GridResult grid_posterior(ModelKind model, const Dataset& data,
                          const std::optional<PriorSpec>& prior, const GridSpec& spec) {
  spec.validate();
  if (data.empty()) throw std::invalid_argument("grid_posterior: empty dataset");
  if (spec.include_prior && !prior) {
    throw std::invalid_argument("grid_posterior: include_prior set but no prior given");
  }
  if (spec.include_prior && prior->dim() != 2) {
    throw std::invalid_argument("grid_posterior: prior must be 2-dimensional");
  }
  const Eigen::VectorXd mu_axis = spec.mu.nodes();
  const Eigen::VectorXd lv_axis = spec.log_var.nodes();
  Eigen::MatrixXd log_post(mu_axis.size(), lv_axis.size());
  Eigen::VectorXd theta(2);
  for (Eigen::Index i = 0; i < mu_axis.size(); ++i) {
    for (Eigen::Index j = 0; j < lv_axis.size(); ++j) {
      double lp = loglik(model, ThetaVector<double>{mu_axis[i], lv_axis[j]}, data.view(),
                         data.size());
      if (spec.include_prior) {
        theta << mu_axis[i], lv_axis[j];
        lp += prior->log_density(theta);
      }
      log_post(i, j) = lp;
    }
  }
  return normalise_grid(mu_axis, lv_axis, log_post);
}

GridResult normalise_grid(const Eigen::VectorXd& mu_axis, const Eigen::VectorXd& log_var_axis,
                          const Eigen::MatrixXd& log_post) {
  if (log_post.rows() != mu_axis.size() || log_post.cols() != log_var_axis.size()) {
    throw std::invalid_argument("normalise_grid: shape mismatch");
  }
  double max_lp = -std::numeric_limits<double>::infinity();
  Eigen::Index map_i = 0;
  Eigen::Index map_j = 0;
  for (Eigen::Index j = 0; j < log_post.cols(); ++j) {
    for (Eigen::Index i = 0; i < log_post.rows(); ++i) {
      const double lp = log_post(i, j);
      if (std::isfinite(lp) && lp > max_lp) {
        max_lp = lp;
        map_i = i;
        map_j = j;
      }
    }
  }
  if (!std::isfinite(max_lp)) {
    throw std::runtime_error(
        "grid posterior underflowed in every cell; widen or densify the grid");
  }

  GridResult result;
  result.mu_axis = mu_axis;
  result.log_var_axis = log_var_axis;
  result.mass = log_post.unaryExpr([max_lp](double lp) {
    return std::isfinite(lp) ? std::exp(lp - max_lp) : 0.0;
  });
  result.mass /= result.mass.sum();
  result.map << mu_axis[map_i], log_var_axis[map_j];

  const Eigen::VectorXd mu_marginal = result.mass.rowwise().sum();
  const Eigen::VectorXd lv_marginal = result.mass.colwise().sum().transpose();
  result.mean << mu_marginal.dot(mu_axis), lv_marginal.dot(log_var_axis);
  const Eigen::ArrayXd mu_dev = mu_axis.array() - result.mean[0];
  const Eigen::ArrayXd lv_dev = log_var_axis.array() - result.mean[1];
  result.variance << mu_marginal.dot((mu_dev * mu_dev).matrix()),
      lv_marginal.dot((lv_dev * lv_dev).matrix());
  result.covariance = mu_dev.matrix().dot(result.mass * lv_dev.matrix());
  const double denom = std::sqrt(result.variance[0] * result.variance[1]);
  result.rho = denom > 0.0 ? result.covariance / denom : 0.0;
  return result;
}

MomentSummary moments(const GridResult& grid) {
  return MomentSummary{grid.mean, grid.variance, grid.rho};
}

MomentSummary moments(const PosteriorSummary& posterior) {
  return MomentSummary{posterior.mean, posterior.covariance.diagonal(), posterior.rho};
}

ComparisonReport compare(const MomentSummary& reference, const MomentSummary& candidate) {
  if (reference.mean.size() != candidate.mean.size() ||
      reference.variance.size() != candidate.variance.size() ||
      reference.mean.size() != reference.variance.size()) {
    throw std::invalid_argument("compare: parameter counts differ (" +
                                std::to_string(reference.mean.size()) + " vs " +
                                std::to_string(candidate.mean.size()) + ")");
  }
  ComparisonReport report;
  report.mean_abs_diff = (reference.mean - candidate.mean).cwiseAbs();
  report.variance_ratio_error =
      (candidate.variance.array() / reference.variance.array() - 1.0).abs().matrix();
  report.rho_reference = reference.rho;
  report.rho_candidate = candidate.rho;
  report.rho_abs_diff = std::abs(reference.rho - candidate.rho);
  const auto sign = [](double x) { return (x > 0.0) - (x < 0.0); };
  report.rho_sign_agrees = sign(reference.rho) == sign(candidate.rho);
  return report;
}

ComparisonReport compare(const GridResult& grid, const FitResult& fit) {
  return compare(moments(grid), moments(fit.posterior));
}

}  // namespace svb
