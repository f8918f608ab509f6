#include "svb/posterior.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <numbers>
#include <string>

namespace svb {

PriorSpec::PriorSpec(Eigen::VectorXd mean, Eigen::MatrixXd covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance)) {
  if (covariance_.rows() != covariance_.cols() || covariance_.rows() != mean_.size()) {
    throw std::invalid_argument("prior covariance must be square and match the mean length");
  }
  if (mean_.size() == 0) {
    throw std::invalid_argument("prior must have at least one dimension");
  }
  if (!mean_.allFinite() || !covariance_.allFinite()) {
    throw std::invalid_argument("prior must be finite");
  }
  if (!covariance_.isApprox(covariance_.transpose(), 1e-12)) {
    throw std::invalid_argument("prior covariance must be symmetric");
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(covariance_);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("prior covariance must be positive definite");
  }
  precision_ = llt.solve(Eigen::MatrixXd::Identity(mean_.size(), mean_.size()));
  log_det_ = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

PriorSpec PriorSpec::isotropic(Eigen::Index dim, double mean, double variance) {
  if (!(variance > 0.0)) {
    throw std::invalid_argument("prior variance must be > 0");
  }
  return PriorSpec(Eigen::VectorXd::Constant(dim, mean),
                   variance * Eigen::MatrixXd::Identity(dim, dim));
}

double PriorSpec::log_density(const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd diff = theta - mean_;
  return -0.5 * (static_cast<double>(dim()) * std::log(2.0 * std::numbers::pi) + log_det_ +
                 diff.dot(precision_ * diff));
}

PosteriorParams<double> initial_posterior(const PriorSpec& prior, bool correlation) {
  PosteriorParams<double> params;
  params.m = prior.mean();
  params.v = Eigen::VectorXd::Zero(prior.dim());
  params.u = Eigen::VectorXd::Zero(correlation ? lower_count(prior.dim()) : 0);
  params.correlation_enabled = correlation;
  return params;
}

void validate(const PosteriorParams<double>& params) {
  const Eigen::Index p = params.dim();
  if (p == 0) {
    throw std::invalid_argument("posterior must have at least one dimension");
  }
  if (params.v.size() != p) {
    throw std::invalid_argument("posterior v length " + std::to_string(params.v.size()) +
                                " differs from m length " + std::to_string(p));
  }
  const Eigen::Index expected_u = params.correlation_enabled ? lower_count(p) : 0;
  if (params.u.size() != expected_u) {
    throw std::invalid_argument("posterior u length " + std::to_string(params.u.size()) +
                                ", expected " + std::to_string(expected_u));
  }
}

Eigen::VectorXd flatten(const PosteriorParams<double>& params) {
  validate(params);
  Eigen::VectorXd zeta(params.m.size() + params.v.size() + params.u.size());
  zeta << params.m, params.v, params.u;
  return zeta;
}

PosteriorParams<double> unflatten(const Eigen::VectorXd& zeta, Eigen::Index dim,
                                  bool correlation) {
  if (zeta.size() != hyper_count(dim, correlation)) {
    throw std::invalid_argument("hyper-parameter vector has length " +
                                std::to_string(zeta.size()) + ", expected " +
                                std::to_string(hyper_count(dim, correlation)));
  }
  PosteriorParams<double> params;
  params.m = zeta.head(dim);
  params.v = zeta.segment(dim, dim);
  params.u = zeta.tail(zeta.size() - 2 * dim);
  params.correlation_enabled = correlation;
  return params;
}

PosteriorParams<ad::Var> watch(ad::Tape& tape, const PosteriorParams<double>& params) {
  validate(params);
  const auto lift = [&tape](const Eigen::VectorXd& x) {
    VectorX<ad::Var> out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = ad::variable(tape, x[i]);
    return out;
  };
  PosteriorParams<ad::Var> watched;
  watched.m = lift(params.m);
  watched.v = lift(params.v);
  watched.u = lift(params.u);
  watched.correlation_enabled = params.correlation_enabled;
  return watched;
}

PosteriorSummary extract_posterior(const PosteriorParams<double>& params) {
  validate(params);
  const Eigen::MatrixXd s = build_cholesky(params);
  PosteriorSummary summary;
  summary.mean = params.m;
  summary.covariance = s * s.transpose();
  summary.correlation_enabled = params.correlation_enabled;
  if (params.correlation_enabled && params.dim() >= 2) {
    const Eigen::MatrixXd& c = summary.covariance;
    summary.rho = c(0, 1) / std::sqrt(c(0, 0) * c(1, 1));
  }
  return summary;
}

double mvn_log_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                   const Eigen::MatrixXd& cov) {
  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success || cov.rows() != mean.size() || x.size() != mean.size()) {
    throw std::invalid_argument("mvn_log_pdf: covariance must be SPD and match the mean");
  }
  const Eigen::VectorXd z = llt.matrixL().solve(x - mean);
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(mean.size()) * std::log(2.0 * std::numbers::pi) + log_det +
                 z.squaredNorm());
}

}  // namespace svb
