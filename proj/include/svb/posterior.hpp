#pragma once

// Multivariate-normal approximate posterior q = MVN(m, S S^T) with
// S(i,i) = exp(v_i) and S(i,j) = u_ij for i > j. The strict lower triangle
// is stored row by row: (1,0), (2,0), (2,1), ...

#include "svb/autodiff.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <stdexcept>

namespace svb {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// MVN prior over theta; the inverse covariance and log-determinant are
/// computed once here because the prior is never differentiated.
class PriorSpec {
 public:
  /// Throws std::invalid_argument unless C0 is square, matches m0, is
  /// symmetric and positive definite.
  PriorSpec(Eigen::VectorXd mean, Eigen::MatrixXd covariance);

  /// mean * 1 and variance * I in `dim` dimensions.
  static PriorSpec isotropic(Eigen::Index dim, double mean, double variance);

  [[nodiscard]] Eigen::Index dim() const noexcept { return mean_.size(); }
  [[nodiscard]] const Eigen::VectorXd& mean() const noexcept { return mean_; }
  [[nodiscard]] const Eigen::MatrixXd& covariance() const noexcept { return covariance_; }
  [[nodiscard]] const Eigen::MatrixXd& precision() const noexcept { return precision_; }
  [[nodiscard]] double log_det() const noexcept { return log_det_; }
  [[nodiscard]] double log_density(const Eigen::VectorXd& theta) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd precision_;
  double log_det_ = 0.0;
};

template <typename Scalar>
struct PosteriorParams {
  VectorX<Scalar> m;
  VectorX<Scalar> v;
  VectorX<Scalar> u;  // empty when correlation is disabled
  bool correlation_enabled = true;

  [[nodiscard]] Eigen::Index dim() const noexcept { return m.size(); }
};

[[nodiscard]] constexpr Eigen::Index lower_count(Eigen::Index dim) { return dim * (dim - 1) / 2; }

/// Number of optimised hyper-parameters: m and v, plus u with correlation.
[[nodiscard]] constexpr Eigen::Index hyper_count(Eigen::Index dim, bool correlation) {
  return 2 * dim + (correlation ? lower_count(dim) : 0);
}

/// m = prior mean, v = 0 (unit scale), u = 0.
[[nodiscard]] PosteriorParams<double> initial_posterior(const PriorSpec& prior, bool correlation);

/// Flat hyper-parameter vector in the order m, v, u.
[[nodiscard]] Eigen::VectorXd flatten(const PosteriorParams<double>& params);
[[nodiscard]] PosteriorParams<double> unflatten(const Eigen::VectorXd& zeta, Eigen::Index dim,
                                                bool correlation);

/// Registers every hyper-parameter as a tape leaf, in flatten() order.
[[nodiscard]] PosteriorParams<ad::Var> watch(ad::Tape& tape, const PosteriorParams<double>& params);

/// Throws std::invalid_argument on inconsistent vector lengths.
void validate(const PosteriorParams<double>& params);

template <typename Scalar>
MatrixX<Scalar> build_cholesky(const PosteriorParams<Scalar>& params) {
  using ad::exp;
  using std::exp;
  const Eigen::Index p = params.dim();
  if (params.v.size() != p) {
    throw std::invalid_argument("build_cholesky: v length differs from m");
  }
  if (params.correlation_enabled && params.u.size() != lower_count(p)) {
    throw std::invalid_argument("build_cholesky: u must hold P(P-1)/2 entries");
  }
  MatrixX<Scalar> s = MatrixX<Scalar>::Constant(p, p, Scalar(0.0));
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < i; ++j, ++k) {
      if (params.correlation_enabled) s(i, j) = params.u[k];
    }
    s(i, i) = exp(params.v[i]);
  }
  return s;
}

/// theta* = m + S eps. eps enters as a constant.
template <typename Scalar>
VectorX<Scalar> reparam_sample(const PosteriorParams<Scalar>& params, const Eigen::VectorXd& eps) {
  if (eps.size() != params.dim()) {
    throw std::invalid_argument("reparam_sample: epsilon has length " +
                                std::to_string(eps.size()) + ", expected " +
                                std::to_string(params.dim()));
  }
  const MatrixX<Scalar> s = build_cholesky(params);
  const VectorX<Scalar> e = eps.template cast<Scalar>();
  return params.m + s * e;
}

/// KL(q || p) = 1/2 [tr(C0^-1 C) - log(|C| / |C0|) - P + (m - m0)^T C0^-1 (m - m0)]
/// with log|C| = 2 sum(v).
template <typename Scalar>
Scalar kl_to_prior(const PosteriorParams<Scalar>& params, const PriorSpec& prior) {
  const Eigen::Index p = params.dim();
  if (prior.dim() != p) {
    throw std::invalid_argument("kl_to_prior: prior dimension differs from posterior");
  }
  const MatrixX<Scalar> s = build_cholesky(params);
  const MatrixX<Scalar> cov = s * s.transpose();
  const MatrixX<Scalar> precision = prior.precision().template cast<Scalar>();
  const Scalar trace = (precision * cov).trace();
  const VectorX<Scalar> diff = params.m - prior.mean().template cast<Scalar>();
  const Scalar mahalanobis = (diff.transpose() * precision * diff)(0, 0);
  const Scalar log_det_q = Scalar(2.0) * params.v.sum();
  return Scalar(0.5) * (trace - log_det_q + Scalar(prior.log_det() - static_cast<double>(p)) +
                        mahalanobis);
}

struct PosteriorSummary {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  double rho = 0.0;  // correlation of the first two parameters
  bool correlation_enabled = true;
};

[[nodiscard]] PosteriorSummary extract_posterior(const PosteriorParams<double>& params);

/// log MVN(x; mean, cov). Throws std::invalid_argument if cov is not SPD.
[[nodiscard]] double mvn_log_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                                 const Eigen::MatrixXd& cov);

}  // namespace svb
