#pragma once

// Likelihood models. Log-likelihoods are templated on the scalar type so
// the same expression serves plain evaluation (double) and the tape (Var).
// Inference space is theta = (mu, log variance), i.e. log_var = -log(beta).

#include "svb/autodiff.hpp"
#include "svb/random.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace svb {

enum class ModelKind { Gaussian, FoldedNormal };

[[nodiscard]] std::string_view to_string(ModelKind kind);
/// Accepts "gaussian" and "folded" / "folded-normal". Throws std::invalid_argument.
[[nodiscard]] ModelKind parse_model_kind(std::string_view name);

/// Mean and precision (1 / variance).
struct NaturalParams {
  double mu = 0.0;
  double beta = 1.0;
};

template <typename Scalar>
struct ThetaVector {
  Scalar mu{};
  Scalar log_var{};  // -log(beta)
};

[[nodiscard]] NaturalParams to_natural(const ThetaVector<double>& theta);
/// Throws std::invalid_argument unless beta > 0.
[[nodiscard]] ThetaVector<double> to_theta(const NaturalParams& params);

struct Dataset {
  std::vector<double> values;

  [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
  [[nodiscard]] bool empty() const noexcept { return values.empty(); }
  [[nodiscard]] std::span<const double> view() const noexcept { return values; }
};

namespace detail {

inline void check_batch(std::span<const double> batch, std::size_t n_total) {
  if (batch.empty()) {
    throw std::invalid_argument("log-likelihood: empty batch");
  }
  if (n_total < batch.size()) {
    throw std::invalid_argument("log-likelihood: n_total " + std::to_string(n_total) +
                                " smaller than batch size " + std::to_string(batch.size()));
  }
}

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

}  // namespace detail

/// (N/2) log(beta / 2 pi) - (N/M) (beta/2) sum_m (y_m - mu)^2 with M the
/// batch size. The normaliser always uses the full N.
template <typename Scalar>
Scalar gaussian_loglik(const ThetaVector<Scalar>& theta, std::span<const double> batch,
                       std::size_t n_total) {
  using ad::exp;
  using ad::square;
  using ad::sum_many;
  using std::exp;
  detail::check_batch(batch, n_total);
  const double n = static_cast<double>(n_total);
  const double scale = n / static_cast<double>(batch.size());

  std::vector<Scalar> residuals;
  residuals.reserve(batch.size());
  for (double y : batch) residuals.push_back(square(Scalar(y) - theta.mu));
  const Scalar sq = sum_many(std::span<const Scalar>(residuals));

  const Scalar beta = exp(-theta.log_var);
  const Scalar normaliser = Scalar(0.5 * n) * (-theta.log_var - Scalar(detail::kLog2Pi));
  return normaliser - Scalar(0.5 * scale) * beta * sq;
}

/// Folded-normal log-likelihood from the two-term density, with the per-point
/// log of the exponential pair evaluated as a log-sum-exp. The data sum is
/// scaled by N/M exactly like the Gaussian mini-batch form. Throws
/// std::domain_error for any y <= 0.
template <typename Scalar>
Scalar folded_normal_loglik(const ThetaVector<Scalar>& theta, std::span<const double> batch,
                            std::size_t n_total) {
  using ad::exp;
  using ad::log;
  using ad::square;
  using ad::sum_many;
  using std::exp;
  using std::log;
  detail::check_batch(batch, n_total);
  for (double y : batch) {
    if (!(y > 0.0)) {
      throw std::domain_error("folded-normal data must be > 0, got " + std::to_string(y));
    }
  }
  const double n = static_cast<double>(n_total);
  const double scale = n / static_cast<double>(batch.size());

  const Scalar half_beta = Scalar(0.5) * exp(-theta.log_var);
  std::vector<Scalar> terms;
  terms.reserve(batch.size());
  for (double y : batch) {
    const Scalar a = -half_beta * square(Scalar(y) - theta.mu);
    const Scalar b = -half_beta * square(Scalar(y) + theta.mu);
    const bool a_high = ad::value_of(a) >= ad::value_of(b);
    const Scalar& hi = a_high ? a : b;
    const Scalar& lo = a_high ? b : a;
    terms.push_back(hi + log(Scalar(1.0) + exp(lo - hi)));
  }
  const Scalar data_term = sum_many(std::span<const Scalar>(terms));
  const Scalar normaliser = Scalar(0.5 * n) * (-theta.log_var - Scalar(detail::kLog2Pi));
  return normaliser + Scalar(scale) * data_term;
}

template <typename Scalar>
Scalar loglik(ModelKind kind, const ThetaVector<Scalar>& theta, std::span<const double> batch,
              std::size_t n_total) {
  switch (kind) {
    case ModelKind::Gaussian:
      return gaussian_loglik(theta, batch, n_total);
    case ModelKind::FoldedNormal:
      return folded_normal_loglik(theta, batch, n_total);
  }
  throw std::invalid_argument("unknown model kind");
}

/// Density at y; zero outside the folded-normal support (y <= 0).
[[nodiscard]] double pdf(ModelKind kind, double y, const NaturalParams& params);

/// sqrt(2 beta / pi) exp(-beta (y^2 + mu^2) / 2) cosh(beta mu y) for y > 0.
/// Equal to the two-term folded density; kept as a cross-check.
[[nodiscard]] double folded_normal_pdf_cosh(double y, const NaturalParams& params);

/// n i.i.d. draws. Folded-normal draws are |N(mu, 1/beta)|.
[[nodiscard]] Dataset sample_data(ModelKind kind, const NaturalParams& params, std::size_t n,
                                  std::uint64_t seed);

}  // namespace svb
