#pragma once

// Stochastic variational Bayes: F = (1/L) sum_l log p(y | theta*_l) - KL(q || p)
// with theta*_l = m + S eps_l, maximised by Adam on -F.

#include "svb/distributions.hpp"
#include "svb/optimizer.hpp"
#include "svb/posterior.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace svb {

struct TrainConfig {
  std::size_t epochs = 400;
  std::size_t batch_size = 0;  // 0 means full data
  std::size_t mc_samples = 1;
  AdamConfig adam;
  std::uint64_t seed = 0;
  bool correlation_enabled = true;
  std::size_t final_fe_samples = 1000;
  bool shuffle = false;
  std::optional<PosteriorParams<double>> init;

  /// Throws std::invalid_argument.
  void validate() const;
};

struct TraceRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;  // within the epoch
  double free_energy = 0.0;
  double kl = 0.0;
  double mc_loglik = 0.0;
};

using FreeEnergyTrace = std::vector<TraceRecord>;

struct FreeEnergyEstimate {
  double mean = 0.0;
  double se = 0.0;  // sample sd / sqrt(samples)
  std::size_t samples = 0;
};

struct FitResult {
  ModelKind model = ModelKind::Gaussian;
  PosteriorParams<double> params;
  PosteriorSummary posterior;
  FreeEnergyTrace trace;
  FreeEnergyEstimate final_free_energy;
  TrainConfig config;
  std::size_t steps = 0;
};

template <typename Scalar>
struct FreeEnergyTerms {
  Scalar free_energy;
  Scalar kl;
  Scalar mc_loglik;
};

/// Hybrid free energy on one batch with externally drawn noise.
template <typename Scalar>
FreeEnergyTerms<Scalar> estimate_free_energy(ModelKind model, std::span<const double> batch,
                                             std::size_t n_total,
                                             const PosteriorParams<Scalar>& params,
                                             const PriorSpec& prior,
                                             std::span<const Eigen::VectorXd> epsilons) {
  if (epsilons.empty()) {
    throw std::invalid_argument("estimate_free_energy: need at least one noise sample");
  }
  if (params.dim() != 2) {
    throw std::invalid_argument("estimate_free_energy: likelihood models have 2 parameters");
  }
  std::vector<Scalar> logliks;
  logliks.reserve(epsilons.size());
  for (const Eigen::VectorXd& eps : epsilons) {
    const VectorX<Scalar> theta = reparam_sample(params, eps);
    logliks.push_back(loglik(model, ThetaVector<Scalar>{theta[0], theta[1]}, batch, n_total));
  }
  using ad::sum_many;
  const Scalar mc = sum_many(std::span<const Scalar>(logliks)) /
                    Scalar(static_cast<double>(epsilons.size()));
  const Scalar kl = kl_to_prior(params, prior);
  return FreeEnergyTerms<Scalar>{mc - kl, kl, mc};
}

/// Contiguous batches in data order; the last one holds any remainder.
/// Throws std::invalid_argument unless 1 <= batch_size <= data.size().
[[nodiscard]] std::vector<std::span<const double>> make_batches(std::span<const double> data,
                                                                std::size_t batch_size);

/// Throws std::invalid_argument on bad config or data, std::domain_error on
/// data outside the model support and svb::DivergenceError when F or its
/// gradient stops being finite.
[[nodiscard]] FitResult fit(ModelKind model, const Dataset& data, const PriorSpec& prior,
                            const TrainConfig& config);

/// Mean and standard error of single-sample F over `samples` fresh draws on
/// the full data.
[[nodiscard]] FreeEnergyEstimate final_free_energy(ModelKind model, const Dataset& data,
                                                   const PosteriorParams<double>& params,
                                                   const PriorSpec& prior, std::size_t samples,
                                                   Rng& rng);

}  // namespace svb
