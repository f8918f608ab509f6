#include "svb/engine.hpp"

#include "svb/errors.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace svb {
namespace {

std::string describe(const Eigen::VectorXd& zeta) {
  std::ostringstream out;
  out.precision(17);
  out << '[';
  for (Eigen::Index i = 0; i < zeta.size(); ++i) out << (i ? ", " : "") << zeta[i];
  out << ']';
  return out.str();
}

[[noreturn]] void diverged(std::size_t step, const Eigen::VectorXd& zeta, const char* what) {
  throw DivergenceError("fit diverged at step " + std::to_string(step) + ": " + what +
                        "; zeta = " + describe(zeta));
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (mc_samples < 1) throw std::invalid_argument("mc_samples must be >= 1");
  if (final_fe_samples < 2) throw std::invalid_argument("final_fe_samples must be >= 2");
  (void)AdamState::fresh(0, adam);
  if (init) {
    svb::validate(*init);
    if (init->correlation_enabled != correlation_enabled) {
      throw std::invalid_argument("init correlation flag differs from config");
    }
  }
}

std::vector<std::span<const double>> make_batches(std::span<const double> data,
                                                  std::size_t batch_size) {
  if (batch_size < 1 || batch_size > data.size()) {
    throw std::invalid_argument("batch size " + std::to_string(batch_size) +
                                " outside [1, " + std::to_string(data.size()) + "]");
  }
  std::vector<std::span<const double>> batches;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    batches.push_back(data.subspan(start, std::min(batch_size, data.size() - start)));
  }
  return batches;
}

FreeEnergyEstimate final_free_energy(ModelKind model, const Dataset& data,
                                     const PosteriorParams<double>& params,
                                     const PriorSpec& prior, std::size_t samples, Rng& rng) {
  if (samples < 2) {
    throw std::invalid_argument("final free energy needs at least 2 samples");
  }
  const double kl = kl_to_prior(params, prior);
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const Eigen::VectorXd theta = reparam_sample(params, sample_std_normal(2, rng));
    const double f =
        loglik(model, ThetaVector<double>{theta[0], theta[1]}, data.view(), data.size()) - kl;
    // Welford
    const double delta = f - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (f - mean);
  }
  const double n = static_cast<double>(samples);
  const double sd = std::sqrt(m2 / (n - 1.0));
  return FreeEnergyEstimate{mean, sd / std::sqrt(n), samples};
}

FitResult fit(ModelKind model, const Dataset& data, const PriorSpec& prior,
              const TrainConfig& config) {
  config.validate();
  if (data.empty()) throw std::invalid_argument("fit: empty dataset");
  if (prior.dim() != 2) throw std::invalid_argument("fit: prior must be 2-dimensional");
  if (model == ModelKind::FoldedNormal) {
    for (double y : data.values) {
      if (!(y > 0.0)) {
        throw std::domain_error("folded-normal data must be > 0, got " + std::to_string(y));
      }
    }
  }
  const std::size_t n = data.size();
  const std::size_t batch_size = config.batch_size == 0 ? n : config.batch_size;
  if (batch_size > n) {
    throw std::invalid_argument("batch size " + std::to_string(batch_size) +
                                " exceeds data size " + std::to_string(n));
  }

  const PosteriorParams<double> start =
      config.init ? *config.init : initial_posterior(prior, config.correlation_enabled);
  if (start.dim() != 2) throw std::invalid_argument("fit: init must be 2-dimensional");

  Rng rng(config.seed);
  Eigen::VectorXd zeta = flatten(start);
  AdamState adam = AdamState::fresh(zeta.size(), config.adam);
  std::vector<double> order = data.values;

  FitResult result;
  result.model = model;
  result.config = config;
  result.trace.reserve(config.epochs * ((n + batch_size - 1) / batch_size));

  std::vector<Eigen::VectorXd> epsilons(config.mc_samples);
  std::size_t global_step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.shuffle) {
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng.below(i)]);
      }
    }
    const auto batches = make_batches(order, batch_size);
    for (std::size_t step = 0; step < batches.size(); ++step, ++global_step) {
      for (auto& eps : epsilons) eps = sample_std_normal(2, rng);

      ad::Tape tape;
      const auto params = watch(tape, unflatten(zeta, 2, config.correlation_enabled));
      Eigen::VectorXd gradient;
      TraceRecord record{epoch, step, 0.0, 0.0, 0.0};
      try {
        const auto terms = estimate_free_energy(model, batches[step], n, params, prior, epsilons);
        gradient = -ad::grad(terms.free_energy).values();
        record.free_energy = terms.free_energy.value();
        record.kl = terms.kl.value();
        record.mc_loglik = terms.mc_loglik.value();
      } catch (const NumericError& e) {
        diverged(global_step, zeta, e.what());
      }
      if (!gradient.allFinite()) diverged(global_step, zeta, "non-finite gradient");
      zeta = adam_step(adam, zeta, gradient);
      if (!zeta.allFinite()) diverged(global_step, zeta, "non-finite parameters");
      result.trace.push_back(record);
    }
  }

  result.steps = global_step;
  result.params = unflatten(zeta, 2, config.correlation_enabled);
  result.posterior = extract_posterior(result.params);
  try {
    result.final_free_energy =
        final_free_energy(model, data, result.params, prior, config.final_fe_samples, rng);
  } catch (const NumericError& e) {
    diverged(global_step, zeta, e.what());
  }
  return result;
}

}  // namespace svb
