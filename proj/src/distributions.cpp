#include "svb/distributions.hpp"

#include <cmath>
#include <numbers>

namespace svb {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Gaussian:
      return "gaussian";
    case ModelKind::FoldedNormal:
      return "folded";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "gaussian") return ModelKind::Gaussian;
  if (name == "folded" || name == "folded-normal") return ModelKind::FoldedNormal;
  throw std::invalid_argument("unknown model '" + std::string(name) +
                              "' (expected gaussian or folded)");
}

NaturalParams to_natural(const ThetaVector<double>& theta) {
  return NaturalParams{theta.mu, std::exp(-theta.log_var)};
}

ThetaVector<double> to_theta(const NaturalParams& params) {
  if (!(params.beta > 0.0)) {
    throw std::invalid_argument("precision beta must be > 0");
  }
  return ThetaVector<double>{params.mu, -std::log(params.beta)};
}

double pdf(ModelKind kind, double y, const NaturalParams& params) {
  const double norm = std::sqrt(params.beta / (2.0 * std::numbers::pi));
  const auto gauss = [&](double centre) {
    return norm * std::exp(-0.5 * params.beta * (y - centre) * (y - centre));
  };
  switch (kind) {
    case ModelKind::Gaussian:
      return gauss(params.mu);
    case ModelKind::FoldedNormal:
      if (!(y > 0.0)) return 0.0;
      return gauss(params.mu) + gauss(-params.mu);
  }
  return 0.0;
}

double folded_normal_pdf_cosh(double y, const NaturalParams& params) {
  if (!(y > 0.0)) return 0.0;
  const double beta = params.beta;
  const double mu = params.mu;
  return std::sqrt(2.0 * beta / std::numbers::pi) * std::exp(-0.5 * beta * (y * y + mu * mu)) *
         std::cosh(beta * mu * y);
}

Dataset sample_data(ModelKind kind, const NaturalParams& params, std::size_t n,
                    std::uint64_t seed) {
  if (n == 0) {
    throw std::invalid_argument("sample_data: n must be >= 1");
  }
  if (!(params.beta > 0.0)) {
    throw std::invalid_argument("sample_data: precision must be > 0");
  }
  Rng rng(seed);
  const double sd = 1.0 / std::sqrt(params.beta);
  Dataset data;
  data.values.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double draw = params.mu + sd * rng.standard_normal();
    data.values.push_back(kind == ModelKind::FoldedNormal ? std::abs(draw) : draw);
  }
  return data;
}

}  // namespace svb
