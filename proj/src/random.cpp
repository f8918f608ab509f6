#include "svb/random.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace svb {

double Rng::uniform() {
  constexpr double kScale = 0x1.0p-53;
  return (static_cast<double>(engine_() >> 11) + 0.5) * kScale;
}

double Rng::standard_normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::size_t Rng::below(std::size_t n) {
  if (n == 0) {
    throw std::invalid_argument("below(0)");
  }
  // Rejection keeps the draw unbiased.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return static_cast<std::size_t>(x % bound);
}

Eigen::VectorXd sample_std_normal(std::size_t dim, Rng& rng) {
  if (dim == 0) {
    throw std::invalid_argument("sample_std_normal: dim must be >= 1");
  }
  Eigen::VectorXd eps(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps[i] = rng.standard_normal();
  return eps;
}

}  // namespace svb
