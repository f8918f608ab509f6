#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <random>

namespace svb {

/// Seeded generator with a fixed, documented normal transform.
///
/// Bits come from std::mt19937_64, whose output sequence is fixed by the
/// C++ standard. Uniforms take the top 53 bits, offset by half an ulp so
/// they lie strictly inside (0, 1). Normals use the Box-Muller transform
/// and cache the second variate of each pair. std::normal_distribution is
/// not used because its algorithm differs between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double standard_normal();
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// `dim` independent N(0, 1) draws. Throws std::invalid_argument if dim == 0.
Eigen::VectorXd sample_std_normal(std::size_t dim, Rng& rng);

}  // namespace svb
