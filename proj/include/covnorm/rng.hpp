#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "covnorm/matrix.hpp"

namespace covnorm {

// Deterministic random source. mt19937_64 output is pinned by the standard
// and the Box-Muller transform below is spelled out explicitly, so streams
// are reproducible across platforms and standard libraries (the std::
// distributions are not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so the log is finite.
    const double u1 = (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  Vector gaussian_vector(std::size_t n, double stddev = 1.0) {
    Vector out(n);
    for (double& x : out) x = gaussian() * stddev;
    return out;
  }

  Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double stddev = 1.0) {
    Matrix out(rows, cols);
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = gaussian() * stddev;
    return out;
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace covnorm
