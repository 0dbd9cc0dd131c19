#pragma once

#include <cstdint>
#include <cstddef>

#include "covnorm/recolor.hpp"
#include "covnorm/stats.hpp"

namespace covnorm {

enum class Method { covnorm, svd, svd_fta, fta, pca_fta, bn };

const char* method_name(Method m);
Method parse_method(const std::string& name);  // accepts "svd-fta" / "pca-fta" spellings

struct BaselineSpec {
  Method method = Method::svd;
  std::size_t rank = 1;        // unused for bn
  std::uint64_t init_seed = 0;
};

// Minimum-Frobenius-norm rank-r approximation: left = U_r·√S_r,
// right = √S_r·V_rᵀ, 2·r·d parameters. Bias is zero; callers recenter.
CompressedLayer svd_truncate(const Matrix& a, std::size_t r);

// Initialization for the fitted factor approximation.
struct FactorInit {
  enum class Kind { random, from_svd, from_pca };
  Kind kind = Kind::random;
  std::uint64_t seed = 0;
  Matrix a;    // from_svd
  Pca px, py;  // from_pca

  static FactorInit random(std::uint64_t seed);
  static FactorInit from_svd(Matrix a);
  static FactorInit from_pca(Pca px, Pca py);
};

struct FitOptions {
  double step = 1e-2;          // decays ×0.1 whenever the loss plateaus
  std::size_t max_iters = 2000;
  double plateau_tol = 1e-9;   // relative improvement counted as progress
  double min_step = 1e-12;
};

struct FitResult {
  CompressedLayer layer;
  bool converged = false;      // terminated by step-size floor, not budget
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::size_t iterations = 0;
};

// Gradient descent on (1/n)·‖(Y−μ_y)ᵀ − L·R·(X−μ_x)ᵀ‖²_F over both factors
// L (d×r) and R (r×d), with backtracking so the objective never rises above
// its initialization.
FitResult fit_factors(const Matrix& samples_x, const Matrix& samples_y, const Vector& mu_x,
                      const Vector& mu_y, std::size_t r, const FactorInit& init,
                      const FitOptions& opts = {});

// Diagonal recoloring from marginal variances:
//   y_i = √v_{y,i}·(x_i − μ_{x,i})/√v_{x,i} + μ_{y,i}
// param_count = 2·d (the two diagonal vectors).
CompressedLayer bn_recolor(const RunningMoments& stats_x, const RunningMoments& stats_y);

}  // namespace covnorm
