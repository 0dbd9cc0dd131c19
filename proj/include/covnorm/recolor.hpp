#pragma once

#include <cstddef>
#include <optional>

#include "covnorm/matrix.hpp"
#include "covnorm/stats.hpp"

namespace covnorm {

// The three-stage recoloring transform:
//   y ≈ C̃ · M · W̃ · (x − μ_x) + μ_y
// with truncated whitening W̃ (kx×d), mini-adaptation M (ky×kx) and
// truncated coloring C̃ (d×ky).
struct RecolorTransform {
  Matrix w;
  Matrix m;
  Matrix c;
  Vector mu_x;
  Vector mu_y;

  std::size_t dim() const { return mu_x.size(); }
  std::size_t kx() const { return w.rows(); }
  std::size_t ky() const { return c.cols(); }

  Vector apply(const Vector& x) const;
  // C·M·W·v without centering or bias.
  Vector apply_linear(const Vector& v) const;
};

// The deployable two-factor form: apply(x) = left·right·x + bias.
// param_count counts the factor elements only (2·d·min(kx, ky)); the bias
// is materialized but excluded, and diagonal (BN) layers count 2·d.
struct CompressedLayer {
  Matrix left;
  Matrix right;
  Vector bias;
  std::size_t kx = 0;
  std::size_t ky = 0;
  std::size_t param_count = 0;
  bool diagonal = false;

  std::size_t dim() const { return bias.size(); }
  Vector apply(const Vector& x) const;
  Matrix apply_rows(const Matrix& samples) const;
  Matrix dense() const;  // left·right, d×d
};

CompressedLayer make_layer(Matrix left, Matrix right, Vector bias, std::size_t kx,
                           std::size_t ky, bool diagonal = false);

// W̃ = diag(1/√e)·P̃ᵀ. Eigenvalues at or below 1e-12·λ_max raise
// DegeneracyError naming the offending index.
Matrix whitening(const TruncatedPca& p);

// C̃ = P̃·diag(√e).
Matrix coloring(const TruncatedPca& p);

// Fit M minimizing ‖(Y−μ_y) − C·M·W·(X−μ_x)‖²_F + ridge·‖M‖²_F by
// regressing pinv(C)·(Y−μ_y) on W·(X−μ_x); exact because C has orthogonal
// columns. ridge omitted → 1e-6·trace(Z·Zᵀ)/kx.
Matrix fit_mini_adaptation(const Matrix& w, const Matrix& c, const Matrix& samples_x,
                           const Matrix& samples_y, const Vector& mu_x, const Vector& mu_y,
                           std::optional<double> ridge = std::nullopt);

// Population-moment path for the same fit, given the generating map and
// input covariance (no sampling noise).
Matrix fit_mini_adaptation_moments(const Matrix& w, const Matrix& c, const Matrix& a_true,
                                   const Matrix& sigma_x,
                                   std::optional<double> ridge = std::nullopt);

struct RefineOptions {
  double step = 1e-2;
  std::size_t max_iters = 500;
  double min_rel_improvement = 1e-9;
};

// Optional gradient-descent refinement of M on the same objective,
// mirroring the factor-fitting machinery of the baselines.
Matrix refine_mini_adaptation(Matrix m, const Matrix& w, const Matrix& c,
                              const Matrix& samples_x, const Matrix& samples_y,
                              const Vector& mu_x, const Vector& mu_y, double ridge,
                              const RefineOptions& opts = {});

RecolorTransform assemble(Matrix w, Matrix m, Matrix c, Vector mu_x, Vector mu_y);

// Fold M into the larger adjacent factor; exact, and the bias becomes
// μ_y − C̃·M·W̃·μ_x.
CompressedLayer absorb(const RecolorTransform& t);

// truncate → whitening/coloring → fit M → assemble → absorb.
CompressedLayer covnorm_compress(const Pca& pca_x, const Pca& pca_y, const Matrix& samples_x,
                                 const Matrix& samples_y, double threshold,
                                 std::optional<double> ridge = std::nullopt);

CompressedLayer covnorm_pipeline(const RunningMoments& stats_x, const RunningMoments& stats_y,
                                 const Matrix& samples_x, const Matrix& samples_y,
                                 double threshold, std::optional<double> ridge = std::nullopt);

// Pipeline from exact moments of x and the generating map (y = A·x).
CompressedLayer covnorm_from_moments(const Vector& mu_x, const Matrix& sigma_x, const Matrix& a,
                                     double threshold,
                                     std::optional<double> ridge = std::nullopt);

// η = ky/kx, the output-to-input effective-dimension ratio.
double eta_ratio(std::size_t kx, std::size_t ky);

}  // namespace covnorm
