#pragma once

#include <cstddef>
#include <vector>

#include "covnorm/matrix.hpp"

namespace covnorm {

// Streaming first- and second-order statistics of one activation stream.
// `scatter` is the sum of centered outer products; covariance() divides by
// the sample count (population convention — the pooling algebra of merge()
// is exact only under it).
struct RunningMoments {
  std::size_t n = 0;
  Vector mean;
  Matrix scatter;

  RunningMoments() = default;
  explicit RunningMoments(std::size_t dim) : mean(dim, 0.0), scatter(dim, dim) {}

  std::size_t dim() const { return mean.size(); }
  Matrix covariance() const;
};

// The PCA triplet: mean, descending eigenvalues, orthonormal components
// (column i paired with eigenvalue i), plus the sample count behind it.
struct Pca {
  Vector mean;
  Vector eigenvalues;
  Matrix components;
  std::size_t n = 0;

  std::size_t dim() const { return mean.size(); }
};

struct TruncatedPca {
  Vector mean;
  Vector eigenvalues;  // length k, all strictly positive
  Matrix components;   // d×k
  std::size_t k = 0;
  double threshold_used = 1.0;

  std::size_t dim() const { return mean.size(); }
};

// Fold a batch (rows = observations) into the moments. Stable pairwise
// combine, so the result is invariant to batch partitioning.
RunningMoments accumulate(const RunningMoments& state, const Matrix& batch);

// Combine two moment accumulators with the same pooling algebra.
RunningMoments merge_moments(const RunningMoments& a, const RunningMoments& b);

// Eigendecomposition of the covariance; requires n ≥ 2.
Pca pca(const RunningMoments& state);

// PCA from exact moments (population path); n is informational.
Pca pca_from_moments(const Vector& mean, const Matrix& covariance, std::size_t n = 0);

// Keep the smallest k with cumulative explained variance strictly above
// `threshold`; zero eigenvalues are never retained and k ≥ 1.
TruncatedPca truncate(const Pca& p, double threshold);

// Keep exactly k components (k ≤ number of positive eigenvalues).
TruncatedPca truncate_to_k(const Pca& p, std::size_t k);

// Pool PCAs of disjoint sample sets:
//   μ = (1/N) Σ N_i μ_i
//   Σ = Σ (N_i/N)(P_i E_i P_iᵀ + μ_i μ_iᵀ) − μ μᵀ
// then re-diagonalize. Equals the PCA of the pooled raw samples.
Pca merge(const std::vector<Pca>& parts);

// Moment propagation through a linear map y = A·x.
void propagate(const Matrix& a, const Vector& mu_x, const Matrix& sigma_x, Vector& mu_y,
               Matrix& sigma_y);

}  // namespace covnorm
