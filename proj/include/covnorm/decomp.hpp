#pragma once

#include "covnorm/matrix.hpp"

namespace covnorm {

// Symmetric eigendecomposition. Eigenvalues descending; eigenvectors as
// columns, column i paired with eigenvalue i. Sign convention: each
// eigenvector's entry of largest magnitude is positive (ties broken by
// lowest index), so decompositions are reproducible across runs.
struct SymEig {
  Vector eigenvalues;
  Matrix eigenvectors;
};

// Thin SVD, A = U·diag(S)·Vᵀ with min(rows, cols) columns in U and V.
// Singular values descending and nonnegative; U columns carry the same
// sign convention as SymEig.
struct Svd {
  Matrix u;
  Vector singular_values;
  Matrix v;
};

// Cyclic Jacobi rotations; converges when off(A) < 1e-12·‖A‖_F, capped at
// 100 sweeps. Input asymmetry above 1e-8 (max norm) is rejected; below it
// the matrix is symmetrized as (A + Aᵀ)/2.
SymEig sym_eig(const Matrix& a);

// Via sym_eig of AᵀA or AAᵀ, whichever is smaller, with the other side's
// singular vectors recovered by projection and re-orthonormalized.
// Adequate here; a limitation for condition numbers beyond ~1e7.
Svd svd(const Matrix& a);

// M minimizing ‖T − M·Z‖²_F + ridge·‖M‖²_F, via the normal equations
// (Z·Zᵀ + ridge·I) and a symmetric-definite solve. z is k×n, t is m×n,
// result m×k. A singular normal matrix with ridge = 0 raises
// RankDeficiencyError telling the caller to set ridge > 0.
Matrix least_squares(const Matrix& z, const Matrix& t, double ridge);

// Pseudo-inverse of C = P·diag(√e) with orthonormal P columns and e > 0:
// returns diag(1/√e)·Pᵀ, i.e. diag(1/e_j)·Cᵀ with e_j the squared column
// norms. A zero column raises DegeneracyError.
Matrix pinv_scaled_orthogonal(const Matrix& c);

// Cholesky solve of S·X = B for symmetric positive definite S.
Matrix solve_spd(const Matrix& s, const Matrix& b);

// Clamp slightly negative eigenvalues of a nominally PSD spectrum to zero.
// Values below −1e-10·λ_max signal a corrupted matrix and raise
// DegeneracyError. The spectrum must be sorted descending.
void clamp_psd_spectrum(Vector& eigenvalues);

}  // namespace covnorm
