#include "covnorm/decomp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "covnorm/kernels.hpp"

namespace covnorm {

namespace {

constexpr double kOffDiagTol = 1e-12;   // off(A) < tol·‖A‖_F
constexpr int kMaxSweeps = 100;
constexpr double kSymmetryTol = 1e-8;   // ‖A − Aᵀ‖_∞ gate
constexpr double kPsdClampTol = 1e-10;  // relative to λ_max
constexpr double kNullSingular = 1e-10; // σ below this × σ_max is rank-null
constexpr double kPivotTol = 1e-13;     // Cholesky pivot, relative to max diag

double off_diagonal_norm(const Matrix& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (i != j) s += m(i, j) * m(i, j);
    }
  }
  return std::sqrt(s);
}

// One two-sided rotation zeroing m(p,q); v accumulates the eigenvectors.
void jacobi_rotate(Matrix& m, Matrix& v, std::size_t p, std::size_t q) {
  const double apq = m(p, q);
  if (apq == 0.0) return;
  const double tau = (m(q, q) - m(p, p)) / (2.0 * apq);
  const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
  const double c = 1.0 / std::sqrt(1.0 + t * t);
  const double s = t * c;
  const std::size_t n = m.rows();
  for (std::size_t k = 0; k < n; ++k) {
    const double mkp = m(k, p), mkq = m(k, q);
    m(k, p) = c * mkp - s * mkq;
    m(k, q) = s * mkp + c * mkq;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double mpk = m(p, k), mqk = m(q, k);
    m(p, k) = c * mpk - s * mqk;
    m(q, k) = s * mpk + c * mqk;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double vkp = v(k, p), vkq = v(k, q);
    v(k, p) = c * vkp - s * vkq;
    v(k, q) = s * vkp + c * vkq;
  }
}

// Largest-magnitude entry positive, ties broken by lowest index.
void fix_column_sign(Matrix& m, std::size_t j, Matrix* coupled = nullptr,
                     std::size_t coupled_col = 0) {
  std::size_t arg = 0;
  double best = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double mag = std::abs(m(i, j));
    if (mag > best) {
      best = mag;
      arg = i;
    }
  }
  if (m(arg, j) < 0.0) {
    for (std::size_t i = 0; i < m.rows(); ++i) m(i, j) = -m(i, j);
    if (coupled != nullptr) {
      for (std::size_t i = 0; i < coupled->rows(); ++i) {
        (*coupled)(i, coupled_col) = -(*coupled)(i, coupled_col);
      }
    }
  }
}

// Core thin SVD for rows ≥ cols.
Svd svd_tall(const Matrix& a) {
  const std::size_t m = a.rows(), n = a.cols();
  const Matrix gram = kernels::multiply_ta(a, a);  // AᵀA, n×n
  SymEig eig = sym_eig(gram);
  Vector sv(n, 0.0);
  double smax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sv[i] = std::sqrt(std::max(eig.eigenvalues[i], 0.0));
    smax = std::max(smax, sv[i]);
  }
  Matrix u(m, n);
  const double floor = smax * kNullSingular;
  std::size_t effective = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (sv[i] > floor && sv[i] > 0.0) {
      effective = i + 1;
    } else {
      sv[i] = 0.0;
    }
  }
  for (std::size_t i = 0; i < effective; ++i) {
    const double inv = 1.0 / sv[i];
    for (std::size_t r = 0; r < m; ++r) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += a(r, k) * eig.eigenvectors(k, i);
      u(r, i) = acc * inv;
    }
  }
  // Squaring the condition number costs orthogonality for the small
  // singular directions; two Gram-Schmidt passes restore it.
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t i = 0; i < effective; ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        double proj = 0.0;
        for (std::size_t r = 0; r < m; ++r) proj += u(r, j) * u(r, i);
        for (std::size_t r = 0; r < m; ++r) u(r, i) -= proj * u(r, j);
      }
      double nrm = 0.0;
      for (std::size_t r = 0; r < m; ++r) nrm += u(r, i) * u(r, i);
      nrm = std::sqrt(nrm);
      if (nrm > 0.0) {
        for (std::size_t r = 0; r < m; ++r) u(r, i) /= nrm;
      }
    }
  }
  // Complete the null block with orthonormalized basis vectors.
  std::size_t next_basis = 0;
  for (std::size_t i = effective; i < n; ++i) {
    bool placed = false;
    while (!placed && next_basis < m) {
      Vector cand(m, 0.0);
      cand[next_basis++] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t j = 0; j < i; ++j) {
          double proj = 0.0;
          for (std::size_t r = 0; r < m; ++r) proj += u(r, j) * cand[r];
          for (std::size_t r = 0; r < m; ++r) cand[r] -= proj * u(r, j);
        }
      }
      const double nrm = norm(cand);
      if (nrm > 0.5) {
        for (std::size_t r = 0; r < m; ++r) u(r, i) = cand[r] / nrm;
        placed = true;
      }
    }
    if (!placed) throw Error("svd: failed to complete orthonormal basis");
  }
  Svd out{std::move(u), std::move(sv), eig.eigenvectors};
  for (std::size_t i = 0; i < n; ++i) fix_column_sign(out.u, i, &out.v, i);
  return out;
}

}  // namespace

SymEig sym_eig(const Matrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("sym_eig: matrix must be square");
  if (a.rows() == 0) throw DimensionError("sym_eig: empty matrix");
  require_finite(a, "sym_eig");
  const std::size_t n = a.rows();
  double asym = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) asym = std::max(asym, std::abs(a(i, j) - a(j, i)));
  }
  if (asym > kSymmetryTol) throw InputError("sym_eig: matrix is not symmetric");

  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) m(i, j) = 0.5 * (a(i, j) + a(j, i));
  }
  Matrix v = Matrix::identity(n);
  const double scale = frobenius_norm(m);
  if (scale > 0.0) {
    const double threshold = kOffDiagTol * scale;
    bool converged = false;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
      if (off_diagonal_norm(m) < threshold) {
        converged = true;
        break;
      }
      for (std::size_t p = 0; p + 1 < n; ++p) {
        for (std::size_t q = p + 1; q < n; ++q) jacobi_rotate(m, v, p, q);
      }
    }
    if (!converged && off_diagonal_norm(m) >= threshold) {
      throw Error("sym_eig: Jacobi sweeps did not converge");
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return m(x, x) > m(y, y); });
  SymEig out;
  out.eigenvalues.resize(n);
  out.eigenvectors = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    out.eigenvalues[j] = m(order[j], order[j]);
    for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, j) = v(i, order[j]);
    fix_column_sign(out.eigenvectors, j);
  }
  return out;
}

Svd svd(const Matrix& a) {
  if (a.rows() == 0 || a.cols() == 0) throw DimensionError("svd: empty matrix");
  require_finite(a, "svd");
  if (a.rows() >= a.cols()) return svd_tall(a);
  Svd flipped = svd_tall(transpose(a));
  Svd out{std::move(flipped.v), std::move(flipped.singular_values), std::move(flipped.u)};
  for (std::size_t i = 0; i < out.u.cols(); ++i) fix_column_sign(out.u, i, &out.v, i);
  return out;
}

Matrix least_squares(const Matrix& z, const Matrix& t, double ridge) {
  if (z.cols() != t.cols()) throw DimensionError("least_squares: Z and T must share columns");
  if (z.cols() == 0) throw DimensionError("least_squares: need at least one column");
  if (z.rows() == 0) throw DimensionError("least_squares: Z has no rows");
  if (ridge < 0.0) throw DomainError("least_squares: ridge must be nonnegative");
  require_finite(z, "least_squares");
  require_finite(t, "least_squares");
  Matrix g = kernels::multiply_tb(z, z);
  for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) += ridge;
  const Matrix h = kernels::multiply_tb(t, z);
  Matrix mt;
  try {
    mt = solve_spd(g, transpose(h));
  } catch (const RankDeficiencyError&) {
    if (ridge == 0.0) {
      throw RankDeficiencyError("least_squares: normal matrix is singular; set ridge > 0");
    }
    throw;
  }
  return transpose(mt);
}

Matrix pinv_scaled_orthogonal(const Matrix& c) {
  if (c.rows() == 0 || c.cols() == 0) throw DimensionError("pinv_scaled_orthogonal: empty matrix");
  require_finite(c, "pinv_scaled_orthogonal");
  const std::size_t d = c.rows(), k = c.cols();
  Vector e(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < d; ++i) e[j] += c(i, j) * c(i, j);
    if (e[j] <= 0.0) {
      throw DegeneracyError("pinv_scaled_orthogonal: column " + std::to_string(j) +
                            " has zero scale");
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      double ip = 0.0;
      for (std::size_t r = 0; r < d; ++r) ip += c(r, i) * c(r, j);
      if (std::abs(ip) > 1e-8 * std::sqrt(e[i] * e[j])) {
        throw InputError("pinv_scaled_orthogonal: columns are not orthogonal");
      }
    }
  }
  Matrix out(k, d);
  for (std::size_t j = 0; j < k; ++j) {
    const double inv = 1.0 / e[j];
    for (std::size_t i = 0; i < d; ++i) out(j, i) = c(i, j) * inv;
  }
  return out;
}

Matrix solve_spd(const Matrix& s, const Matrix& b) {
  if (s.rows() != s.cols()) throw DimensionError("solve_spd: matrix must be square");
  if (s.rows() != b.rows()) throw DimensionError("solve_spd: right-hand side shape mismatch");
  const std::size_t n = s.rows();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(s(i, i)));
  const double tol = kPivotTol * max_diag;
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = s(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > tol) || max_diag == 0.0) {
      throw RankDeficiencyError("solve_spd: matrix is not positive definite");
    }
    l(j, j) = std::sqrt(diag);
    for (std::size_t i = j + 1; i < n; ++i) {
      double acc = s(i, j);
      for (std::size_t k = 0; k < j; ++k) acc -= l(i, k) * l(j, k);
      l(i, j) = acc / l(j, j);
    }
  }
  // L·Lᵀ·X = B: forward then backward substitution, one column at a time.
  Matrix x(n, b.cols());
  for (std::size_t col = 0; col < b.cols(); ++col) {
    Vector y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double acc = b(i, col);
      for (std::size_t k = 0; k < i; ++k) acc -= l(i, k) * y[k];
      y[i] = acc / l(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
      double acc = y[ii];
      for (std::size_t k = ii + 1; k < n; ++k) acc -= l(k, ii) * x(k, col);
      x(ii, col) = acc / l(ii, ii);
    }
  }
  return x;
}

void clamp_psd_spectrum(Vector& eigenvalues) {
  if (eigenvalues.empty()) return;
  const double lambda_max = std::max(eigenvalues.front(), 0.0);
  const double floor = -kPsdClampTol * lambda_max;
  for (double& e : eigenvalues) {
    if (e < floor) {
      throw DegeneracyError("clamp_psd_spectrum: eigenvalue " + std::to_string(e) +
                            " below PSD tolerance (corrupted covariance)");
    }
    if (e < 0.0) e = 0.0;
  }
}

}  // namespace covnorm
