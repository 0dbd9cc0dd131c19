#include "covnorm/stats.hpp"

#include <cmath>

#include "covnorm/decomp.hpp"
#include "covnorm/kernels.hpp"

namespace covnorm {

Matrix RunningMoments::covariance() const {
  if (n == 0) throw InsufficientDataError("covariance: no samples");
  return scatter * (1.0 / static_cast<double>(n));
}

RunningMoments merge_moments(const RunningMoments& a, const RunningMoments& b) {
  if (a.dim() != b.dim()) throw DimensionError("merge_moments: dimension mismatch");
  if (a.n == 0) return b;
  if (b.n == 0) return a;
  RunningMoments out(a.dim());
  out.n = a.n + b.n;
  const double na = static_cast<double>(a.n);
  const double nb = static_cast<double>(b.n);
  const double nt = static_cast<double>(out.n);
  const Vector delta = sub(b.mean, a.mean);
  out.mean = add(a.mean, scaled(delta, nb / nt));
  out.scatter = a.scatter + b.scatter + outer(delta, delta) * (na * nb / nt);
  return out;
}

RunningMoments accumulate(const RunningMoments& state, const Matrix& batch) {
  if (batch.rows() == 0) throw DimensionError("accumulate: batch has no rows");
  if (batch.cols() != state.dim()) throw DimensionError("accumulate: dimension mismatch");
  require_finite(batch, "accumulate");
  const std::size_t nb = batch.rows(), d = batch.cols();
  RunningMoments local(d);
  local.n = nb;
  for (std::size_t r = 0; r < nb; ++r) {
    for (std::size_t j = 0; j < d; ++j) local.mean[j] += batch(r, j);
  }
  for (double& x : local.mean) x /= static_cast<double>(nb);
  local.scatter = kernels::centered_scatter(batch, local.mean);
  return merge_moments(state, local);
}

Pca pca(const RunningMoments& state) {
  if (state.n < 2) throw InsufficientDataError("pca: need at least 2 samples");
  SymEig eig = sym_eig(state.covariance());
  clamp_psd_spectrum(eig.eigenvalues);
  return Pca{state.mean, std::move(eig.eigenvalues), std::move(eig.eigenvectors), state.n};
}

Pca pca_from_moments(const Vector& mean, const Matrix& covariance, std::size_t n) {
  if (covariance.rows() != mean.size()) throw DimensionError("pca_from_moments: shape mismatch");
  SymEig eig = sym_eig(covariance);
  clamp_psd_spectrum(eig.eigenvalues);
  return Pca{mean, std::move(eig.eigenvalues), std::move(eig.eigenvectors), n};
}

namespace {

std::size_t positive_count(const Vector& eigenvalues) {
  std::size_t count = 0;
  for (double e : eigenvalues) {
    if (e > 0.0) ++count;
  }
  return count;
}

TruncatedPca take_leading(const Pca& p, std::size_t k, double threshold_used) {
  TruncatedPca out;
  out.mean = p.mean;
  out.k = k;
  out.threshold_used = threshold_used;
  out.eigenvalues.assign(p.eigenvalues.begin(), p.eigenvalues.begin() + static_cast<std::ptrdiff_t>(k));
  out.components = Matrix(p.dim(), k);
  for (std::size_t i = 0; i < p.dim(); ++i) {
    for (std::size_t j = 0; j < k; ++j) out.components(i, j) = p.components(i, j);
  }
  return out;
}

}  // namespace

TruncatedPca truncate(const Pca& p, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw DomainError("truncate: threshold must lie in (0, 1]");
  }
  double total = 0.0;
  for (double e : p.eigenvalues) total += e;
  if (!(total > 0.0)) {
    throw DegeneracyError("truncate: all eigenvalues are zero (degenerate distribution)");
  }
  const std::size_t positives = positive_count(p.eigenvalues);
  std::size_t k = positives;  // threshold = 1 keeps every positive component
  double cum = 0.0;
  for (std::size_t i = 0; i < positives; ++i) {
    cum += p.eigenvalues[i];
    if (cum / total > threshold) {
      k = i + 1;
      break;
    }
  }
  return take_leading(p, k, threshold);
}

TruncatedPca truncate_to_k(const Pca& p, std::size_t k) {
  if (k == 0) throw DomainError("truncate_to_k: k must be at least 1");
  if (k > p.dim()) throw DimensionError("truncate_to_k: k exceeds dimension");
  const std::size_t positives = positive_count(p.eigenvalues);
  if (positives == 0) {
    throw DegeneracyError("truncate_to_k: all eigenvalues are zero (degenerate distribution)");
  }
  if (k > positives) {
    throw DegeneracyError("truncate_to_k: only " + std::to_string(positives) +
                          " positive eigenvalues available");
  }
  double total = 0.0, cum = 0.0;
  for (double e : p.eigenvalues) total += e;
  for (std::size_t i = 0; i < k; ++i) cum += p.eigenvalues[i];
  return take_leading(p, k, cum / total);
}

Pca merge(const std::vector<Pca>& parts) {
  if (parts.empty()) throw DimensionError("merge: need at least one PCA");
  const std::size_t d = parts.front().dim();
  std::size_t total = 0;
  for (const Pca& p : parts) {
    if (p.dim() != d) throw DimensionError("merge: dimension mismatch");
    if (p.n == 0) throw InsufficientDataError("merge: part has zero sample count");
    total += p.n;
  }
  if (parts.size() == 1) return parts.front();
  Vector mu(d, 0.0);
  for (const Pca& p : parts) mu = add(mu, scaled(p.mean, static_cast<double>(p.n)));
  mu = scaled(mu, 1.0 / static_cast<double>(total));

  Matrix sigma(d, d);
  for (const Pca& p : parts) {
    const double w = static_cast<double>(p.n) / static_cast<double>(total);
    Matrix pe = p.components;  // columns scaled by eigenvalues
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t i = 0; i < d; ++i) pe(i, j) *= p.eigenvalues[j];
    }
    sigma = sigma + (kernels::multiply_tb(pe, p.components) + outer(p.mean, p.mean)) * w;
  }
  sigma = sigma - outer(mu, mu);

  SymEig eig = sym_eig(sigma);
  clamp_psd_spectrum(eig.eigenvalues);
  return Pca{std::move(mu), std::move(eig.eigenvalues), std::move(eig.eigenvectors), total};
}

void propagate(const Matrix& a, const Vector& mu_x, const Matrix& sigma_x, Vector& mu_y,
               Matrix& sigma_y) {
  if (a.cols() != mu_x.size() || sigma_x.rows() != mu_x.size() || sigma_x.cols() != mu_x.size()) {
    throw DimensionError("propagate: shape mismatch");
  }
  mu_y = matvec(a, mu_x);
  sigma_y = kernels::multiply_tb(kernels::multiply(a, sigma_x), a);
}

}  // namespace covnorm
