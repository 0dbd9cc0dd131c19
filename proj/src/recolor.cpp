#include "covnorm/recolor.hpp"

#include <cmath>
#include <utility>

#include "covnorm/decomp.hpp"
#include "covnorm/kernels.hpp"

namespace covnorm {

namespace {

constexpr double kEigFloorRel = 1e-12;  // relative to the largest retained eigenvalue

double eig_floor(const TruncatedPca& p) {
  double lambda_max = 0.0;
  for (double e : p.eigenvalues) lambda_max = std::max(lambda_max, e);
  return kEigFloorRel * lambda_max;
}

double auto_ridge(double trace_zzt, std::size_t kx) {
  return 1e-6 * trace_zzt / static_cast<double>(kx);
}

}  // namespace

Vector RecolorTransform::apply(const Vector& x) const {
  return add(apply_linear(sub(x, mu_x)), mu_y);
}

Vector RecolorTransform::apply_linear(const Vector& v) const {
  return matvec(c, matvec(m, matvec(w, v)));
}

Vector CompressedLayer::apply(const Vector& x) const {
  return add(matvec(left, matvec(right, x)), bias);
}

Matrix CompressedLayer::apply_rows(const Matrix& samples) const {
  if (samples.cols() != right.cols()) throw DimensionError("apply_rows: shape mismatch");
  const Matrix z = kernels::multiply_tb(samples, right);  // n×k
  Matrix out = kernels::multiply_tb(z, left);             // n×d
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += bias[j];
  }
  return out;
}

Matrix CompressedLayer::dense() const { return kernels::multiply(left, right); }

CompressedLayer make_layer(Matrix left, Matrix right, Vector bias, std::size_t kx,
                           std::size_t ky, bool diagonal) {
  if (left.cols() != right.rows()) throw DimensionError("make_layer: factor shapes do not chain");
  if (left.rows() != bias.size() || right.cols() != bias.size()) {
    throw DimensionError("make_layer: bias length must match the map dimension");
  }
  CompressedLayer out;
  out.kx = kx;
  out.ky = ky;
  out.diagonal = diagonal;
  out.param_count = diagonal ? 2 * bias.size() : left.size() + right.size();
  out.left = std::move(left);
  out.right = std::move(right);
  out.bias = std::move(bias);
  return out;
}

Matrix whitening(const TruncatedPca& p) {
  if (p.k == 0) throw DegeneracyError("whitening: no retained components");
  const double floor = eig_floor(p);
  Matrix w(p.k, p.dim());
  for (std::size_t i = 0; i < p.k; ++i) {
    const double e = p.eigenvalues[i];
    if (!(e > floor) || !(e > 0.0)) {
      throw DegeneracyError("whitening: eigenvalue " + std::to_string(i) +
                            " is below the invertibility floor");
    }
    const double inv = 1.0 / std::sqrt(e);
    for (std::size_t j = 0; j < p.dim(); ++j) w(i, j) = p.components(j, i) * inv;
  }
  return w;
}

Matrix coloring(const TruncatedPca& p) {
  if (p.k == 0) throw DegeneracyError("coloring: no retained components");
  const double floor = eig_floor(p);
  Matrix c(p.dim(), p.k);
  for (std::size_t j = 0; j < p.k; ++j) {
    const double e = p.eigenvalues[j];
    if (!(e > floor) || !(e > 0.0)) {
      throw DegeneracyError("coloring: eigenvalue " + std::to_string(j) +
                            " is below the invertibility floor");
    }
    const double scale = std::sqrt(e);
    for (std::size_t i = 0; i < p.dim(); ++i) c(i, j) = p.components(i, j) * scale;
  }
  return c;
}

Matrix fit_mini_adaptation(const Matrix& w, const Matrix& c, const Matrix& samples_x,
                           const Matrix& samples_y, const Vector& mu_x, const Vector& mu_y,
                           std::optional<double> ridge) {
  const std::size_t d = w.cols();
  if (c.rows() != d || samples_x.cols() != d || samples_y.cols() != d) {
    throw DimensionError("fit_mini_adaptation: dimension mismatch");
  }
  if (samples_x.rows() != samples_y.rows() || samples_x.rows() == 0) {
    throw DimensionError("fit_mini_adaptation: paired samples required");
  }
  const Matrix z = kernels::multiply_tb(w, center_rows(samples_x, mu_x));  // kx×n
  const Matrix pinv_c = pinv_scaled_orthogonal(c);
  const Matrix t = kernels::multiply_tb(pinv_c, center_rows(samples_y, mu_y));  // ky×n
  double lambda = ridge.value_or(-1.0);
  if (lambda < 0.0) {
    double tr = 0.0;
    for (double v : z.values()) tr += v * v;
    lambda = auto_ridge(tr, w.rows());
  }
  return least_squares(z, t, lambda);
}

Matrix fit_mini_adaptation_moments(const Matrix& w, const Matrix& c, const Matrix& a_true,
                                   const Matrix& sigma_x, std::optional<double> ridge) {
  const std::size_t d = w.cols();
  if (c.rows() != d || a_true.rows() != d || a_true.cols() != d || sigma_x.rows() != d ||
      sigma_x.cols() != d) {
    throw DimensionError("fit_mini_adaptation_moments: dimension mismatch");
  }
  const Matrix wsx = kernels::multiply(w, sigma_x);        // kx×d
  Matrix g = kernels::multiply_tb(wsx, w);                 // kx×kx
  const Matrix pinv_c = pinv_scaled_orthogonal(c);
  const Matrix h =
      kernels::multiply_tb(kernels::multiply(kernels::multiply(pinv_c, a_true), sigma_x), w);
  double lambda = ridge.value_or(-1.0);
  if (lambda < 0.0) lambda = auto_ridge(trace(g), w.rows());
  for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) += lambda;
  Matrix mt;
  try {
    mt = solve_spd(g, transpose(h));
  } catch (const RankDeficiencyError&) {
    throw RankDeficiencyError(
        "fit_mini_adaptation_moments: projected covariance is singular; set ridge > 0");
  }
  return transpose(mt);
}

Matrix refine_mini_adaptation(Matrix m, const Matrix& w, const Matrix& c,
                              const Matrix& samples_x, const Matrix& samples_y,
                              const Vector& mu_x, const Vector& mu_y, double ridge,
                              const RefineOptions& opts) {
  const Matrix z = kernels::multiply_tb(w, center_rows(samples_x, mu_x));
  const Matrix pinv_c = pinv_scaled_orthogonal(c);
  const Matrix t = kernels::multiply_tb(pinv_c, center_rows(samples_y, mu_y));
  const double inv_n = 1.0 / static_cast<double>(z.cols());

  auto objective = [&](const Matrix& mm) {
    double val = kernels::squared_difference_sum(kernels::multiply(mm, z), t);
    for (double v : mm.values()) val += ridge * v * v;
    return val * inv_n;
  };

  double loss = objective(m);
  for (std::size_t it = 0; it < opts.max_iters; ++it) {
    if (!std::isfinite(loss)) {
      throw ConvergenceError("refine_mini_adaptation: non-finite objective", it);
    }
    Matrix resid = kernels::multiply(m, z) - t;
    Matrix grad = kernels::multiply_tb(resid, z);
    for (std::size_t i = 0; i < grad.size(); ++i) {
      grad.data()[i] = (grad.data()[i] + ridge * m.data()[i]) * 2.0 * inv_n;
    }
    const Matrix candidate = m - grad * opts.step;
    const double next = objective(candidate);
    if (!(next < loss)) break;
    const double improvement = (loss - next) / std::max(loss, 1e-300);
    m = candidate;
    loss = next;
    if (improvement < opts.min_rel_improvement) break;
  }
  return m;
}

RecolorTransform assemble(Matrix w, Matrix m, Matrix c, Vector mu_x, Vector mu_y) {
  const std::size_t d = w.cols();
  if (m.cols() != w.rows()) throw DimensionError("assemble: M columns must match W rows");
  if (c.cols() != m.rows()) throw DimensionError("assemble: C columns must match M rows");
  if (c.rows() != d || mu_x.size() != d || mu_y.size() != d) {
    throw DimensionError("assemble: dimension mismatch");
  }
  return RecolorTransform{std::move(w), std::move(m), std::move(c), std::move(mu_x),
                          std::move(mu_y)};
}

CompressedLayer absorb(const RecolorTransform& t) {
  Vector bias = sub(t.mu_y, t.apply_linear(t.mu_x));
  if (t.kx() >= t.ky()) {
    return make_layer(t.c, kernels::multiply(t.m, t.w), std::move(bias), t.kx(), t.ky());
  }
  return make_layer(kernels::multiply(t.c, t.m), t.w, std::move(bias), t.kx(), t.ky());
}

CompressedLayer covnorm_compress(const Pca& pca_x, const Pca& pca_y, const Matrix& samples_x,
                                 const Matrix& samples_y, double threshold,
                                 std::optional<double> ridge) {
  const TruncatedPca tx = truncate(pca_x, threshold);
  const TruncatedPca ty = truncate(pca_y, threshold);
  Matrix w = whitening(tx);
  Matrix c = coloring(ty);
  Matrix m = fit_mini_adaptation(w, c, samples_x, samples_y, pca_x.mean, pca_y.mean, ridge);
  return absorb(assemble(std::move(w), std::move(m), std::move(c), pca_x.mean, pca_y.mean));
}

CompressedLayer covnorm_pipeline(const RunningMoments& stats_x, const RunningMoments& stats_y,
                                 const Matrix& samples_x, const Matrix& samples_y,
                                 double threshold, std::optional<double> ridge) {
  return covnorm_compress(pca(stats_x), pca(stats_y), samples_x, samples_y, threshold, ridge);
}

CompressedLayer covnorm_from_moments(const Vector& mu_x, const Matrix& sigma_x, const Matrix& a,
                                     double threshold, std::optional<double> ridge) {
  Vector mu_y;
  Matrix sigma_y;
  propagate(a, mu_x, sigma_x, mu_y, sigma_y);
  const Pca px = pca_from_moments(mu_x, sigma_x);
  const Pca py = pca_from_moments(mu_y, sigma_y);
  const TruncatedPca tx = truncate(px, threshold);
  const TruncatedPca ty = truncate(py, threshold);
  Matrix w = whitening(tx);
  Matrix c = coloring(ty);
  Matrix m = fit_mini_adaptation_moments(w, c, a, sigma_x, ridge);
  return absorb(assemble(std::move(w), std::move(m), std::move(c), mu_x, mu_y));
}

double eta_ratio(std::size_t kx, std::size_t ky) {
  if (kx == 0) throw DomainError("eta_ratio: kx must be at least 1");
  return static_cast<double>(ky) / static_cast<double>(kx);
}

}  // namespace covnorm
