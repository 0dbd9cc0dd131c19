#include "covnorm/baselines.hpp"

#include <cmath>
#include <utility>

#include "covnorm/decomp.hpp"
#include "covnorm/kernels.hpp"
#include "covnorm/rng.hpp"

namespace covnorm {

const char* method_name(Method m) {
  switch (m) {
    case Method::covnorm: return "covnorm";
    case Method::svd: return "svd";
    case Method::svd_fta: return "svd_fta";
    case Method::fta: return "fta";
    case Method::pca_fta: return "pca_fta";
    case Method::bn: return "bn";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "covnorm") return Method::covnorm;
  if (name == "svd") return Method::svd;
  if (name == "svd-fta" || name == "svd_fta") return Method::svd_fta;
  if (name == "fta") return Method::fta;
  if (name == "pca-fta" || name == "pca_fta") return Method::pca_fta;
  if (name == "bn") return Method::bn;
  throw DomainError("unknown method: " + name);
}

namespace {

// Shared by svd_truncate and the from_svd initialization so the two paths
// are bitwise identical.
void svd_factors(const Matrix& a, std::size_t r, Matrix& left, Matrix& right) {
  const std::size_t d = a.rows();
  const Svd s = svd(a);
  left = Matrix(d, r);
  right = Matrix(r, d);
  for (std::size_t j = 0; j < r; ++j) {
    const double root = std::sqrt(s.singular_values[j]);
    for (std::size_t i = 0; i < d; ++i) {
      left(i, j) = s.u(i, j) * root;
      right(j, i) = s.v(i, j) * root;
    }
  }
}

}  // namespace

CompressedLayer svd_truncate(const Matrix& a, std::size_t r) {
  if (a.rows() != a.cols()) throw DimensionError("svd_truncate: square matrix required");
  const std::size_t d = a.rows();
  if (r < 1 || r > d) throw DomainError("svd_truncate: rank out of range");
  Matrix left, right;
  svd_factors(a, r, left, right);
  return make_layer(std::move(left), std::move(right), Vector(d, 0.0), r, r);
}

FactorInit FactorInit::random(std::uint64_t seed) {
  FactorInit init;
  init.kind = Kind::random;
  init.seed = seed;
  return init;
}

FactorInit FactorInit::from_svd(Matrix a) {
  FactorInit init;
  init.kind = Kind::from_svd;
  init.a = std::move(a);
  return init;
}

FactorInit FactorInit::from_pca(Pca px, Pca py) {
  FactorInit init;
  init.kind = Kind::from_pca;
  init.px = std::move(px);
  init.py = std::move(py);
  return init;
}

FitResult fit_factors(const Matrix& samples_x, const Matrix& samples_y, const Vector& mu_x,
                      const Vector& mu_y, std::size_t r, const FactorInit& init,
                      const FitOptions& opts) {
  const std::size_t d = samples_x.cols();
  if (samples_y.cols() != d || mu_x.size() != d || mu_y.size() != d) {
    throw DimensionError("fit_factors: dimension mismatch");
  }
  if (samples_x.rows() != samples_y.rows() || samples_x.rows() == 0) {
    throw DimensionError("fit_factors: paired samples required");
  }
  if (r < 1 || r > d) throw DomainError("fit_factors: rank out of range");

  const Matrix xct = transpose(center_rows(samples_x, mu_x));  // d×n
  const Matrix yct = transpose(center_rows(samples_y, mu_y));  // d×n
  const double inv_n = 1.0 / static_cast<double>(xct.cols());

  Matrix l, rr;
  switch (init.kind) {
    case FactorInit::Kind::random: {
      Rng rng(init.seed);
      const double stddev = 1.0 / std::sqrt(static_cast<double>(d));
      l = rng.gaussian_matrix(d, r, stddev);
      rr = rng.gaussian_matrix(r, d, stddev);
      break;
    }
    case FactorInit::Kind::from_svd:
      if (init.a.rows() != d || init.a.cols() != d) {
        throw DimensionError("fit_factors: from_svd matrix shape mismatch");
      }
      svd_factors(init.a, r, l, rr);
      break;
    case FactorInit::Kind::from_pca: {
      l = coloring(truncate_to_k(init.py, r));
      rr = whitening(truncate_to_k(init.px, r));
      break;
    }
  }

  auto objective = [&](const Matrix& lm, const Matrix& rm) {
    return kernels::squared_difference_sum(kernels::multiply(lm, kernels::multiply(rm, xct)),
                                           yct) * inv_n;
  };

  FitResult result;
  double loss = objective(l, rr);
  if (!std::isfinite(loss)) {
    throw ConvergenceError("fit_factors: non-finite objective at initialization", 0);
  }
  result.initial_loss = loss;

  double lr = opts.step;
  std::size_t it = 0;
  bool converged = false;
  for (; it < opts.max_iters; ++it) {
    const Matrix rx = kernels::multiply(rr, xct);          // r×n
    Matrix resid = kernels::multiply(l, rx) - yct;         // d×n
    Matrix grad_l = kernels::multiply_tb(resid, rx) * (2.0 * inv_n);
    Matrix grad_r =
        kernels::multiply_tb(kernels::multiply_ta(l, resid), xct) * (2.0 * inv_n);
    const Matrix lc = l - grad_l * lr;
    const Matrix rc = rr - grad_r * lr;
    const double cand = objective(lc, rc);
    if (!std::isfinite(cand) || cand > loss) {
      // Backtrack: the step was too long, or diverging.
      lr *= 0.1;
      if (lr < opts.min_step) {
        converged = true;
        ++it;
        break;
      }
      continue;
    }
    const double improvement = (loss - cand) / std::max(loss, 1e-300);
    l = lc;
    rr = rc;
    loss = cand;
    if (improvement < opts.plateau_tol) {
      lr *= 0.1;
      if (lr < opts.min_step) {
        converged = true;
        ++it;
        break;
      }
    }
  }
  if (!std::isfinite(loss)) {
    throw ConvergenceError("fit_factors: non-finite objective", it);
  }

  Vector bias = sub(mu_y, matvec(l, matvec(rr, mu_x)));
  result.layer = make_layer(std::move(l), std::move(rr), std::move(bias), r, r);
  result.converged = converged;
  result.final_loss = loss;
  result.iterations = it;
  return result;
}

CompressedLayer bn_recolor(const RunningMoments& stats_x, const RunningMoments& stats_y) {
  if (stats_x.dim() != stats_y.dim()) throw DimensionError("bn_recolor: dimension mismatch");
  if (stats_x.n == 0 || stats_y.n == 0) {
    throw InsufficientDataError("bn_recolor: empty statistics");
  }
  const std::size_t d = stats_x.dim();
  Vector scale_y(d), inv_scale_x(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double vx = stats_x.scatter(i, i) / static_cast<double>(stats_x.n);
    const double vy = std::max(stats_y.scatter(i, i) / static_cast<double>(stats_y.n), 0.0);
    if (!(vx > 0.0)) {
      throw DegeneracyError("bn_recolor: coordinate " + std::to_string(i) +
                            " of x has zero variance");
    }
    scale_y[i] = std::sqrt(vy);
    inv_scale_x[i] = 1.0 / std::sqrt(vx);
  }
  Vector bias(d);
  for (std::size_t i = 0; i < d; ++i) {
    bias[i] = stats_y.mean[i] - scale_y[i] * inv_scale_x[i] * stats_x.mean[i];
  }
  return make_layer(Matrix::diagonal(scale_y), Matrix::diagonal(inv_scale_x), std::move(bias),
                    d, d, /*diagonal=*/true);
}

}  // namespace covnorm
