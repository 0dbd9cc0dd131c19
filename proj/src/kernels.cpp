#include "covnorm/kernels.hpp"

#include <cstddef>

namespace covnorm::kernels {

namespace {

// Below this many flops the parallel-for is not worth the fork/join.
constexpr std::size_t kParallelCutoff = 64 * 64 * 64;

// Row-block size for sample reductions; fixed so the combine order is
// independent of the thread count.
constexpr std::size_t kReduceBlock = 4096;

void check_multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("multiply: inner dimensions differ");
}

}  // namespace

Matrix multiply(const Matrix& a, const Matrix& b) {
  check_multiply(a, b);
  Matrix c(a.rows(), b.cols());
  const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(a.rows());
  const std::size_t kk = a.cols(), n = b.cols();
  const bool par = a.rows() * kk * n > kParallelCutoff;
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    double* ci = c.data() + static_cast<std::size_t>(i) * n;
    const double* ai = a.data() + static_cast<std::size_t>(i) * kk;
    for (std::size_t k = 0; k < kk; ++k) {
      const double aik = ai[k];
      const double* bk = b.data() + k * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

Matrix multiply_ta(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw DimensionError("multiply_ta: row counts differ");
  Matrix c(a.cols(), b.cols());
  const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(a.cols());
  const std::size_t p = a.rows(), n = b.cols();
  const bool par = a.cols() * p * n > kParallelCutoff;
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    double* ci = c.data() + static_cast<std::size_t>(i) * n;
    for (std::size_t r = 0; r < p; ++r) {
      const double ari = a(r, static_cast<std::size_t>(i));
      const double* br = b.data() + r * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += ari * br[j];
    }
  }
  return c;
}

Matrix multiply_tb(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw DimensionError("multiply_tb: column counts differ");
  Matrix c(a.rows(), b.rows());
  const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(a.rows());
  const std::size_t kk = a.cols(), n = b.rows();
  const bool par = a.rows() * kk * n > kParallelCutoff;
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    const double* ai = a.data() + static_cast<std::size_t>(i) * kk;
    double* ci = c.data() + static_cast<std::size_t>(i) * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b.data() + j * kk;
      double s = 0.0;
      for (std::size_t t = 0; t < kk; ++t) s += ai[t] * bj[t];
      ci[j] = s;
    }
  }
  return c;
}

Matrix centered_scatter(const Matrix& batch, const Vector& mean) {
  if (batch.cols() != mean.size()) throw DimensionError("centered_scatter: shape mismatch");
  const std::size_t n = batch.rows(), d = batch.cols();
  Matrix s(d, d);
  const std::ptrdiff_t dd = static_cast<std::ptrdiff_t>(d);
  const bool par = n * d * d > kParallelCutoff;
  // Upper triangle only; the mirrored entries are bitwise equal because
  // IEEE multiplication commutes.
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t i = 0; i < dd; ++i) {
    const std::size_t ui = static_cast<std::size_t>(i);
    for (std::size_t j = ui; j < d; ++j) {
      double acc = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        acc += (batch(r, ui) - mean[ui]) * (batch(r, j) - mean[j]);
      }
      s(ui, j) = acc;
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < i; ++j) s(i, j) = s(j, i);
  }
  return s;
}

double squared_difference_sum(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("squared_difference_sum: shape mismatch");
  }
  const std::size_t total = a.size();
  const std::size_t nblocks = (total + kReduceBlock - 1) / kReduceBlock;
  if (nblocks == 0) return 0.0;
  std::vector<double> partial(nblocks, 0.0);
  const std::ptrdiff_t nb = static_cast<std::ptrdiff_t>(nblocks);
#pragma omp parallel for schedule(static) if (nblocks > 1)
  for (std::ptrdiff_t blk = 0; blk < nb; ++blk) {
    const std::size_t lo = static_cast<std::size_t>(blk) * kReduceBlock;
    const std::size_t hi = std::min(lo + kReduceBlock, total);
    double acc = 0.0;
    for (std::size_t idx = lo; idx < hi; ++idx) {
      const double diff = a.data()[idx] - b.data()[idx];
      acc += diff * diff;
    }
    partial[static_cast<std::size_t>(blk)] = acc;
  }
  double sum = 0.0;
  for (double p : partial) sum += p;
  return sum;
}

}  // namespace covnorm::kernels
