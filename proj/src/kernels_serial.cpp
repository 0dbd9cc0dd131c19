// Serial reference implementations of the parallel kernels. Kept for the
// bitwise-equivalence tests and the benchmark target.

#include "covnorm/kernels.hpp"

namespace covnorm::kernels::serial {

Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("multiply: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

Matrix multiply_ta(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw DimensionError("multiply_ta: row counts differ");
  Matrix c(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i) {
    for (std::size_t r = 0; r < a.rows(); ++r) {
      const double ari = a(r, i);
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += ari * b(r, j);
    }
  }
  return c;
}

Matrix multiply_tb(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw DimensionError("multiply_tb: column counts differ");
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < a.cols(); ++t) s += a(i, t) * b(j, t);
      c(i, j) = s;
    }
  }
  return c;
}

Matrix centered_scatter(const Matrix& batch, const Vector& mean) {
  if (batch.cols() != mean.size()) throw DimensionError("centered_scatter: shape mismatch");
  const std::size_t n = batch.rows(), d = batch.cols();
  Matrix s(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double acc = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        acc += (batch(r, i) - mean[i]) * (batch(r, j) - mean[j]);
      }
      s(i, j) = acc;
    }
  }
  return s;
}

double squared_difference_sum(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("squared_difference_sum: shape mismatch");
  }
  double sum = 0.0;
  for (std::size_t idx = 0; idx < a.size(); ++idx) {
    const double diff = a.data()[idx] - b.data()[idx];
    sum += diff * diff;
  }
  return sum;
}

}  // namespace covnorm::kernels::serial
