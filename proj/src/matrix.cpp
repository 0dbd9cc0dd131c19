#include "covnorm/matrix.hpp"

#include <cmath>
#include <utility>

#include "covnorm/kernels.hpp"

namespace covnorm {

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, Vector data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("Matrix: data length does not match rows*cols");
  }
  require_finite(data_, "Matrix");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(const Vector& entries) {
  Matrix m(entries.size(), entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) m(i, i) = entries[i];
  return m;
}

Vector Matrix::row(std::size_t i) const {
  return Vector(data_.begin() + static_cast<std::ptrdiff_t>(i * cols_),
                data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols_));
}

Vector Matrix::col(std::size_t j) const {
  Vector out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
  return out;
}

bool all_finite(const Vector& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

bool all_finite(const Matrix& m) { return all_finite(m.values()); }

void require_finite(const Vector& v, const std::string& context) {
  if (!all_finite(v)) throw InputError(context + ": non-finite value");
}

void require_finite(const Matrix& m, const std::string& context) {
  require_finite(m.values(), context);
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  }
  return out;
}

double frobenius_norm(const Matrix& m) {
  double s = 0.0;
  for (double x : m.values()) s += x * x;
  return std::sqrt(s);
}

double max_abs(const Matrix& m) {
  double s = 0.0;
  for (double x : m.values()) s = std::max(s, std::abs(x));
  return s;
}

double trace(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("trace: matrix must be square");
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) s += m(i, i);
  return s;
}

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(what) + ": shape mismatch");
  }
}

}  // namespace

Matrix operator+(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "operator+");
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
  return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "operator-");
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] - b.data()[i];
  return out;
}

Matrix operator*(const Matrix& a, double s) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * s;
  return out;
}

Matrix operator*(double s, const Matrix& a) { return a * s; }

Matrix operator*(const Matrix& a, const Matrix& b) { return kernels::multiply(a, b); }

Vector add(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionError("add: length mismatch");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vector sub(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionError("sub: length mismatch");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vector scaled(const Vector& a, double s) {
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
  return out;
}

double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const Vector& v) { return std::sqrt(dot(v, v)); }

Matrix outer(const Vector& a, const Vector& b) {
  Matrix out(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) out(i, j) = a[i] * b[j];
  }
  return out;
}

Vector matvec(const Matrix& m, const Vector& v) {
  if (m.cols() != v.size()) throw DimensionError("matvec: shape mismatch");
  Vector out(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) s += m(i, j) * v[j];
    out[i] = s;
  }
  return out;
}

Matrix center_rows(const Matrix& samples, const Vector& mean) {
  if (samples.cols() != mean.size()) throw DimensionError("center_rows: shape mismatch");
  Matrix out(samples.rows(), samples.cols());
  for (std::size_t i = 0; i < samples.rows(); ++i) {
    for (std::size_t j = 0; j < samples.cols(); ++j) out(i, j) = samples(i, j) - mean[j];
  }
  return out;
}

}  // namespace covnorm
