#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "covnorm/error.hpp"

namespace covnorm {

using Vector = std::vector<double>;

// Dense real matrix, row-major.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);          // zero-filled
  Matrix(std::size_t rows, std::size_t cols, Vector data);  // rejects NaN/Inf

  static Matrix identity(std::size_t n);
  static Matrix diagonal(const Vector& entries);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  const Vector& values() const { return data_; }

  Vector row(std::size_t i) const;
  Vector col(std::size_t j) const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vector data_;
};

bool all_finite(const Matrix& m);
bool all_finite(const Vector& v);
void require_finite(const Matrix& m, const std::string& context);
void require_finite(const Vector& v, const std::string& context);

Matrix transpose(const Matrix& m);
double frobenius_norm(const Matrix& m);
double max_abs(const Matrix& m);
double trace(const Matrix& m);

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(const Matrix& a, double s);
Matrix operator*(double s, const Matrix& a);
Matrix operator*(const Matrix& a, const Matrix& b);  // routed through kernels

// Vector helpers.
Vector add(const Vector& a, const Vector& b);
Vector sub(const Vector& a, const Vector& b);
Vector scaled(const Vector& a, double s);
double dot(const Vector& a, const Vector& b);
double norm(const Vector& v);
Matrix outer(const Vector& a, const Vector& b);
Vector matvec(const Matrix& m, const Vector& v);

// Rows of `samples` minus `mean`.
Matrix center_rows(const Matrix& samples, const Vector& mean);

}  // namespace covnorm
