#pragma once

#include "covnorm/matrix.hpp"

// Data-parallel kernels behind the heavy loops (matrix products, scatter
// accumulation, sample reductions). Every output element is produced by
// exactly one thread with a fixed summation order, so the parallel results
// are bit-identical for any thread count. A serial reference implementation
// is kept under kernels::serial for testing and benchmarking.

namespace covnorm::kernels {

Matrix multiply(const Matrix& a, const Matrix& b);     // A·B
Matrix multiply_ta(const Matrix& a, const Matrix& b);  // Aᵀ·B
Matrix multiply_tb(const Matrix& a, const Matrix& b);  // A·Bᵀ

// Sum of centered outer products over rows: Σ_r (x_r − μ)(x_r − μ)ᵀ.
Matrix centered_scatter(const Matrix& batch, const Vector& mean);

// Σ_ij (a_ij − b_ij)², accumulated over fixed-size row blocks so the
// result does not depend on the thread count.
double squared_difference_sum(const Matrix& a, const Matrix& b);

namespace serial {

Matrix multiply(const Matrix& a, const Matrix& b);
Matrix multiply_ta(const Matrix& a, const Matrix& b);
Matrix multiply_tb(const Matrix& a, const Matrix& b);
Matrix centered_scatter(const Matrix& batch, const Vector& mean);
double squared_difference_sum(const Matrix& a, const Matrix& b);

}  // namespace serial

}  // namespace covnorm::kernels
