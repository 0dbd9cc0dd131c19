#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "covnorm/baselines.hpp"
#include "covnorm/recolor.hpp"
#include "covnorm/stats.hpp"

namespace covnorm {

// One row of the comparison report. All metrics carry the regression
// meaning (reconstruction error), never a task accuracy.
struct EvalReport {
  std::string method;
  std::size_t kx = 0;
  std::size_t ky = 0;
  std::optional<std::size_t> rank;
  std::size_t param_count = 0;
  std::optional<double> frobenius_error;  // ‖A − L·R‖_F/‖A‖_F vs a reference map
  std::optional<double> data_mse;         // mean squared error on held-out samples
  std::optional<double> analytic_mse;     // population MSE from exact moments
  double eta = 0.0;
  std::optional<std::uint64_t> seed;
  std::optional<double> threshold;
};

// (1/n)·Σ ‖y_i − apply(x_i)‖².
double data_mse(const CompressedLayer& layer, const Matrix& samples_x, const Matrix& samples_y);

// Population MSE of the layer against the true map y = A·x with Gaussian
// input of moments (μ_x, Σ_x):
//   tr((A−LR)·Σ_x·(A−LR)ᵀ) + ‖(A−LR)·μ_x − bias‖².
double analytic_mse(const CompressedLayer& layer, const Matrix& a_true, const Matrix& sigma_x,
                    const Vector& mu_x);

// Cumulative energy fractions: eigenvalue mass of Σ_x and Σ_y, and squared
// singular value mass of A, each normalized to end at 1.
struct EnergyCurves {
  std::vector<double> pca_x;
  std::vector<double> pca_y;
  std::vector<double> singular;
};

EnergyCurves energy_curves(const Pca& pca_x, const Pca& pca_y, const Matrix& a);
void write_energy_curves_csv(std::ostream& out, const EnergyCurves& curves);

// Everything a comparison run needs. `reference_a` and `sigma_x` enable the
// frobenius and analytic metrics; without them only data_mse is reported.
struct DataBundle {
  Matrix samples_x;
  Matrix samples_y;
  RunningMoments stats_x;
  RunningMoments stats_y;
  std::optional<Matrix> reference_a;
  std::optional<Matrix> sigma_x;
  Vector mu_x;  // population input mean; defaults to the sample mean
};

DataBundle make_bundle(Matrix samples_x, Matrix samples_y,
                       std::optional<Matrix> reference_a = std::nullopt,
                       std::optional<Matrix> sigma_x = std::nullopt,
                       std::optional<Vector> mu_x = std::nullopt);

// One method/config to evaluate: either a covnorm threshold configuration
// or a baseline specification.
struct CovnormConfig {
  double threshold = 0.99;
  std::optional<double> ridge;
};

using MethodConfig = std::variant<CovnormConfig, BaselineSpec>;

// Deterministic: reports come back in input order.
std::vector<EvalReport> compare(const std::vector<MethodConfig>& configs,
                                const DataBundle& bundle);

// CSV schema: method,kx,ky,rank,param_count,frobenius_error,data_mse,
// analytic_mse,eta,seed,threshold. Missing metrics are empty cells.
std::string csv_header();
std::string csv_row(const EvalReport& report);
void write_reports_csv(std::ostream& out, const std::vector<EvalReport>& reports);

// The full map the geometric baselines approximate: the reference map when
// provided, otherwise a least-squares fit on the centered samples.
Matrix full_map(const DataBundle& bundle);

}  // namespace covnorm
