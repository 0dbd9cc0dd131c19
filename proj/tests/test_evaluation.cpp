#include <doctest.h>

#include <cmath>
#include <sstream>

#include "covnorm/evaluation.hpp"
#include "covnorm/kernels.hpp"
#include "covnorm/rng.hpp"
#include "oracle_helpers.hpp"

using namespace covnorm;

namespace {

using oracle::ContrastInstance;
using oracle::contrast_instance;

CompressedLayer zero_layer(std::size_t d) {
  return make_layer(Matrix(d, 1), Matrix(1, d), Vector(d, 0.0), 1, 1);
}

}  // namespace

TEST_CASE("data_mse of an exact layer is zero") {
  Rng rng(800);
  const std::size_t d = 3;
  const Matrix a = oracle::random_map(d, rng);
  const Matrix samples_x = rng.gaussian_matrix(200, d);
  const Matrix samples_y = kernels::multiply_tb(samples_x, a);
  const CompressedLayer exact = svd_truncate(a, d);
  CHECK(data_mse(exact, samples_x, samples_y) < 1e-20);
}

TEST_CASE("data_mse of the zero layer on white data is about d") {
  Rng rng(801);
  const std::size_t d = 6;
  const Matrix samples_y = rng.gaussian_matrix(50000, d);
  const Matrix samples_x = rng.gaussian_matrix(50000, d);
  const double mse = data_mse(zero_layer(d), samples_x, samples_y);
  CHECK(mse == doctest::Approx(static_cast<double>(d)).epsilon(0.05));
}

TEST_CASE("data_mse is identical for both absorption sides") {
  Rng rng(802);
  const std::size_t d = 5, k = 3;
  const Matrix w = rng.gaussian_matrix(k, d);
  const Matrix m = rng.gaussian_matrix(k, k);
  const Matrix c = rng.gaussian_matrix(d, k);
  const Vector mu_x = rng.gaussian_vector(d), mu_y = rng.gaussian_vector(d);
  const RecolorTransform t = assemble(w, m, c, mu_x, mu_y);
  const CompressedLayer right_absorbed = absorb(t);
  const CompressedLayer left_absorbed =
      make_layer(kernels::multiply(t.c, t.m), t.w, right_absorbed.bias, k, k);
  const Matrix samples_x = rng.gaussian_matrix(300, d);
  const Matrix samples_y = rng.gaussian_matrix(300, d);
  const double a = data_mse(right_absorbed, samples_x, samples_y);
  const double b = data_mse(left_absorbed, samples_x, samples_y);
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("data_mse validates shapes") {
  CHECK_THROWS_AS(data_mse(zero_layer(3), Matrix(0, 3), Matrix(0, 3)), DimensionError);
  CHECK_THROWS_AS(data_mse(zero_layer(3), Matrix(5, 3), Matrix(4, 3)), DimensionError);
}

TEST_CASE("analytic_mse trivial reductions") {
  Rng rng(803);
  const std::size_t d = 4;
  const Matrix a = oracle::random_map(d, rng);
  CompressedLayer exact = svd_truncate(a, d);
  CHECK(analytic_mse(exact, a, oracle::random_covariance(d, rng), rng.gaussian_vector(d)) <
        1e-18);

  const CompressedLayer rough = svd_truncate(a, 2);
  const Matrix diff = a - rough.dense();
  const double expected = frobenius_norm(diff) * frobenius_norm(diff);
  CHECK(analytic_mse(rough, a, Matrix::identity(d), Vector(d, 0.0)) ==
        doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("analytic_mse rejects a non-PSD covariance") {
  const Matrix a = Matrix::identity(2);
  const CompressedLayer layer = svd_truncate(a, 2);
  CHECK_THROWS_AS(analytic_mse(layer, a, Matrix::diagonal({1.0, -1.0}), Vector(2, 0.0)),
                  DegeneracyError);
}

TEST_CASE("analytic_mse: covnorm beats svd at rank 1 on the contrast instance") {
  const ContrastInstance inst = contrast_instance();
  const Pca px = pca_from_moments(inst.mu_x, inst.sigma_x);
  Vector mu_y;
  Matrix sigma_y;
  propagate(inst.a, inst.mu_x, inst.sigma_x, mu_y, sigma_y);
  const Pca py = pca_from_moments(mu_y, sigma_y);

  const TruncatedPca tx = truncate_to_k(px, 1);
  const TruncatedPca ty = truncate_to_k(py, 1);
  Matrix w = whitening(tx);
  Matrix c = coloring(ty);
  Matrix m = fit_mini_adaptation_moments(w, c, inst.a, inst.sigma_x, 0.0);
  const CompressedLayer covnorm_r1 =
      absorb(assemble(std::move(w), std::move(m), std::move(c), inst.mu_x, mu_y));
  CompressedLayer svd_r1 = svd_truncate(inst.a, 1);

  const double mse_covnorm = analytic_mse(covnorm_r1, inst.a, inst.sigma_x, inst.mu_x);
  const double mse_svd = analytic_mse(svd_r1, inst.a, inst.sigma_x, inst.mu_x);
  CHECK(mse_covnorm < mse_svd);
  CHECK(mse_covnorm == doctest::Approx(0.0961).epsilon(1e-6));
  CHECK(mse_svd == doctest::Approx(200.0936).epsilon(1e-6));
}

TEST_CASE("energy_curves hand case") {
  Pca px;
  px.mean = {0.0, 0.0};
  px.eigenvalues = {100.0, 1.0};
  px.components = Matrix::identity(2);
  px.n = 10;
  Pca py = px;
  const EnergyCurves curves = energy_curves(px, py, Matrix::identity(2));
  CHECK(curves.pca_x[0] > 0.99);   // 100/101
  CHECK(curves.singular[0] == doctest::Approx(0.5));
  CHECK(curves.singular[1] == doctest::Approx(1.0));
}

TEST_CASE("energy_curves are non-decreasing and end at one") {
  Rng rng(804);
  const std::size_t d = 6;
  const Matrix samples = rng.gaussian_matrix(500, d);
  const Pca p = pca(accumulate(RunningMoments(d), samples));
  const EnergyCurves curves = energy_curves(p, p, oracle::random_map(d, rng));
  for (const auto* curve : {&curves.pca_x, &curves.pca_y, &curves.singular}) {
    for (std::size_t i = 0; i + 1 < curve->size(); ++i) {
      CHECK((*curve)[i] <= (*curve)[i + 1] + 1e-15);
    }
    CHECK(std::abs(curve->back() - 1.0) <= 1e-12);
  }
}

TEST_CASE("energy_curves: PCA energy dominates singular energy pointwise on the contrast instance") {
  const ContrastInstance inst = contrast_instance();
  Vector mu_y;
  Matrix sigma_y;
  propagate(inst.a, inst.mu_x, inst.sigma_x, mu_y, sigma_y);
  const EnergyCurves curves = energy_curves(pca_from_moments(inst.mu_x, inst.sigma_x),
                                            pca_from_moments(mu_y, sigma_y), inst.a);
  for (std::size_t k = 0; k < curves.singular.size(); ++k) {
    CHECK(curves.pca_x[k] >= curves.singular[k] - 1e-12);
    CHECK(curves.pca_y[k] >= curves.singular[k] - 1e-12);
  }
}

TEST_CASE("energy_curves on isotropic moments are linear") {
  Pca p;
  p.mean = Vector(4, 0.0);
  p.eigenvalues = Vector(4, 2.0);
  p.components = Matrix::identity(4);
  p.n = 10;
  const EnergyCurves curves = energy_curves(p, p, Matrix::identity(4));
  for (std::size_t i = 0; i < 4; ++i) {
    const double expected = static_cast<double>(i + 1) / 4.0;
    CHECK(curves.pca_x[i] == doctest::Approx(expected));
    CHECK(curves.singular[i] == doctest::Approx(expected));
  }
}

TEST_CASE("energy curve CSV emission") {
  Pca p;
  p.mean = {0.0, 0.0};
  p.eigenvalues = {3.0, 1.0};
  p.components = Matrix::identity(2);
  p.n = 10;
  std::ostringstream out;
  write_energy_curves_csv(out, energy_curves(p, p, Matrix::identity(2)));
  CHECK(out.str().substr(0, 25) == "k,pca_x,pca_y,singular_sq");
}

TEST_CASE("data_mse converges to analytic_mse") {
  Rng rng(805);
  const std::size_t d = 5;
  const Matrix a = oracle::random_map(d, rng);
  const Matrix q = oracle::random_orthogonal(d, rng);
  const Vector spectrum = {6.0, 4.0, 2.0, 1.0, 0.5};
  const Matrix sigma_x = oracle::symmetric_from_spectrum(q, spectrum);
  const Vector mu_x = rng.gaussian_vector(d);
  const CompressedLayer layer = [&] {
    CompressedLayer l = svd_truncate(a, 2);
    l.bias = sub(matvec(a, mu_x), matvec(l.dense(), mu_x));
    return l;
  }();
  const Matrix samples_x =
      oracle::sample_gaussian(100000, mu_x, oracle::factor_from_spectrum(q, spectrum), rng);
  const Matrix samples_y = kernels::multiply_tb(samples_x, a);
  const double empirical = data_mse(layer, samples_x, samples_y);
  const double analytic = analytic_mse(layer, a, sigma_x, mu_x);
  CHECK(empirical == doctest::Approx(analytic).epsilon(0.03));
}

TEST_CASE("compare: covnorm frontier is monotone in the threshold") {
  Rng rng(806);
  const std::size_t d = 6, n = 20000;
  const Matrix a = oracle::random_map(d, rng);
  const Matrix q = oracle::random_orthogonal(d, rng);
  const Vector spectrum = {30.0, 10.0, 3.0, 1.0, 0.3, 0.1};
  const Vector mu_x = rng.gaussian_vector(d);
  const Matrix samples_x =
      oracle::sample_gaussian(n, mu_x, oracle::factor_from_spectrum(q, spectrum), rng);
  const Matrix samples_y = kernels::multiply_tb(samples_x, a);
  const DataBundle bundle = make_bundle(samples_x, samples_y, a,
                                        oracle::symmetric_from_spectrum(q, spectrum), mu_x);

  std::vector<MethodConfig> configs;
  for (double t : {0.8, 0.9, 0.95, 0.99, 0.995}) {
    configs.push_back(CovnormConfig{t, 0.0});
  }
  const std::vector<EvalReport> reports = compare(configs, bundle);
  REQUIRE(reports.size() == configs.size());
  for (std::size_t i = 0; i + 1 < reports.size(); ++i) {
    CHECK(*reports[i + 1].analytic_mse <= *reports[i].analytic_mse + 1e-12);
    CHECK(reports[i + 1].kx >= reports[i].kx);
  }
}

TEST_CASE("compare: svd error is monotone in the rank grid") {
  Rng rng(807);
  const std::size_t d = 16, n = 4000;
  const Matrix a = oracle::random_map(d, rng);
  const Matrix samples_x = rng.gaussian_matrix(n, d);
  const Matrix samples_y = kernels::multiply_tb(samples_x, a);
  const DataBundle bundle =
      make_bundle(samples_x, samples_y, a, Matrix::identity(d), Vector(d, 0.0));

  std::vector<MethodConfig> configs;
  for (std::size_t r : {8u, 4u, 2u, 1u}) {  // d/2^i grid, i in 1..4
    configs.push_back(BaselineSpec{Method::svd, r, 0});
  }
  const std::vector<EvalReport> reports = compare(configs, bundle);
  for (std::size_t i = 0; i + 1 < reports.size(); ++i) {
    CHECK(*reports[i].analytic_mse <= *reports[i + 1].analytic_mse + 1e-12);
  }
}

TEST_CASE("compare: single method yields a single report and a stable CSV row") {
  Rng rng(809);
  const std::size_t d = 3, n = 500;
  const Matrix samples_x = rng.gaussian_matrix(n, d);
  const Matrix samples_y = rng.gaussian_matrix(n, d);
  const DataBundle bundle = make_bundle(samples_x, samples_y);
  const std::vector<EvalReport> reports =
      compare({MethodConfig{BaselineSpec{Method::bn, 1, 0}}}, bundle);
  REQUIRE(reports.size() == 1);
  CHECK(reports[0].method == "bn");
  CHECK(reports[0].param_count == 2 * d);
  CHECK(csv_row(reports[0]) == csv_row(reports[0]));
  CHECK(csv_header() ==
        "method,kx,ky,rank,param_count,frobenius_error,data_mse,analytic_mse,eta,seed,threshold");
}
