#include "covnorm/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <utility>

#include "covnorm/decomp.hpp"
#include "covnorm/kernels.hpp"

namespace covnorm {

double data_mse(const CompressedLayer& layer, const Matrix& samples_x, const Matrix& samples_y) {
  if (samples_x.rows() != samples_y.rows() || samples_x.rows() == 0) {
    throw DimensionError("data_mse: paired samples required");
  }
  if (samples_x.cols() != layer.right.cols() || samples_y.cols() != layer.dim()) {
    throw DimensionError("data_mse: shape mismatch");
  }
  const Matrix predicted = layer.apply_rows(samples_x);
  return kernels::squared_difference_sum(predicted, samples_y) /
         static_cast<double>(samples_x.rows());
}

double analytic_mse(const CompressedLayer& layer, const Matrix& a_true, const Matrix& sigma_x,
                    const Vector& mu_x) {
  const std::size_t d = a_true.rows();
  if (a_true.cols() != d || sigma_x.rows() != d || sigma_x.cols() != d || mu_x.size() != d ||
      layer.dim() != d) {
    throw DimensionError("analytic_mse: shape mismatch");
  }
  {
    // PSD gate on Σ_x.
    SymEig eig = sym_eig(sigma_x);
    clamp_psd_spectrum(eig.eigenvalues);
  }
  const Matrix diff = a_true - layer.dense();
  const Matrix ds = kernels::multiply(diff, sigma_x);
  double quad = 0.0;
  for (std::size_t i = 0; i < diff.size(); ++i) quad += ds.data()[i] * diff.data()[i];
  const Vector shift = sub(matvec(diff, mu_x), layer.bias);
  return quad + dot(shift, shift);
}

namespace {

std::vector<double> cumulative_fractions(const Vector& mass, const char* what) {
  double total = 0.0;
  for (double m : mass) total += m;
  if (!(total > 0.0)) {
    throw DegeneracyError(std::string(what) + ": zero total mass");
  }
  std::vector<double> out(mass.size());
  double cum = 0.0;
  for (std::size_t i = 0; i < mass.size(); ++i) {
    cum += mass[i];
    out[i] = cum / total;
  }
  return out;
}

}  // namespace

EnergyCurves energy_curves(const Pca& pca_x, const Pca& pca_y, const Matrix& a) {
  const std::size_t d = pca_x.dim();
  if (pca_y.dim() != d || a.rows() != d || a.cols() != d) {
    throw DimensionError("energy_curves: dimension mismatch");
  }
  const Svd s = svd(a);
  Vector squared(s.singular_values.size());
  for (std::size_t i = 0; i < squared.size(); ++i) {
    squared[i] = s.singular_values[i] * s.singular_values[i];
  }
  EnergyCurves curves;
  curves.pca_x = cumulative_fractions(pca_x.eigenvalues, "energy_curves: input eigenvalues");
  curves.pca_y = cumulative_fractions(pca_y.eigenvalues, "energy_curves: output eigenvalues");
  curves.singular = cumulative_fractions(squared, "energy_curves: singular values");
  return curves;
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_energy_curves_csv(std::ostream& out, const EnergyCurves& curves) {
  out << "k,pca_x,pca_y,singular_sq\n";
  for (std::size_t i = 0; i < curves.pca_x.size(); ++i) {
    out << (i + 1) << ',' << format_double(curves.pca_x[i]) << ','
        << format_double(curves.pca_y[i]) << ',' << format_double(curves.singular[i]) << '\n';
  }
}

DataBundle make_bundle(Matrix samples_x, Matrix samples_y, std::optional<Matrix> reference_a,
                       std::optional<Matrix> sigma_x, std::optional<Vector> mu_x) {
  if (samples_x.rows() != samples_y.rows()) {
    throw DimensionError("make_bundle: paired samples required");
  }
  DataBundle bundle;
  bundle.stats_x = accumulate(RunningMoments(samples_x.cols()), samples_x);
  bundle.stats_y = accumulate(RunningMoments(samples_y.cols()), samples_y);
  bundle.mu_x = mu_x ? std::move(*mu_x) : bundle.stats_x.mean;
  bundle.samples_x = std::move(samples_x);
  bundle.samples_y = std::move(samples_y);
  bundle.reference_a = std::move(reference_a);
  bundle.sigma_x = std::move(sigma_x);
  return bundle;
}

Matrix full_map(const DataBundle& bundle) {
  if (bundle.reference_a) return *bundle.reference_a;
  const Matrix xct = transpose(center_rows(bundle.samples_x, bundle.stats_x.mean));
  const Matrix yct = transpose(center_rows(bundle.samples_y, bundle.stats_y.mean));
  return least_squares(xct, yct, 0.0);
}

std::vector<EvalReport> compare(const std::vector<MethodConfig>& configs,
                                const DataBundle& bundle) {
  std::vector<EvalReport> reports;
  reports.reserve(configs.size());

  // The geometric baselines all start from the same full map.
  std::optional<Matrix> a_full;
  auto full = [&]() -> const Matrix& {
    if (!a_full) a_full = full_map(bundle);
    return *a_full;
  };

  for (const MethodConfig& cfg : configs) {
    EvalReport report;
    CompressedLayer layer;
    if (const auto* cn = std::get_if<CovnormConfig>(&cfg)) {
      report.method = method_name(Method::covnorm);
      report.threshold = cn->threshold;
      layer = covnorm_pipeline(bundle.stats_x, bundle.stats_y, bundle.samples_x,
                               bundle.samples_y, cn->threshold, cn->ridge);
    } else {
      const BaselineSpec& spec = std::get<BaselineSpec>(cfg);
      report.method = method_name(spec.method);
      switch (spec.method) {
        case Method::svd:
          layer = svd_truncate(full(), spec.rank);
          layer.bias = sub(bundle.stats_y.mean, matvec(layer.dense(), bundle.stats_x.mean));
          report.rank = spec.rank;
          break;
        case Method::svd_fta:
          layer = fit_factors(bundle.samples_x, bundle.samples_y, bundle.stats_x.mean,
                              bundle.stats_y.mean, spec.rank, FactorInit::from_svd(full()))
                      .layer;
          report.rank = spec.rank;
          break;
        case Method::fta:
          layer = fit_factors(bundle.samples_x, bundle.samples_y, bundle.stats_x.mean,
                              bundle.stats_y.mean, spec.rank, FactorInit::random(spec.init_seed))
                      .layer;
          report.rank = spec.rank;
          report.seed = spec.init_seed;
          break;
        case Method::pca_fta:
          layer = fit_factors(bundle.samples_x, bundle.samples_y, bundle.stats_x.mean,
                              bundle.stats_y.mean, spec.rank,
                              FactorInit::from_pca(pca(bundle.stats_x), pca(bundle.stats_y)))
                      .layer;
          report.rank = spec.rank;
          break;
        case Method::bn:
          layer = bn_recolor(bundle.stats_x, bundle.stats_y);
          break;
        case Method::covnorm:
          throw DomainError("compare: use CovnormConfig for the covnorm method");
      }
    }
    report.kx = layer.kx;
    report.ky = layer.ky;
    report.param_count = layer.param_count;
    report.eta = eta_ratio(layer.kx, layer.ky);
    report.data_mse = data_mse(layer, bundle.samples_x, bundle.samples_y);
    if (bundle.reference_a) {
      const Matrix diff = *bundle.reference_a - layer.dense();
      const double ref_norm = frobenius_norm(*bundle.reference_a);
      report.frobenius_error =
          ref_norm > 0.0 ? frobenius_norm(diff) / ref_norm : frobenius_norm(diff);
      if (bundle.sigma_x) {
        report.analytic_mse = analytic_mse(layer, *bundle.reference_a, *bundle.sigma_x,
                                           bundle.mu_x);
      }
    }
    reports.push_back(std::move(report));
  }
  return reports;
}

std::string csv_header() {
  return "method,kx,ky,rank,param_count,frobenius_error,data_mse,analytic_mse,eta,seed,"
         "threshold";
}

std::string csv_row(const EvalReport& r) {
  std::string row = r.method;
  row += ',' + std::to_string(r.kx);
  row += ',' + std::to_string(r.ky);
  row += ',';
  if (r.rank) row += std::to_string(*r.rank);
  row += ',' + std::to_string(r.param_count);
  row += ',';
  if (r.frobenius_error) row += format_double(*r.frobenius_error);
  row += ',';
  if (r.data_mse) row += format_double(*r.data_mse);
  row += ',';
  if (r.analytic_mse) row += format_double(*r.analytic_mse);
  row += ',' + format_double(r.eta);
  row += ',';
  if (r.seed) row += std::to_string(*r.seed);
  row += ',';
  if (r.threshold) row += format_double(*r.threshold);
  return row;
}

void write_reports_csv(std::ostream& out, const std::vector<EvalReport>& reports) {
  out << csv_header() << '\n';
  for (const EvalReport& r : reports) out << csv_row(r) << '\n';
}

}  // namespace covnorm
