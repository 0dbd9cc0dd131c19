// covnorm — compress linear adaptation layers from recorded activations.
//
// Subcommands: stats, merge, compress, eval, frontier.
// Exit codes: 0 success, 2 malformed input or usage error, 3 degenerate
// statistics or insufficient data, 4 optimizer divergence.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "covnorm/baselines.hpp"
#include "covnorm/decomp.hpp"
#include "covnorm/evaluation.hpp"
#include "covnorm/io.hpp"
#include "covnorm/recolor.hpp"
#include "covnorm/stats.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace covnorm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitMalformed = 2;
constexpr int kExitDegenerate = 3;
constexpr int kExitDivergence = 4;

std::string format_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

RunningMoments moments_of(const Matrix& samples) {
  return accumulate(RunningMoments(samples.cols()), samples);
}

Pca pca_of_samples(const Matrix& samples) {
  if (samples.rows() < 2) {
    throw InsufficientDataError("need at least 2 samples");
  }
  return pca(moments_of(samples));
}

struct StatsArgs {
  std::string in, out;
};

void run_stats(const StatsArgs& args) {
  const Matrix samples = io::load_matrix(args.in);
  const Pca p = pca_of_samples(samples);
  io::save_pca(args.out, p);
  std::ostringstream line;
  line << "d=" << p.dim() << " n=" << p.n;
  for (double t : {0.90, 0.95, 0.99}) {
    char label[16];
    std::snprintf(label, sizeof(label), " k@%.2f=", t);
    line << label << truncate(p, t).k;
  }
  std::cout << line.str() << "\n";
}

struct MergeArgs {
  std::vector<std::string> in;
  std::string out;
};

void run_merge(const MergeArgs& args) {
  std::vector<Pca> parts;
  parts.reserve(args.in.size());
  for (const std::string& path : args.in) parts.push_back(io::load_pca(path));
  const Pca joint = merge(parts);
  io::save_pca(args.out, joint);
  std::cout << "d=" << joint.dim() << " n=" << joint.n << " parts=" << parts.size() << "\n";
}

struct CompressArgs {
  std::string method;
  std::string x, y, out;
  std::string pca_x, pca_y;
  double threshold = 0.99;
  std::optional<double> ridge;
  std::optional<std::size_t> rank;
  std::uint64_t seed = 0;
};

void run_compress(const CompressArgs& args) {
  const Method method = parse_method(args.method);
  const Matrix samples_x = io::load_matrix(args.x);
  const Matrix samples_y = io::load_matrix(args.y);
  if (samples_x.rows() != samples_y.rows() || samples_x.rows() == 0) {
    throw DimensionError("compress: x and y must contain the same nonzero number of rows");
  }
  if (args.pca_x.empty() != args.pca_y.empty()) {
    throw DomainError("compress: --pca-x and --pca-y must be given together");
  }
  const bool has_pca_files = !args.pca_x.empty();

  const RunningMoments stats_x = moments_of(samples_x);
  const RunningMoments stats_y = moments_of(samples_y);

  auto pca_x = [&] { return has_pca_files ? io::load_pca(args.pca_x) : pca_of_samples(samples_x); };
  auto pca_y = [&] { return has_pca_files ? io::load_pca(args.pca_y) : pca_of_samples(samples_y); };

  auto require_rank = [&]() -> std::size_t {
    if (!args.rank) throw DomainError("compress: --rank is required for this method");
    return *args.rank;
  };

  auto full_map_fit = [&] {
    const Matrix xct = transpose(center_rows(samples_x, stats_x.mean));
    const Matrix yct = transpose(center_rows(samples_y, stats_y.mean));
    return least_squares(xct, yct, args.ridge.value_or(0.0));
  };

  CompressedLayer layer;
  switch (method) {
    case Method::covnorm:
      layer = covnorm_compress(pca_x(), pca_y(), samples_x, samples_y, args.threshold, args.ridge);
      break;
    case Method::svd: {
      layer = svd_truncate(full_map_fit(), require_rank());
      layer.bias = sub(stats_y.mean, matvec(layer.dense(), stats_x.mean));
      break;
    }
    case Method::svd_fta:
      layer = fit_factors(samples_x, samples_y, stats_x.mean, stats_y.mean, require_rank(),
                          FactorInit::from_svd(full_map_fit()))
                  .layer;
      break;
    case Method::fta:
      layer = fit_factors(samples_x, samples_y, stats_x.mean, stats_y.mean, require_rank(),
                          FactorInit::random(args.seed))
                  .layer;
      break;
    case Method::pca_fta:
      layer = fit_factors(samples_x, samples_y, stats_x.mean, stats_y.mean, require_rank(),
                          FactorInit::from_pca(pca_x(), pca_y()))
                  .layer;
      break;
    case Method::bn:
      layer = bn_recolor(stats_x, stats_y);
      break;
  }
  io::save_layer(args.out, layer);

  const double mse = data_mse(layer, samples_x, samples_y);
  const double y_mass = trace(stats_y.scatter) / static_cast<double>(stats_y.n);
  const double residual = y_mass > 0.0 ? std::sqrt(mse / y_mass) : std::sqrt(mse);
  std::cout << "param_count=" << layer.param_count << " kx=" << layer.kx << " ky=" << layer.ky
            << " eta=" << format_g(eta_ratio(layer.kx, layer.ky))
            << " residual=" << format_g(residual) << "\n";
}

struct EvalArgs {
  std::string layer, x, y, out;
  std::string ref_a, sigma_x;
};

void run_eval(const EvalArgs& args) {
  const CompressedLayer layer = io::load_layer(args.layer);
  const Matrix samples_x = io::load_matrix(args.x);
  const Matrix samples_y = io::load_matrix(args.y);
  if (args.ref_a.empty() != args.sigma_x.empty()) {
    throw DomainError("eval: --ref-a and --sigma-x must be given together");
  }

  EvalReport report;
  report.method = fs::path(args.layer).stem().string();
  report.kx = layer.kx;
  report.ky = layer.ky;
  report.param_count = layer.param_count;
  report.eta = eta_ratio(layer.kx, layer.ky);
  report.data_mse = data_mse(layer, samples_x, samples_y);
  if (!args.ref_a.empty()) {
    const Matrix a = io::load_matrix(args.ref_a);
    const Matrix sigma = io::load_matrix(args.sigma_x);
    const RunningMoments stats_x = moments_of(samples_x);
    const Matrix diff = a - layer.dense();
    const double ref_norm = frobenius_norm(a);
    report.frobenius_error = ref_norm > 0.0 ? frobenius_norm(diff) / ref_norm : frobenius_norm(diff);
    report.analytic_mse = analytic_mse(layer, a, sigma, stats_x.mean);
  }

  std::string contents;
  if (fs::exists(args.out)) {
    std::ifstream in(args.out, std::ios::binary);
    contents.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  } else {
    contents = csv_header() + "\n";
  }
  contents += csv_row(report) + "\n";
  io::atomic_write(args.out, contents);
  std::cout << csv_row(report) << "\n";
}

struct FrontierArgs {
  std::string config, out;
};

std::vector<std::size_t> default_rank_grid(std::size_t d) {
  // r = d/2^i for i in 2..6, clipped to r >= 1, deduplicated.
  std::vector<std::size_t> ranks;
  for (int i = 2; i <= 6; ++i) {
    const std::size_t r = d >> i;
    if (r >= 1 && (ranks.empty() || ranks.back() != r)) ranks.push_back(r);
  }
  return ranks;
}

void run_frontier(const FrontierArgs& args) {
  std::ifstream in(args.config);
  if (!in) throw IoError("frontier: cannot open config " + args.config);
  json cfg;
  try {
    in >> cfg;
  } catch (const json::exception& e) {
    throw FormatError(std::string("frontier: bad config: ") + e.what());
  }

  auto path_of = [&](const char* key) -> std::string {
    if (!cfg.contains(key) || !cfg[key].is_string()) {
      throw FormatError(std::string("frontier: config needs string field '") + key + "'");
    }
    return cfg[key].get<std::string>();
  };

  const Matrix samples_x = io::load_matrix(path_of("x"));
  const Matrix samples_y = io::load_matrix(path_of("y"));
  std::optional<Matrix> ref_a, sigma_x;
  if (cfg.contains("ref_a")) ref_a = io::load_matrix(cfg["ref_a"].get<std::string>());
  if (cfg.contains("sigma_x")) sigma_x = io::load_matrix(cfg["sigma_x"].get<std::string>());
  const std::size_t d = samples_x.cols();

  std::vector<MethodConfig> configs;
  if (cfg.contains("covnorm")) {
    const json& section = cfg["covnorm"];
    std::optional<double> ridge;
    if (section.contains("ridge")) ridge = section["ridge"].get<double>();
    if (!section.contains("thresholds") || !section["thresholds"].is_array()) {
      throw FormatError("frontier: covnorm section needs a 'thresholds' array");
    }
    for (const json& t : section["thresholds"]) {
      configs.push_back(CovnormConfig{t.get<double>(), ridge});
    }
  }
  if (cfg.contains("baselines")) {
    for (const json& b : cfg["baselines"]) {
      const Method method = parse_method(b.at("method").get<std::string>());
      std::vector<std::size_t> ranks;
      if (method != Method::bn) {
        if (!b.contains("ranks") || (b["ranks"].is_string() && b["ranks"] == "default")) {
          ranks = default_rank_grid(d);
        } else if (b["ranks"].is_array()) {
          for (const json& r : b["ranks"]) ranks.push_back(r.get<std::size_t>());
        } else {
          throw FormatError("frontier: 'ranks' must be an array or \"default\"");
        }
        if (ranks.empty()) throw FormatError("frontier: empty rank grid");
      }
      std::vector<std::uint64_t> seeds = {0};
      if (b.contains("seeds")) {
        seeds.clear();
        for (const json& s : b["seeds"]) seeds.push_back(s.get<std::uint64_t>());
      }
      if (method == Method::bn) {
        configs.push_back(BaselineSpec{method, 1, 0});
        continue;
      }
      for (std::size_t r : ranks) {
        if (method == Method::fta) {
          for (std::uint64_t s : seeds) configs.push_back(BaselineSpec{method, r, s});
        } else {
          configs.push_back(BaselineSpec{method, r, 0});
        }
      }
    }
  }
  if (configs.empty()) throw FormatError("frontier: empty grid (no covnorm thresholds or baselines)");

  const DataBundle bundle =
      make_bundle(samples_x, samples_y, std::move(ref_a), std::move(sigma_x));
  const std::vector<EvalReport> reports = compare(configs, bundle);

  std::ostringstream csv;
  write_reports_csv(csv, reports);
  io::atomic_write(args.out, csv.str());

  if (cfg.contains("energy_out")) {
    const EnergyCurves curves = energy_curves(pca(bundle.stats_x), pca(bundle.stats_y),
                                              full_map(bundle));
    std::ostringstream energy;
    write_energy_curves_csv(energy, curves);
    io::atomic_write(cfg["energy_out"].get<std::string>(), energy.str());
  }
  std::cout << "rows=" << reports.size() << "\n";
}

int classify(const std::exception& e) {
  if (dynamic_cast<const ConvergenceError*>(&e) != nullptr) return kExitDivergence;
  if (dynamic_cast<const DegeneracyError*>(&e) != nullptr) return kExitDegenerate;
  if (dynamic_cast<const InsufficientDataError*>(&e) != nullptr) return kExitDegenerate;
  if (dynamic_cast<const RankDeficiencyError*>(&e) != nullptr) return kExitDegenerate;
  return kExitMalformed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"covariance-normalized compression of linear adaptation layers"};
  app.require_subcommand(1);
  app.footer("exit codes: 0 ok, 2 malformed input/usage, 3 degenerate statistics, 4 divergence");

  StatsArgs stats_args;
  CLI::App* stats_cmd = app.add_subcommand("stats", "estimate activation statistics into a PCA file");
  stats_cmd->add_option("--in", stats_args.in, "sample matrix file (rows = observations)")
      ->required();
  stats_cmd->add_option("--out", stats_args.out, "output PCA file")->required();

  MergeArgs merge_args;
  CLI::App* merge_cmd = app.add_subcommand("merge", "pool PCA files into a joint PCA");
  merge_cmd->add_option("--in", merge_args.in, "input PCA files")->required()->expected(-1);
  merge_cmd->add_option("--out", merge_args.out, "output PCA file")->required();

  CompressArgs compress_args;
  CLI::App* compress_cmd = app.add_subcommand("compress", "fit a compressed layer");
  compress_cmd
      ->add_option("--method", compress_args.method,
                   "covnorm|svd|fta|svd-fta|pca-fta|bn")
      ->required();
  compress_cmd->add_option("--x", compress_args.x, "input samples")->required();
  compress_cmd->add_option("--y", compress_args.y, "output samples")->required();
  compress_cmd->add_option("--pca-x", compress_args.pca_x, "input PCA file (joint mode)");
  compress_cmd->add_option("--pca-y", compress_args.pca_y, "output PCA file (joint mode)");
  compress_cmd->add_option("--threshold", compress_args.threshold,
                           "explained-variance threshold (covnorm)")
      ->capture_default_str();
  double ridge_value = 0.0;
  CLI::Option* ridge_opt =
      compress_cmd->add_option("--ridge", ridge_value, "ridge for the least-squares fits");
  std::size_t rank_value = 0;
  CLI::Option* rank_opt =
      compress_cmd->add_option("--rank", rank_value, "rank for the factor baselines");
  compress_cmd->add_option("--seed", compress_args.seed, "seed for random initialization")
      ->capture_default_str();
  compress_cmd->add_option("--out", compress_args.out, "output layer file")->required();

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a layer and append a CSV report row");
  eval_cmd->add_option("--layer", eval_args.layer, "layer file")->required();
  eval_cmd->add_option("--x", eval_args.x, "input samples")->required();
  eval_cmd->add_option("--y", eval_args.y, "output samples")->required();
  eval_cmd->add_option("--ref-a", eval_args.ref_a, "reference map matrix file");
  eval_cmd->add_option("--sigma-x", eval_args.sigma_x, "population input covariance file");
  eval_cmd->add_option("--out", eval_args.out, "report CSV (appended)")->required();

  FrontierArgs frontier_args;
  CLI::App* frontier_cmd =
      app.add_subcommand("frontier", "run a method/parameter grid into a comparison CSV");
  frontier_cmd->add_option("--config", frontier_args.config, "JSON grid specification")
      ->required();
  frontier_cmd->add_option("--out", frontier_args.out, "frontier CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitMalformed;
  }

  try {
    if (*stats_cmd) {
      run_stats(stats_args);
    } else if (*merge_cmd) {
      run_merge(merge_args);
    } else if (*compress_cmd) {
      if (ridge_opt->count() > 0) compress_args.ridge = ridge_value;
      if (rank_opt->count() > 0) compress_args.rank = rank_value;
      run_compress(compress_args);
    } else if (*eval_cmd) {
      run_eval(eval_args);
    } else if (*frontier_cmd) {
      run_frontier(frontier_args);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return classify(e);
  }
  return kExitOk;
}
