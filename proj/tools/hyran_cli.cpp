// Command-line driver: single runs, hyperparameter grids, theory diagnostics
// and SVG regret plots over flat CSV files.

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include "hyran/diagnostics.hpp"
#include "hyran/harness.hpp"
#include "hyran/svg.hpp"

namespace fs = std::filesystem;
using namespace hyran;

namespace {

struct CommonOpts {
  std::string algo = "hyran";
  std::string env = "correlated";
  int d = 5;
  int N = 10;
  long T = 1000;
  int reps = 10;
  std::uint64_t seed = 1;
  double sigma = 1.0;
  std::string out_dir = ".";
  int threads = 0;
  // algorithm hypers; the one matching the algorithm is used
  double p = 0.5;
  double alpha = 1.0;
  double v = 1.0;
  bool experimental = false;
  int hard_instance = 0;
  std::string impute = "ridge";
  std::string lambda = "practical";
  double theory_delta = 0.05;
};

ImputationMode impute_from_name(const std::string& name) {
  if (name == "practical") return ImputationMode::practical;
  if (name == "theory") return ImputationMode::theory;
  if (name == "ridge") return ImputationMode::selected_ridge;
  throw std::invalid_argument("unknown imputation mode: " + name);
}

void add_common(CLI::App* cmd, CommonOpts& o, bool with_hyran_knobs = true) {
  cmd->add_option("--algo", o.algo, "hyran|linucb|lints|suplinucb|drts|random")
      ->default_val(o.algo);
  cmd->add_option("--env", o.env, "correlated|hard")->default_val(o.env);
  cmd->add_option("--d", o.d, "context dimension")->default_val(o.d);
  cmd->add_option("--N", o.N, "number of arms")->default_val(o.N);
  cmd->add_option("--T", o.T, "horizon")->default_val(o.T);
  cmd->add_option("--reps", o.reps, "repetitions")->default_val(o.reps);
  cmd->add_option("--seed", o.seed, "master seed")->default_val(o.seed);
  cmd->add_option("--sigma", o.sigma, "reward noise level")->default_val(o.sigma);
  cmd->add_option("--out-dir", o.out_dir, "output directory")
      ->envname("HYRAN_OUT_DIR")
      ->default_val(o.out_dir);
  cmd->add_option("--threads", o.threads, "worker threads (0 = hardware)")->default_val(o.threads);
  cmd->add_option("--p", o.p, "hybridization probability (hyran)")->default_val(o.p);
  cmd->add_option("--alpha", o.alpha, "confidence width scale (linucb/suplinucb)")
      ->default_val(o.alpha);
  cmd->add_option("--v", o.v, "posterior scale (lints/drts)")->default_val(o.v);
  cmd->add_flag("--experimental", o.experimental, "enable experimental algorithms (drts)");
  cmd->add_option("--hard-instance", o.hard_instance,
                  "hard-instance coordinate (env=hard, 0-based)")
      ->default_val(o.hard_instance);
  if (with_hyran_knobs) {
    cmd->add_option("--impute", o.impute, "imputation estimator: ridge|practical|theory")
        ->default_val(o.impute);
    cmd->add_option("--lambda", o.lambda, "regularization schedule: practical|theory")
        ->default_val(o.lambda);
    cmd->add_option("--delta", o.theory_delta, "confidence level for theory-mode schedules")
        ->default_val(o.theory_delta);
  }
}

ExperimentConfig build_config(const CommonOpts& o) {
  ExperimentConfig cfg;
  cfg.algo = algo_from_name(o.algo);
  if (o.env == "correlated")
    cfg.env = make_correlated_gaussian(o.d, o.N, o.sigma);
  else if (o.env == "hard")
    cfg.env = gen_hard_instance(o.d, o.N, o.T, o.hard_instance);
  else
    throw std::invalid_argument("unknown environment: " + o.env);
  cfg.T = o.T;
  cfg.repetitions = o.reps;
  cfg.master_seed = o.seed;
  cfg.threads = o.threads;
  cfg.experimental_drts = o.experimental;
  cfg.impute_mode = impute_from_name(o.impute);
  if (o.lambda == "theory")
    cfg.lambda_mode = LambdaMode::theory;
  else if (o.lambda != "practical")
    throw std::invalid_argument("unknown lambda schedule: " + o.lambda);
  cfg.delta = o.theory_delta;
  switch (cfg.algo) {
    case AlgoId::hyran: cfg.hyper = o.p; break;
    case AlgoId::linucb:
    case AlgoId::suplinucb: cfg.hyper = o.alpha; break;
    case AlgoId::lints:
    case AlgoId::drts: cfg.hyper = o.v; break;
    case AlgoId::uniform_random: cfg.hyper = 0.0; break;
  }
  return cfg;
}

void ensure_dir(const std::string& dir) {
  if (!dir.empty() && dir != ".") fs::create_directories(dir);
}

// Resolved settings in the same flat key=value format the --config option
// reads, so any run can be reproduced from its output directory.
void write_config_ini(const std::string& path, const std::string& section, const CommonOpts& o) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "[" << section << "]\n";
  out << "algo=" << o.algo << "\n";
  out << "env=" << o.env << "\n";
  out << "d=" << o.d << "\n";
  out << "N=" << o.N << "\n";
  out << "T=" << o.T << "\n";
  out << "reps=" << o.reps << "\n";
  out << "seed=" << o.seed << "\n";
  out << "sigma=" << format_double(o.sigma) << "\n";
  out << "p=" << format_double(o.p) << "\n";
  out << "alpha=" << format_double(o.alpha) << "\n";
  out << "v=" << format_double(o.v) << "\n";
  out << "impute=" << o.impute << "\n";
  out << "lambda=" << o.lambda << "\n";
  out << "delta=" << format_double(o.theory_delta) << "\n";
  if (o.env == "hard") out << "hard-instance=" << o.hard_instance << "\n";
}

std::vector<double> parse_grid(const std::string& csv) {
  std::vector<double> grid;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) grid.push_back(std::stod(tok));
  }
  return grid;
}

// Aggregates the fixed-schema CSV into one curve per (algo, hyper) pair.
std::vector<PlotCurve> curves_from_csv(const std::vector<std::string>& paths) {
  // label -> t -> cum_regret values across reps
  std::map<std::string, std::map<long, std::vector<double>>> data;
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty csv: " + path);
    if (line.rfind("algo,", 0) != 0)
      throw std::runtime_error("unexpected csv header in " + path);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string algo, d, N, T, hname, hval, rep, t, cum;
      std::getline(ss, algo, ',');
      std::getline(ss, d, ',');
      std::getline(ss, N, ',');
      std::getline(ss, T, ',');
      std::getline(ss, hname, ',');
      std::getline(ss, hval, ',');
      std::getline(ss, rep, ',');
      std::getline(ss, t, ',');
      std::getline(ss, cum, ',');
      const std::string label = algo + " (" + hname + "=" + hval + ")";
      data[label][std::stol(t)].push_back(std::stod(cum));
    }
  }
  std::vector<PlotCurve> curves;
  for (const auto& [label, per_t] : data) {
    PlotCurve c;
    c.label = label;
    for (const auto& [t, vals] : per_t) {
      double mean = 0.0;
      for (double v : vals) mean += v;
      mean /= static_cast<double>(vals.size());
      double ss = 0.0;
      for (double v : vals) ss += (v - mean) * (v - mean);
      c.x.push_back(static_cast<double>(t));
      c.mean.push_back(mean);
      c.stddev.push_back(vals.size() > 1 ? std::sqrt(ss / (vals.size() - 1.0)) : 0.0);
    }
    curves.push_back(std::move(c));
  }
  return curves;
}

int run_command(const CommonOpts& o, bool trace) {
  ExperimentConfig cfg = build_config(o);
  ensure_dir(o.out_dir);
  write_config_ini(o.out_dir + "/config_" + algo_name(cfg.algo) + ".ini", "run", o);
  const std::vector<double> grid = {cfg.hyper};
  GridResult result = run_grid(cfg, grid);
  const std::string csv = o.out_dir + "/run_" + algo_name(cfg.algo) + ".csv";
  write_csv(csv, cfg, grid, result.traces);
  if (trace) {
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
      write_trace_csv(o.out_dir + "/trace_" + algo_name(cfg.algo) + "_rep" +
                          std::to_string(rep) + ".csv",
                      result.traces[0][rep]);
    }
  }
  const auto& best = result.aggregate.best();
  std::cout << algo_name(cfg.algo) << ": mean final cumulative regret "
            << format_double(best.mean_cum_regret.empty() ? 0.0 : best.mean_cum_regret.back())
            << " over " << cfg.repetitions << " reps -> " << csv << "\n";
  return 0;
}

int grid_command(const CommonOpts& o, const std::string& preset, const std::string& grid_csv,
                 bool plot) {
  ExperimentConfig cfg = build_config(o);
  ensure_dir(o.out_dir);
  std::vector<double> grid;
  if (!grid_csv.empty())
    grid = parse_grid(grid_csv);
  else if (preset == "paper")
    grid = paper_grid(cfg.algo);
  else
    throw std::invalid_argument("grid: provide --preset paper or --grid <values>");
  if (grid.empty()) throw std::invalid_argument("grid: empty grid");

  GridResult result = run_grid(cfg, grid);
  const std::string algo = algo_name(cfg.algo);
  write_config_ini(o.out_dir + "/config_" + algo + ".ini", "grid", o);
  write_csv(o.out_dir + "/grid_" + algo + ".csv", cfg, grid, result.traces);

  const int best = result.aggregate.best_index;
  ExperimentConfig best_cfg = cfg;
  best_cfg.hyper = grid[best];
  write_csv(o.out_dir + "/best_" + algo + ".csv", best_cfg, {grid[best]},
            {result.traces[best]});

  std::ofstream summary(o.out_dir + "/summary_" + algo + ".txt", std::ios::binary);
  summary << "algo=" << algo << " T=" << cfg.T << " reps=" << cfg.repetitions << "\n";
  for (std::size_t c = 0; c < grid.size(); ++c) {
    const auto& curve = result.aggregate.curves[c];
    summary << hyper_name(cfg.algo) << "=" << format_double(grid[c])
            << " mean_final=" << format_double(curve.mean_cum_regret.back())
            << " std_final=" << format_double(curve.std_cum_regret.back())
            << (static_cast<int>(c) == best ? "  <- best" : "") << "\n";
  }
  if (plot) {
    std::vector<PlotCurve> curves;
    for (std::size_t c = 0; c < grid.size(); ++c) {
      const auto& curve = result.aggregate.curves[c];
      PlotCurve pc;
      pc.label = algo + " (" + hyper_name(cfg.algo) + "=" + format_double(grid[c]) + ")";
      for (long t = 1; t <= cfg.T; ++t) pc.x.push_back(static_cast<double>(t));
      pc.mean = curve.mean_cum_regret;
      pc.stddev = curve.std_cum_regret;
      curves.push_back(std::move(pc));
    }
    emit_plot(curves, o.out_dir + "/regret_" + algo + ".svg");
  }
  std::cout << "best " << hyper_name(cfg.algo) << "=" << format_double(grid[best])
            << " mean final cumulative regret "
            << format_double(result.aggregate.best().mean_cum_regret.back()) << "\n";
  return 0;
}

struct DiagnoseOpts {
  std::string check;
  double epsilon = 0.5;
  double delta = 0.1;
  int trials = 500;
  long burn_in = 0;
  int mc_contexts = 100;
  long stride = 5;
  int runs = 20;
  int M = 1000;
  long cloud_round = 1000;
};

int diagnose_command(const CommonOpts& o, const DiagnoseOpts& dg) {
  ensure_dir(o.out_dir);
  diag::DiagnosticReport report;
  if (dg.check == "psi-size") {
    report = diag::check_psi_size(o.p, dg.epsilon, o.T, dg.delta, dg.trials, o.seed, o.threads);
  } else if (dg.check == "self-normalized") {
    diag::SelfNormalizedParams P;
    P.d = o.d;
    P.N = o.N;
    P.p = o.p;
    P.sigma = o.sigma;
    P.delta = dg.delta;
    P.T = o.T;
    P.trials = dg.trials;
    P.burn_in = dg.burn_in;
    P.threads = o.threads;
    P.seed = o.seed;
    report = diag::check_self_normalized(P);
  } else if (dg.check == "regret-decomposition") {
    diag::RegretDecompParams P;
    P.d = o.d;
    P.N = o.N;
    P.p = o.p;
    P.sigma = o.sigma;
    P.T = o.T;
    P.trajectories = dg.trials;
    P.mc_contexts = dg.mc_contexts;
    P.stride = dg.stride;
    P.threads = o.threads;
    P.seed = o.seed;
    report = diag::check_regret_decomposition(P);
  } else if (dg.check == "imputation-error") {
    diag::ImputationErrorParams P;
    P.d = o.d;
    P.N = o.N;
    P.p = o.p;
    P.sigma = o.sigma;
    P.delta = dg.delta;
    P.T = o.T;
    P.trials = dg.trials;
    P.burn_in = dg.burn_in;
    P.threads = o.threads;
    P.seed = o.seed;
    report = diag::check_imputation_error(P);
  } else if (dg.check == "lower-bound") {
    const AlgoId algo = algo_from_name(o.algo);
    const double hyper = algo == AlgoId::hyran ? o.p
                         : (algo == AlgoId::lints || algo == AlgoId::drts) ? o.v
                                                                           : o.alpha;
    report = diag::check_lower_bound(algo, hyper, o.d, o.N, o.T, dg.runs, o.seed, o.threads);
  } else if (dg.check == "estimator-cloud") {
    ExperimentConfig cfg = build_config(o);
    cfg.algo = AlgoId::hyran;
    cfg.hyper = o.p;
    cfg.T = dg.cloud_round;
    cfg.retain_contexts = true;
    const RegretTrace trace = run_trajectory(cfg, 0);
    const auto cloud =
        diag::estimator_cloud(trace, cfg.hyran_config(), dg.M, o.seed, o.threads);
    diag::write_cloud_scatter(cloud, o.out_dir, "cloud_p" + format_double(o.p));
    report.check = "estimator_cloud";
    report.trials = dg.M;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(cfg.env.d);
    for (const auto& v : cloud) mean += v;
    mean /= static_cast<double>(cloud.size());
    double spread_min = std::numeric_limits<double>::infinity();
    for (int j = 0; j < cfg.env.d; ++j) {
      double ss = 0.0;
      for (const auto& v : cloud) ss += (v(j) - mean(j)) * (v(j) - mean(j));
      const double sd = std::sqrt(ss / (cloud.size() - 1.0));
      report.metrics["spread_c" + std::to_string(j)] = sd;
      spread_min = std::min(spread_min, sd);
    }
    report.metrics["centroid_distance_to_beta_star"] =
        (mean - trace.env.beta_star).norm();
    report.pass = spread_min > 0.0;
    report.allowed_rate = 0.0;
  } else {
    throw std::invalid_argument("unknown check: " + dg.check);
  }
  report.write_csv(o.out_dir);
  std::cout << report.summary();
  return report.pass ? 0 : 1;
}

int plot_command(const std::vector<std::string>& inputs, const std::string& out) {
  if (inputs.empty()) throw std::invalid_argument("plot: no input csv files");
  emit_plot(curves_from_csv(inputs), out);
  std::cout << "wrote " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear contextual bandit simulation harness"};
  app.require_subcommand(1);
  app.fallthrough();  // lets --config appear after the subcommand name
  app.set_config("--config", "", "flat key=value config file with [section] headers");

  CommonOpts run_opts, grid_opts, diag_opts;
  bool run_trace = false;
  auto* run_cmd = app.add_subcommand("run", "run one algorithm configuration");
  add_common(run_cmd, run_opts);
  run_cmd->add_flag("--trace", run_trace, "also write detailed per-round trace CSVs");

  std::string preset, grid_values;
  bool grid_plot = false;
  auto* grid_cmd = app.add_subcommand("grid", "hyperparameter grid search");
  add_common(grid_cmd, grid_opts);
  grid_cmd->add_option("--preset", preset, "grid preset: paper");
  grid_cmd->add_option("--grid", grid_values, "comma-separated hyperparameter values");
  grid_cmd->add_flag("--plot", grid_plot, "emit an SVG of the aggregate curves");

  DiagnoseOpts dg;
  auto* diag_cmd = app.add_subcommand("diagnose", "run a theory diagnostic");
  add_common(diag_cmd, diag_opts, /*with_hyran_knobs=*/false);
  diag_cmd->add_option("--check", dg.check,
                       "psi-size|self-normalized|regret-decomposition|imputation-error|"
                       "lower-bound|estimator-cloud")
      ->required();
  diag_cmd->add_option("--epsilon", dg.epsilon, "subsample fraction parameter");
  diag_cmd->add_option("--delta", dg.delta, "confidence parameter");
  diag_cmd->add_option("--trials", dg.trials, "Monte-Carlo trials / trajectories");
  diag_cmd->add_option("--burn-in", dg.burn_in, "surrogate burn-in round (0 = theoretical)");
  diag_cmd->add_option("--mc-contexts", dg.mc_contexts, "fresh context draws per audit");
  diag_cmd->add_option("--stride", dg.stride, "audit stride for the decomposition check");
  diag_cmd->add_option("--runs", dg.runs, "runs per hard instance");
  diag_cmd->add_option("--M", dg.M, "estimator cloud replays");
  diag_cmd->add_option("--cloud-round", dg.cloud_round, "round at which the cloud is formed");

  std::vector<std::string> plot_inputs;
  std::string plot_out = "regret.svg";
  auto* plot_cmd = app.add_subcommand("plot", "render regret curves from CSV files");
  plot_cmd->add_option("--in", plot_inputs, "input CSV files (fixed schema)")->required();
  plot_cmd->add_option("--out", plot_out, "output SVG path");

  try {
    app.parse(argc, argv);
    if (run_cmd->parsed()) return run_command(run_opts, run_trace);
    if (grid_cmd->parsed()) return grid_command(grid_opts, preset, grid_values, grid_plot);
    if (diag_cmd->parsed()) return diagnose_command(diag_opts, dg);
    if (plot_cmd->parsed()) return plot_command(plot_inputs, plot_out);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
