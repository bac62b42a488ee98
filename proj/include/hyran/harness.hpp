#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hyran/bandit.hpp"
#include "hyran/baselines.hpp"
#include "hyran/environment.hpp"

namespace hyran {

enum class AlgoId { hyran, linucb, lints, suplinucb, drts, uniform_random };

std::string algo_name(AlgoId algo);
AlgoId algo_from_name(const std::string& name);
// "p" for hyran, "alpha" for the UCB family, "v" for the sampling family,
// "none" for the uniform-random policy.
std::string hyper_name(AlgoId algo);

// One experiment cell: an algorithm with one hyperparameter value against one
// environment. Grid runs vary `hyper` and `config_index` across cells.
struct ExperimentConfig {
  AlgoId algo = AlgoId::hyran;
  double hyper = 0.5;
  EnvironmentSpec env;
  long T = 1000;
  int repetitions = 10;
  std::uint64_t master_seed = 1;
  long config_index = 0;
  int threads = 1;  // 0 = hardware concurrency
  bool retain_contexts = false;

  // hybrid-estimator knobs
  ImputationMode impute_mode = ImputationMode::selected_ridge;
  ImputationTiming impute_timing = ImputationTiming::previous_round;
  LambdaMode lambda_mode = LambdaMode::practical;
  double delta = 0.05;  // theory-mode confidence level

  // DRTS stays off unless explicitly enabled.
  bool experimental_drts = false;
  DrtsConfig drts;

  HyRanConfig hyran_config() const;
};

// Deterministic single trajectory. The root RNG stream is derived as
// hash(master_seed, config_index, rep_index); contexts, rewards,
// hybridization draws and algorithm randomness use fixed substreams of it.
RegretTrace run_trajectory(const ExperimentConfig& config, int rep_index);

struct AggregateCurve {
  double hyper = 0.0;
  std::vector<double> mean_cum_regret;  // one entry per round
  std::vector<double> std_cum_regret;   // sample std across repetitions
};

struct AggregateResult {
  AlgoId algo = AlgoId::hyran;
  std::string hyper_nm;
  long T = 0;
  int repetitions = 0;
  std::vector<AggregateCurve> curves;  // grid order
  int best_index = 0;

  const AggregateCurve& best() const { return curves.at(best_index); }
};

struct GridResult {
  AggregateResult aggregate;
  std::vector<std::vector<RegretTrace>> traces;  // [cell][rep]
};

// The standard hyperparameter grids: {0.5, 0.65, 0.8, 0.95} for the hybrid
// algorithm, {0.001, 0.01, 0.1, 1} for the baselines.
std::vector<double> paper_grid(AlgoId algo);

// Lowest mean final cumulative regret; ties go to the smaller hyper value.
int select_best(const std::vector<AggregateCurve>& curves);

AggregateResult aggregate_traces(const ExperimentConfig& base, const std::vector<double>& grid,
                                 const std::vector<std::vector<RegretTrace>>& traces);

// Runs every (hyper, repetition) cell, in parallel when configured.
GridResult run_grid(const ExperimentConfig& base, const std::vector<double>& grid);

// Fixed row schema: algo,d,N,T,hyper_name,hyper_value,rep,t,cum_regret.
// Rows are ordered by (cell, rep, t) regardless of execution order.
void write_csv(const std::string& path, const ExperimentConfig& base,
               const std::vector<double>& grid, const std::vector<std::vector<RegretTrace>>& traces);

// Detailed per-round log of a single trajectory.
void write_trace_csv(const std::string& path, const RegretTrace& trace);

// Shortest round-trip decimal form of a double.
std::string format_double(double value);

// Index-addressed parallel loop; results must be written to per-index slots.
// Exceptions from workers are rethrown on the calling thread.
void parallel_for(long n, int threads, const std::function<void(long)>& fn);

}  // namespace hyran
