#pragma once

#include <Eigen/Dense>
#include <vector>

#include "hyran/context.hpp"
#include "hyran/rng.hpp"

namespace hyran {

// Ridge regression state over selected (context, reward) pairs:
// A = regularizer * I + sum x x^T, b = sum x y.
struct RidgeState {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  double regularizer;

  explicit RidgeState(int d, double regularizer = 1.0);
  Eigen::VectorXd estimate() const;  // A^{-1} b via Cholesky
};

void ridge_update(RidgeState& state, const Eigen::VectorXd& x, double reward);

// Per-arm index values x_i . A^{-1} b + alpha sqrt(x_i . A^{-1} x_i).
Eigen::VectorXd linucb_scores(const RidgeState& state, const ContextSet& contexts, double alpha);

// argmax of linucb_scores, lowest index on ties.
int linucb_select(const RidgeState& state, const ContextSet& contexts, double alpha);

// One posterior draw: beta ~ N(A^{-1} b, v^2 A^{-1}).
Eigen::VectorXd lints_sample(const RidgeState& state, double v, RngStream& rng);

// Thompson sampling: greedy on one posterior draw.
int lints_select(const RidgeState& state, const ContextSet& contexts, double v, RngStream& rng);

// Phased elimination with S = ceil(log2 T) levels. Each level keeps an
// independent ridge state fed only by the rounds recorded at that level;
// exploitation rounds (all widths below 1/sqrt(T)) update nothing.
class SupLinUcb {
 public:
  SupLinUcb(int d, double alpha, long horizon);

  int select(const ContextSet& contexts);
  void update(const ContextSet& contexts, int arm, double reward);

  int num_levels() const { return static_cast<int>(levels_.size()); }
  int last_level() const { return last_level_; }  // 1-based; -1 = exploitation
  const std::vector<std::vector<long>>& level_rounds() const { return level_rounds_; }
  const std::vector<long>& exploitation_rounds() const { return exploitation_rounds_; }
  long rounds_seen() const { return round_; }

 private:
  double alpha_;
  long horizon_;
  std::vector<RidgeState> levels_;
  std::vector<std::vector<long>> level_rounds_;
  std::vector<long> exploitation_rounds_;
  long round_ = 0;
  int last_level_ = -1;
};

// Doubly robust Thompson sampling (experimental). Selection is plain LinTS;
// with resample_draws > 0 the update imputes pseudo-rewards for every arm,
// weighting the observed reward by an inverse selection probability estimated
// from posterior resampling. resample_draws = 0 reduces the update to the
// selected-pair ridge step, i.e. exactly LinTS.
struct DrtsConfig {
  double v = 1.0;
  int resample_draws = 100;
  double prob_floor = 1e-4;  // below this, fall back to the plain ridge update
};

class Drts {
 public:
  Drts(int d, DrtsConfig config);

  int select(const ContextSet& contexts, RngStream& rng);
  void update(const ContextSet& contexts, int arm, double reward, RngStream& rng);

  const RidgeState& state() const { return state_; }

 private:
  RidgeState state_;
  DrtsConfig config_;
};

}  // namespace hyran
