#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "hyran/context.hpp"
#include "hyran/rng.hpp"

namespace hyran {

enum class EnvKind { correlated_gaussian, hard_instance };

// Distributional parameters of a synthetic environment.
//
// correlated_gaussian: each of the first d-1 coordinates is drawn jointly
// across arms from N(mean_vector, V_N) with unit variances and constant
// cross-arm correlation cross_corr; the last coordinate copies a uniformly
// chosen earlier coordinate of the same arm, and the whole context set is
// scaled into the unit ball by the round's largest norm.
//
// hard_instance: the fixed context tuple (e_1, ..., e_d, 0, ..., 0) with
// beta_star = delta_gap * e_i for one coordinate i.
struct EnvironmentSpec {
  int d = 2;
  int num_arms = 2;
  EnvKind kind = EnvKind::correlated_gaussian;
  Eigen::VectorXd mean_vector;  // per-arm coordinate means (correlated_gaussian)
  double cross_corr = 0.5;
  double noise_sigma = 1.0;
  Eigen::VectorXd beta_star;  // empty: the harness samples one per repetition
  double delta_gap = 0.0;     // hard-instance reward gap

  void validate() const;
};

// The paper-style mean pattern: (-N, -N+2, ..., -2, 2, ..., N-2, N).
Eigen::VectorXd paper_mean_vector(int N);

// Correlated-Gaussian environment with the standard mean pattern.
EnvironmentSpec make_correlated_gaussian(int d, int N, double sigma = 1.0);

// Hard lower-bound instance: basis-vector contexts padded with zero arms,
// beta_star = delta * e_instance with delta = (1/2) sqrt(d / T), unit noise.
// Requires 2 <= d <= N and T >= d/4; instance_coord is 0-based.
EnvironmentSpec gen_hard_instance(int d, int N, long T, int instance_coord);

// Each coordinate iid uniform on (-1/sqrt(d), 1/sqrt(d)); norm never exceeds 1.
Eigen::VectorXd gen_beta_star(int d, RngStream& rng);

// Pre-truncation context matrix (d x N); optionally reports the duplicated
// coordinate index per arm. Requires d >= 2 for the duplicate-column step.
Eigen::MatrixXd gen_contexts_raw(const EnvironmentSpec& spec, RngStream& rng,
                                 std::vector<int>* dup_index = nullptr);

// One round's contexts. Hard instances are deterministic and consume no draws.
ContextSet gen_contexts(const EnvironmentSpec& spec, long round, RngStream& rng);

// x . beta_star + sigma * standard normal. Always consumes one draw so reward
// streams stay aligned across sigma settings.
double draw_reward(const Eigen::VectorXd& x, const Eigen::VectorXd& beta_star, double sigma,
                   RngStream& rng);

// max_i x_i . beta_star - x_chosen . beta_star; zero iff the chosen arm is optimal.
double instantaneous_regret(const ContextSet& contexts, const Eigen::VectorXd& beta_star,
                            int chosen_arm);

// Smallest eigenvalue of the time average of N^{-1} sum_i x_i x_i^T over the
// given number of simulated rounds.
double estimate_phi_sq(const EnvironmentSpec& spec, long rounds, RngStream& rng);

// --- per-round trajectory log -------------------------------------------

struct RoundRecord {
  long t = 0;
  int chosen_arm = -1;
  int hybrid_arm = -1;  // -1 for algorithms without a hybridization draw
  double reward = 0.0;
  double inst_regret = 0.0;
  double cum_regret = 0.0;
  long a_event = -1;  // order of the arm decision in the trajectory's event log
  long h_event = -1;  // order of the hybridization draw (-1 when absent)
};

struct RegretTrace {
  std::string algo;
  std::string hyper_name;
  double hyper_value = 0.0;
  EnvironmentSpec env;  // with beta_star resolved
  std::uint64_t seed = 0;
  std::uint64_t hybridization_seed = 0;
  std::vector<RoundRecord> rounds;
  std::vector<Eigen::MatrixXd> contexts;  // retained only on request (d x N per round)
  Eigen::VectorXd final_estimate;         // hybrid-estimator runs only

  void append(const RoundRecord& r);
  double final_cum_regret() const { return rounds.empty() ? 0.0 : rounds.back().cum_regret; }
};

}  // namespace hyran
