#pragma once

#include <Eigen/Dense>
#include <optional>

#include "hyran/context.hpp"
#include "hyran/errors.hpp"
#include "hyran/rng.hpp"

namespace hyran {

// Arm-index distribution of the hybridization draw: the chosen arm keeps
// mass p, every other arm gets (1-p)/(N-1). N = 1 is rejected because the
// off-arm mass is undefined.
struct HybridizationConfig {
  double p;
  int num_arms;

  HybridizationConfig(double p_, int num_arms_) : p(p_), num_arms(num_arms_) {
    if (!(p > 0.0 && p < 1.0))
      throw std::invalid_argument("HybridizationConfig: p must lie in (0,1)");
    if (num_arms < 2)
      throw UnsupportedConfig("HybridizationConfig: need at least two arms");
  }

  double prob(int arm, int chosen_arm) const {
    return arm == chosen_arm ? p : (1.0 - p) / (num_arms - 1);
  }
};

enum class LambdaMode { practical, theory };

// Ridge regularization schedule for the main estimator.
// practical: lambda_t = d * log((t+1)^2); theory: lambda_t = d * log(4 t^2 / delta).
struct RegularizationSchedule {
  LambdaMode mode = LambdaMode::practical;
  int d = 1;
  double delta = 0.0;  // theory mode only

  static RegularizationSchedule practical(int d) {
    if (d < 1) throw std::invalid_argument("RegularizationSchedule: d must be >= 1");
    return {LambdaMode::practical, d, 0.0};
  }
  static RegularizationSchedule theory(int d, double delta) {
    if (d < 1) throw std::invalid_argument("RegularizationSchedule: d must be >= 1");
    if (!(delta > 0.0 && delta < 1.0))
      throw std::invalid_argument("RegularizationSchedule: delta must lie in (0,1)");
    return {LambdaMode::theory, d, delta};
  }
};

double lambda_value(const RegularizationSchedule& schedule, long t);

// Source of the imputation estimator fed into the pseudo-rewards.
//   practical:      (V_t + sqrt(t) I)^{-1} Z_t, straight off the running state.
//   theory:         the analyzed subsample construction with the
//                   gamma_t = 4 sqrt(2) N sqrt(|Psi_t| log(4t^2/delta))
//                   regularizer and the clipped selected-pair ridge inside.
//   selected_ridge: the clipped selected-pair ridge itself (the inner
//                   estimator of the theory construction), fed directly.
// selected_ridge is the default: the practical form is self-referential (on
// subsampled rounds it re-injects the estimator's own state for every
// unplayed arm with N times the Gram weight of fresh data), which slows or
// pins the estimation error in poorly conditioned context distributions,
// while the selected-pair ridge converges independently of the state it
// feeds.
enum class ImputationMode { practical, theory, selected_ridge };

// Which imputation vector feeds the pseudo-rewards of round t.
//   previous_round: the estimator refreshed at the end of round t-1 (default).
//   current_round:  under the practical mode, a fresh solve of
//                   (V_{t-1} + sqrt(t) I) beta = Z_{t-1}, i.e. round t's
//                   regularizer applied to the data available when the
//                   pseudo-rewards are formed. The other modes carry no
//                   per-round regularizer, so both timings coincide there.
enum class ImputationTiming { previous_round, current_round };

struct HyRanConfig {
  HybridizationConfig hybrid;
  RegularizationSchedule lambda;
  ImputationMode impute_mode = ImputationMode::selected_ridge;
  ImputationTiming impute_timing = ImputationTiming::previous_round;
  double impute_delta = 0.05;  // confidence level of the theory-mode regularizer
  // Diagnostics hook: when set, pseudo-rewards use this vector verbatim.
  std::optional<Eigen::VectorXd> impute_override = std::nullopt;
};

// Running state of the hybrid estimator.
//
// V is the identity-initialized hybrid Gram matrix: I_d plus, per round,
// either the full-context Gram sum (subsampled rounds) or the selected
// context's rank-1 term. Z is the matching moment vector. Both are
// non-decreasing in the PSD order and V stays symmetric exactly because all
// updates are sums of symmetric rank-1 terms.
//
// The sel_* accumulators back the selected-pair ridge and the dr_*
// accumulators let the theory-mode estimator be rebuilt each round from a
// common imputation vector; all are maintained in every mode so a state can
// refresh its imputation under any ImputationMode:
//   dr_mult     = sum over subsampled rounds of (sum_i x_i x_i^T - (1/p) x_a x_a^T)
//   dr_reward   = sum over subsampled rounds of (1/p) x_a y
//   ridge_reward= sum over ridge rounds of x_a y
//   sel_gram    = I + sum over all rounds of x_a x_a^T (unit-ridge Gram of selected pairs)
//   sel_moment  = sum over all rounds of x_a y
struct BanditState {
  Eigen::MatrixXd V;
  Eigen::VectorXd Z;
  long t = 0;
  long psi_count = 0;
  Eigen::VectorXd impute;  // beta_check after the most recent completed round

  Eigen::MatrixXd dr_mult;
  Eigen::VectorXd dr_reward;
  Eigen::VectorXd ridge_reward;
  Eigen::MatrixXd sel_gram;
  Eigen::VectorXd sel_moment;
  Eigen::VectorXd sel_ridge_prev;  // normalized selected-pair ridge, one round behind

  explicit BanditState(int d);
  int dim() const { return static_cast<int>(Z.size()); }
};

using PseudoRewardVector = Eigen::VectorXd;

// Greedy arm selection: smallest index attaining max_i x_i . beta_hat.
int select_arm(const ContextSet& contexts, const Eigen::VectorXd& beta_hat);

// Draws h_t after the arm decision; consumes exactly one uniform.
int sample_hybridization(int chosen_arm, const HybridizationConfig& config, RngStream& rng);

// Pseudo-reward vector for an arbitrary hybridization outcome h, given the
// reward observed for arm h. No h == chosen_arm restriction; counterfactual
// diagnostics use this directly.
Eigen::VectorXd pseudo_rewards_for(const ContextSet& contexts, int chosen_arm, int h,
                                   double observed_reward, const Eigen::VectorXd& impute,
                                   const HybridizationConfig& config);

// The in-algorithm pseudo-reward computation. Requires h == chosen_arm: only
// subsampled rounds consume pseudo-rewards, and the observed reward must
// belong to arm h.
PseudoRewardVector compute_pseudo_rewards(const ContextSet& contexts, int chosen_arm, int h,
                                          double observed_reward, const Eigen::VectorXd& impute,
                                          const HybridizationConfig& config);

// One round of the hybrid score update. On h == chosen_arm the full-context
// Gram and pseudo-reward moments are added; otherwise the selected pair's
// rank-1 terms. The imputation estimator is refreshed afterwards and the
// round counter advances.
void update_state(BanditState& state, const ContextSet& contexts, int chosen_arm, int h,
                  double observed_reward, const HyRanConfig& config);

// Solves (V + lambda_t I) beta = Z by Cholesky; never forms an inverse.
Eigen::VectorXd estimate(const BanditState& state, double lambda_t);

// Refreshes the imputation estimator for the state's current round.
// practical: (V_t + sqrt(t) I)^{-1} Z_t.
// theory: rebuilt from the subsample accumulators with regularizer
//   gamma_t = 4 sqrt(2) N sqrt(|Psi_t| log(4 t^2 / delta)),
// using the norm-clipped selected-pair ridge estimate one round behind.
// With an empty subsample the theory form degenerates; it returns zero.
const Eigen::VectorXd& update_imputation(BanditState& state, const HyRanConfig& config);

// Selected-pair ridge estimate with unit regularizer, scaled by
// 1 / max{norm, 1} so its norm never exceeds one.
Eigen::VectorXd normalized_ridge(const Eigen::MatrixXd& gram, const Eigen::VectorXd& moment);

}  // namespace hyran
