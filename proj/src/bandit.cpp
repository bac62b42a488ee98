#include "hyran/bandit.hpp"

#include <cmath>

#include "hyran/linalg.hpp"

namespace hyran {

double lambda_value(const RegularizationSchedule& schedule, long t) {
  if (t < 1) throw std::invalid_argument("lambda_value: t must be >= 1");
  if (schedule.d < 1) throw std::invalid_argument("lambda_value: d must be >= 1");
  const double td = static_cast<double>(t);
  if (schedule.mode == LambdaMode::theory) {
    if (!(schedule.delta > 0.0 && schedule.delta < 1.0))
      throw std::invalid_argument("lambda_value: delta must lie in (0,1)");
    return schedule.d * std::log(4.0 * td * td / schedule.delta);
  }
  return schedule.d * 2.0 * std::log(td + 1.0);  // d * log((t+1)^2)
}

BanditState::BanditState(int d) {
  if (d < 1) throw std::invalid_argument("BanditState: d must be >= 1");
  V = Eigen::MatrixXd::Identity(d, d);
  Z = Eigen::VectorXd::Zero(d);
  impute = Eigen::VectorXd::Zero(d);
  dr_mult = Eigen::MatrixXd::Zero(d, d);
  dr_reward = Eigen::VectorXd::Zero(d);
  ridge_reward = Eigen::VectorXd::Zero(d);
  sel_gram = Eigen::MatrixXd::Identity(d, d);
  sel_moment = Eigen::VectorXd::Zero(d);
  sel_ridge_prev = Eigen::VectorXd::Zero(d);
}

int select_arm(const ContextSet& contexts, const Eigen::VectorXd& beta_hat) {
  if (beta_hat.size() != contexts.dim())
    throw std::invalid_argument("select_arm: estimator dimension mismatch");
  if (!beta_hat.allFinite()) throw NumericError("select_arm: non-finite estimator");
  const Eigen::VectorXd scores = contexts.matrix().transpose() * beta_hat;
  int best = 0;
  for (int i = 1; i < contexts.num_arms(); ++i) {
    if (scores(i) > scores(best)) best = i;  // ties keep the lowest index
  }
  return best;
}

int sample_hybridization(int chosen_arm, const HybridizationConfig& config, RngStream& rng) {
  if (config.num_arms < 2)
    throw UnsupportedConfig("sample_hybridization: need at least two arms");
  if (chosen_arm < 0 || chosen_arm >= config.num_arms)
    throw std::invalid_argument("sample_hybridization: chosen arm out of range");
  const double u = rng.uniform01();
  if (u < config.p) return chosen_arm;
  const double rest = (1.0 - config.p) / (config.num_arms - 1);
  int k = static_cast<int>((u - config.p) / rest);
  if (k > config.num_arms - 2) k = config.num_arms - 2;
  return k < chosen_arm ? k : k + 1;  // enumerate the arms != chosen in index order
}

Eigen::VectorXd pseudo_rewards_for(const ContextSet& contexts, int chosen_arm, int h,
                                   double observed_reward, const Eigen::VectorXd& impute,
                                   const HybridizationConfig& config) {
  const int n = contexts.num_arms();
  if (n != config.num_arms)
    throw std::invalid_argument("pseudo_rewards_for: arm count mismatch");
  if (chosen_arm < 0 || chosen_arm >= n || h < 0 || h >= n)
    throw std::invalid_argument("pseudo_rewards_for: arm index out of range");
  if (impute.size() != contexts.dim())
    throw std::invalid_argument("pseudo_rewards_for: imputation dimension mismatch");
  if (!std::isfinite(observed_reward))
    throw NumericError("pseudo_rewards_for: non-finite reward");

  Eigen::VectorXd values(n);
  for (int i = 0; i < n; ++i) {
    const double imputed = contexts.matrix().col(i).dot(impute);
    if (i == h) {
      const double inv_pi = 1.0 / config.prob(i, chosen_arm);
      values(i) = (1.0 - inv_pi) * imputed + inv_pi * observed_reward;
    } else {
      values(i) = imputed;  // indicator term vanishes
    }
  }
  return values;
}

PseudoRewardVector compute_pseudo_rewards(const ContextSet& contexts, int chosen_arm, int h,
                                          double observed_reward, const Eigen::VectorXd& impute,
                                          const HybridizationConfig& config) {
  if (h != chosen_arm)
    throw ContractViolation(
        "compute_pseudo_rewards: pseudo-rewards are only defined on rounds with h == chosen arm");
  return pseudo_rewards_for(contexts, chosen_arm, h, observed_reward, impute, config);
}

namespace {

// Per-arm rank-1 accumulation keeps V exactly symmetric.
void add_full_gram(Eigen::MatrixXd& V, const Eigen::MatrixXd& x) {
  for (Eigen::Index i = 0; i < x.cols(); ++i) V += x.col(i) * x.col(i).transpose();
}

}  // namespace

void update_state(BanditState& state, const ContextSet& contexts, int chosen_arm, int h,
                  double observed_reward, const HyRanConfig& config) {
  const int d = state.dim();
  const int n = contexts.num_arms();
  if (contexts.dim() != d) throw std::invalid_argument("update_state: dimension mismatch");
  if (n != config.hybrid.num_arms)
    throw std::invalid_argument("update_state: arm count mismatch");
  if (chosen_arm < 0 || chosen_arm >= n || h < 0 || h >= n)
    throw std::invalid_argument("update_state: arm index out of range");
  if (!std::isfinite(observed_reward))
    throw NumericError("update_state: non-finite reward");
  if (contexts.round() != state.t + 1)
    throw ContractViolation("update_state: context round does not follow the state's round");

  const long t = state.t + 1;

  // Imputation vector consumed by this round's pseudo-rewards.
  Eigen::VectorXd impute_now;
  if (config.impute_override) {
    if (config.impute_override->size() != d)
      throw std::invalid_argument("update_state: impute_override dimension mismatch");
    impute_now = *config.impute_override;
  } else if (config.impute_timing == ImputationTiming::current_round &&
             config.impute_mode == ImputationMode::practical) {
    Eigen::MatrixXd A = state.V;
    A.diagonal().array() += std::sqrt(static_cast<double>(t));
    impute_now = solve_spd(A, state.Z);
  } else {
    impute_now = state.impute;
  }

  // Freeze the selected-pair ridge before this round's pair is appended; the
  // theory-mode refresh rebuilds its moment vector around it.
  state.sel_ridge_prev = normalized_ridge(state.sel_gram, state.sel_moment);

  // The auxiliary accumulators are cheap and kept in every mode, so a state
  // can refresh its imputation under any ImputationMode regardless of the
  // mode it was advanced with.
  const Eigen::VectorXd xa = contexts.arm(chosen_arm);
  if (h == chosen_arm) {
    const Eigen::VectorXd ytil =
        compute_pseudo_rewards(contexts, chosen_arm, h, observed_reward, impute_now, config.hybrid);
    add_full_gram(state.V, contexts.matrix());
    state.Z += contexts.matrix() * ytil;
    state.psi_count += 1;
    add_full_gram(state.dr_mult, contexts.matrix());
    const double inv_p = 1.0 / config.hybrid.p;
    state.dr_mult -= inv_p * (xa * xa.transpose());
    state.dr_reward += inv_p * observed_reward * xa;
  } else {
    state.V += xa * xa.transpose();
    state.Z += observed_reward * xa;
    state.ridge_reward += observed_reward * xa;
  }
  state.sel_gram += xa * xa.transpose();
  state.sel_moment += observed_reward * xa;

  state.t = t;
  update_imputation(state, config);
}

Eigen::VectorXd estimate(const BanditState& state, double lambda_t) {
  if (!(lambda_t > 0.0)) throw std::invalid_argument("estimate: lambda must be positive");
  if (!state.V.allFinite() || !state.Z.allFinite())
    throw NumericError("estimate: non-finite bandit state");
  Eigen::MatrixXd A = state.V;
  A.diagonal().array() += lambda_t;
  Eigen::VectorXd beta = solve_spd(A, state.Z);
  const double zn = state.Z.norm();
  double resid = (A * beta - state.Z).norm();
  if (resid > 1e-8 * std::max(zn, 1e-300)) {
    beta += solve_spd(A, state.Z - A * beta);  // one refinement step
    resid = (A * beta - state.Z).norm();
    if (resid > 1e-8 * std::max(zn, 1e-300))
      throw NumericError("estimate: residual exceeds tolerance");
  }
  return beta;
}

Eigen::VectorXd normalized_ridge(const Eigen::MatrixXd& gram, const Eigen::VectorXd& moment) {
  Eigen::VectorXd r = solve_spd(gram, moment);
  const double n = r.norm();
  if (n > 1.0) r /= n;  // divide by max{norm, 1}
  return r;
}

const Eigen::VectorXd& update_imputation(BanditState& state, const HyRanConfig& config) {
  if (state.t < 1)
    throw ContractViolation("update_imputation: state has not completed a round");
  const double td = static_cast<double>(state.t);
  if (config.impute_mode == ImputationMode::practical) {
    Eigen::MatrixXd A = state.V;
    A.diagonal().array() += std::sqrt(td);
    state.impute = solve_spd(A, state.Z);
    return state.impute;
  }
  if (config.impute_mode == ImputationMode::selected_ridge) {
    state.impute = normalized_ridge(state.sel_gram, state.sel_moment);
    return state.impute;
  }
  if (!(config.impute_delta > 0.0 && config.impute_delta < 1.0))
    throw std::invalid_argument("update_imputation: delta must lie in (0,1)");
  if (state.psi_count == 0) {
    // gamma_t = 0 with an empty subsample sum; documented zero fallback.
    state.impute.setZero();
    return state.impute;
  }
  const double gamma = 4.0 * std::sqrt(2.0) * config.hybrid.num_arms *
                       std::sqrt(static_cast<double>(state.psi_count) *
                                 std::log(4.0 * td * td / config.impute_delta));
  Eigen::MatrixXd W = state.V;  // (V - I) + gamma I
  W.diagonal().array() += gamma - 1.0;
  const Eigen::VectorXd rhs =
      state.dr_mult * state.sel_ridge_prev + state.dr_reward + state.ridge_reward;
  state.impute = solve_spd(W, rhs);
  return state.impute;
}

}  // namespace hyran
