#include "hyran/baselines.hpp"

#include <cmath>
#include <limits>

#include "hyran/errors.hpp"
#include "hyran/linalg.hpp"

namespace hyran {

RidgeState::RidgeState(int d, double regularizer_) : regularizer(regularizer_) {
  if (d < 1) throw std::invalid_argument("RidgeState: d must be >= 1");
  if (!(regularizer > 0.0)) throw std::invalid_argument("RidgeState: regularizer must be > 0");
  A = regularizer * Eigen::MatrixXd::Identity(d, d);
  b = Eigen::VectorXd::Zero(d);
}

Eigen::VectorXd RidgeState::estimate() const { return solve_spd(A, b); }

void ridge_update(RidgeState& state, const Eigen::VectorXd& x, double reward) {
  if (x.size() != state.b.size()) throw std::invalid_argument("ridge_update: dimension mismatch");
  if (!std::isfinite(reward)) throw NumericError("ridge_update: non-finite reward");
  state.A += x * x.transpose();
  state.b += reward * x;
}

Eigen::VectorXd linucb_scores(const RidgeState& state, const ContextSet& contexts, double alpha) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("linucb_scores: alpha must be >= 0");
  if (contexts.dim() != state.b.size())
    throw std::invalid_argument("linucb_scores: dimension mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(state.A);
  if (llt.info() != Eigen::Success) throw NumericError("linucb_scores: factorization failed");
  const Eigen::VectorXd beta = llt.solve(state.b);
  Eigen::VectorXd scores(contexts.num_arms());
  for (int i = 0; i < contexts.num_arms(); ++i) {
    const Eigen::VectorXd x = contexts.arm(i);
    const double width = std::sqrt(std::max(0.0, x.dot(llt.solve(x))));
    scores(i) = x.dot(beta) + alpha * width;
  }
  return scores;
}

int linucb_select(const RidgeState& state, const ContextSet& contexts, double alpha) {
  const Eigen::VectorXd scores = linucb_scores(state, contexts, alpha);
  int best = 0;
  for (int i = 1; i < contexts.num_arms(); ++i)
    if (scores(i) > scores(best)) best = i;
  return best;
}

Eigen::VectorXd lints_sample(const RidgeState& state, double v, RngStream& rng) {
  if (!(v > 0.0)) throw std::invalid_argument("lints_sample: v must be > 0");
  Eigen::LLT<Eigen::MatrixXd> llt(state.A);
  if (llt.info() != Eigen::Success)
    throw NumericError("lints_sample: covariance factorization failed");
  const int d = static_cast<int>(state.b.size());
  const Eigen::VectorXd mean = llt.solve(state.b);
  Eigen::VectorXd z(d);
  for (int j = 0; j < d; ++j) z(j) = rng.normal();
  // L^{-T} z has covariance A^{-1}.
  return mean + v * llt.matrixU().solve(z);
}

int lints_select(const RidgeState& state, const ContextSet& contexts, double v, RngStream& rng) {
  if (contexts.dim() != state.b.size())
    throw std::invalid_argument("lints_select: dimension mismatch");
  const Eigen::VectorXd sample = lints_sample(state, v, rng);
  const Eigen::VectorXd scores = contexts.matrix().transpose() * sample;
  int best = 0;
  for (int i = 1; i < contexts.num_arms(); ++i)
    if (scores(i) > scores(best)) best = i;
  return best;
}

SupLinUcb::SupLinUcb(int d, double alpha, long horizon) : alpha_(alpha), horizon_(horizon) {
  if (d < 1) throw std::invalid_argument("SupLinUcb: d must be >= 1");
  if (!(alpha >= 0.0)) throw std::invalid_argument("SupLinUcb: alpha must be >= 0");
  if (horizon < 1) throw std::invalid_argument("SupLinUcb: horizon must be >= 1");
  const int s = std::max(1, static_cast<int>(std::ceil(std::log2(static_cast<double>(horizon)))));
  levels_.assign(s, RidgeState(d));
  level_rounds_.assign(s, {});
}

int SupLinUcb::select(const ContextSet& contexts) {
  if (contexts.dim() != levels_.front().b.size())
    throw std::invalid_argument("SupLinUcb: dimension mismatch");
  ++round_;
  const int n = contexts.num_arms();
  std::vector<int> candidates(n);
  for (int i = 0; i < n; ++i) candidates[i] = i;
  const double exploit_width = 1.0 / std::sqrt(static_cast<double>(horizon_));

  for (int s = 1;; ++s) {
    if (s > num_levels()) throw InternalInvariant("SupLinUcb: level overflow");
    const RidgeState& level = levels_[s - 1];
    Eigen::LLT<Eigen::MatrixXd> llt(level.A);
    if (llt.info() != Eigen::Success) throw NumericError("SupLinUcb: factorization failed");
    const Eigen::VectorXd beta = llt.solve(level.b);

    std::vector<double> width(candidates.size()), ucb(candidates.size());
    double max_width = 0.0, best_ucb = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      const Eigen::VectorXd x = contexts.arm(candidates[k]);
      width[k] = alpha_ * std::sqrt(std::max(0.0, x.dot(llt.solve(x))));
      ucb[k] = x.dot(beta) + width[k];
      max_width = std::max(max_width, width[k]);
      best_ucb = std::max(best_ucb, ucb[k]);
    }

    if (max_width <= exploit_width) {
      // Confident enough everywhere: exploit without recording the reward.
      int best = candidates[0];
      double best_val = ucb[0];
      for (std::size_t k = 1; k < candidates.size(); ++k)
        if (ucb[k] > best_val) {
          best_val = ucb[k];
          best = candidates[k];
        }
      last_level_ = -1;
      exploitation_rounds_.push_back(round_);
      return best;
    }

    const double threshold = std::pow(2.0, -s);
    if (max_width <= threshold) {
      // Keep arms within 2^{1-s} of the best index and descend a level.
      std::vector<int> kept;
      for (std::size_t k = 0; k < candidates.size(); ++k)
        if (ucb[k] >= best_ucb - 2.0 * threshold) kept.push_back(candidates[k]);
      candidates = std::move(kept);
      continue;
    }

    // Some arm is still wide at this level: pull the widest one and record it.
    int pick = -1;
    double widest = threshold;
    for (std::size_t k = 0; k < candidates.size(); ++k)
      if (width[k] > widest) {
        widest = width[k];
        pick = candidates[k];
      }
    if (pick < 0) throw InternalInvariant("SupLinUcb: no wide arm despite max width");
    last_level_ = s;
    level_rounds_[s - 1].push_back(round_);
    return pick;
  }
}

void SupLinUcb::update(const ContextSet& contexts, int arm, double reward) {
  if (arm < 0 || arm >= contexts.num_arms())
    throw std::invalid_argument("SupLinUcb: arm out of range");
  if (last_level_ > 0) ridge_update(levels_[last_level_ - 1], contexts.arm(arm), reward);
  last_level_ = -1;
}

Drts::Drts(int d, DrtsConfig config) : state_(d), config_(config) {
  if (!(config_.v > 0.0)) throw std::invalid_argument("Drts: v must be > 0");
  if (config_.resample_draws < 0)
    throw std::invalid_argument("Drts: resample_draws must be >= 0");
}

int Drts::select(const ContextSet& contexts, RngStream& rng) {
  return lints_select(state_, contexts, config_.v, rng);
}

void Drts::update(const ContextSet& contexts, int arm, double reward, RngStream& rng) {
  if (arm < 0 || arm >= contexts.num_arms()) throw std::invalid_argument("Drts: arm out of range");
  if (config_.resample_draws == 0) {
    ridge_update(state_, contexts.arm(arm), reward);  // degenerates to LinTS
    return;
  }
  // Estimate per-arm selection probabilities by resampling the posterior,
  // with add-one smoothing so every arm keeps positive mass.
  const int n = contexts.num_arms();
  std::vector<long> counts(n, 0);
  for (int m = 0; m < config_.resample_draws; ++m)
    counts[lints_select(state_, contexts, config_.v, rng)]++;
  std::vector<double> pi(n);
  for (int i = 0; i < n; ++i)
    pi[i] = (counts[i] + 1.0) / (config_.resample_draws + static_cast<double>(n));
  if (pi[arm] < config_.prob_floor) {
    ridge_update(state_, contexts.arm(arm), reward);
    return;
  }
  const Eigen::VectorXd imputation = state_.estimate();
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd x = contexts.arm(i);
    const double imputed = x.dot(imputation);
    const double y_tilde = (i == arm)
                               ? (1.0 - 1.0 / pi[i]) * imputed + reward / pi[i]
                               : imputed;
    state_.A += x * x.transpose();
    state_.b += y_tilde * x;
  }
}

}  // namespace hyran
