#include "hyran/environment.hpp"

#include <cmath>

#include "hyran/errors.hpp"

namespace hyran {

void EnvironmentSpec::validate() const {
  if (d < 1 || num_arms < 2)
    throw std::invalid_argument("EnvironmentSpec: need d >= 1 and N >= 2");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
    throw std::invalid_argument("EnvironmentSpec: sigma must be >= 0");
  if (beta_star.size() != 0) {
    if (beta_star.size() != d)
      throw std::invalid_argument("EnvironmentSpec: beta_star dimension mismatch");
    if (beta_star.norm() > 1.0 + 1e-9)
      throw std::invalid_argument("EnvironmentSpec: beta_star norm exceeds 1");
  }
  if (kind == EnvKind::correlated_gaussian) {
    if (d < 2)
      throw UnsupportedConfig("EnvironmentSpec: duplicate-column construction needs d >= 2");
    if (mean_vector.size() != num_arms)
      throw std::invalid_argument("EnvironmentSpec: mean vector must have one entry per arm");
    // Constant-correlation matrix with unit diagonal is positive definite on [0,1).
    if (!(cross_corr >= 0.0 && cross_corr < 1.0))
      throw std::invalid_argument("EnvironmentSpec: cross correlation must lie in [0,1)");
  } else {
    if (d < 2 || d > num_arms)
      throw std::invalid_argument("EnvironmentSpec: hard instance needs 2 <= d <= N");
    if (!(delta_gap > 0.0))
      throw std::invalid_argument("EnvironmentSpec: hard instance needs a positive gap");
  }
}

Eigen::VectorXd paper_mean_vector(int N) {
  if (N < 2) throw std::invalid_argument("paper_mean_vector: need N >= 2");
  Eigen::VectorXd mu(N);
  for (int i = 0; i < N; ++i) {
    int v = -N + 2 * i;
    if (v >= 0) v += 2;  // skip zero so the pattern ends at +N
    mu(i) = v;
  }
  return mu;
}

EnvironmentSpec make_correlated_gaussian(int d, int N, double sigma) {
  EnvironmentSpec spec;
  spec.d = d;
  spec.num_arms = N;
  spec.kind = EnvKind::correlated_gaussian;
  spec.mean_vector = paper_mean_vector(N);
  spec.cross_corr = 0.5;
  spec.noise_sigma = sigma;
  spec.validate();
  return spec;
}

EnvironmentSpec gen_hard_instance(int d, int N, long T, int instance_coord) {
  if (!(2 <= d && d <= N))
    throw std::invalid_argument("gen_hard_instance: need 2 <= d <= N");
  if (T < 1 || static_cast<double>(T) < d / 4.0)
    throw std::invalid_argument("gen_hard_instance: need T >= d/4");
  if (instance_coord < 0 || instance_coord >= d)
    throw std::invalid_argument("gen_hard_instance: instance coordinate out of range");
  EnvironmentSpec spec;
  spec.d = d;
  spec.num_arms = N;
  spec.kind = EnvKind::hard_instance;
  spec.noise_sigma = 1.0;
  spec.delta_gap = 0.5 * std::sqrt(static_cast<double>(d) / static_cast<double>(T));
  spec.beta_star = Eigen::VectorXd::Zero(d);
  spec.beta_star(instance_coord) = spec.delta_gap;
  spec.validate();
  return spec;
}

Eigen::VectorXd gen_beta_star(int d, RngStream& rng) {
  if (d < 1) throw std::invalid_argument("gen_beta_star: d must be >= 1");
  const double half_width = 1.0 / std::sqrt(static_cast<double>(d));
  Eigen::VectorXd beta(d);
  for (int j = 0; j < d; ++j) beta(j) = (2.0 * rng.uniform01() - 1.0) * half_width;
  return beta;
}

Eigen::MatrixXd gen_contexts_raw(const EnvironmentSpec& spec, RngStream& rng,
                                 std::vector<int>* dup_index) {
  spec.validate();
  if (spec.kind != EnvKind::correlated_gaussian)
    throw UnsupportedConfig("gen_contexts_raw: only the correlated-Gaussian kind is sampled");
  const int d = spec.d, N = spec.num_arms;
  Eigen::MatrixXd x(d, N);
  // Shared-factor decomposition of the constant-correlation covariance:
  // x_i = mu_i + sqrt(1-c) z_i + sqrt(c) z0 gives unit variance and
  // cross-arm correlation c.
  const double own_w = std::sqrt(1.0 - spec.cross_corr);
  const double shared_w = std::sqrt(spec.cross_corr);
  for (int j = 0; j < d - 1; ++j) {
    const double z0 = rng.normal();
    for (int i = 0; i < N; ++i)
      x(j, i) = spec.mean_vector(i) + own_w * rng.normal() + shared_w * z0;
  }
  for (int i = 0; i < N; ++i) {
    const int j = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(d - 1)));
    if (dup_index) dup_index->push_back(j);
    x(d - 1, i) = x(j, i);
  }
  return x;
}

ContextSet gen_contexts(const EnvironmentSpec& spec, long round, RngStream& rng) {
  spec.validate();
  if (spec.kind == EnvKind::hard_instance) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(spec.d, spec.num_arms);
    for (int i = 0; i < spec.d; ++i) x(i, i) = 1.0;  // basis arms, zero padding
    return ContextSet(std::move(x), round);
  }
  Eigen::MatrixXd x = gen_contexts_raw(spec, rng);
  // Truncate onto the unit ball with one common scale per round. Per-vector
  // normalization would put every arm on the unit sphere and erase the
  // between-arm magnitude structure the mean pattern creates.
  double max_norm = 0.0;
  for (int i = 0; i < spec.num_arms; ++i) max_norm = std::max(max_norm, x.col(i).norm());
  if (max_norm > 1.0) x /= max_norm;
  return ContextSet(std::move(x), round);
}

double draw_reward(const Eigen::VectorXd& x, const Eigen::VectorXd& beta_star, double sigma,
                   RngStream& rng) {
  if (x.size() != beta_star.size())
    throw std::invalid_argument("draw_reward: dimension mismatch");
  if (!(sigma >= 0.0)) throw std::invalid_argument("draw_reward: sigma must be >= 0");
  return x.dot(beta_star) + sigma * rng.normal();
}

double instantaneous_regret(const ContextSet& contexts, const Eigen::VectorXd& beta_star,
                            int chosen_arm) {
  if (beta_star.size() != contexts.dim())
    throw std::invalid_argument("instantaneous_regret: dimension mismatch");
  if (chosen_arm < 0 || chosen_arm >= contexts.num_arms())
    throw std::invalid_argument("instantaneous_regret: arm out of range");
  const Eigen::VectorXd mean = contexts.matrix().transpose() * beta_star;
  return mean.maxCoeff() - mean(chosen_arm);
}

double estimate_phi_sq(const EnvironmentSpec& spec, long rounds, RngStream& rng) {
  if (rounds < 1) throw std::invalid_argument("estimate_phi_sq: need at least one round");
  Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(spec.d, spec.d);
  for (long r = 1; r <= rounds; ++r) {
    const ContextSet x = gen_contexts(spec, r, rng);
    for (int i = 0; i < spec.num_arms; ++i)
      avg += x.matrix().col(i) * x.matrix().col(i).transpose();
  }
  avg /= static_cast<double>(rounds) * spec.num_arms;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(avg);
  // the average of outer products is PSD; clip eigensolver noise
  return std::max(0.0, eig.eigenvalues().minCoeff());
}

void RegretTrace::append(const RoundRecord& r) {
  if (r.inst_regret < -1e-12)
    throw InternalInvariant("RegretTrace: negative instantaneous regret");
  if (!rounds.empty() && r.cum_regret < rounds.back().cum_regret - 1e-12)
    throw InternalInvariant("RegretTrace: cumulative regret decreased");
  rounds.push_back(r);
}

}  // namespace hyran
