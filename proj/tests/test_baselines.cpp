#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "hyran/baselines.hpp"
#include "hyran/bandit.hpp"
#include "hyran/harness.hpp"
#include "oracles.hpp"

using namespace hyran;
using hyran::test::tol;

namespace {

ContextSet basis2() {
  Eigen::MatrixXd x(2, 2);
  x << 1, 0, 0, 1;
  return ContextSet(std::move(x), 1);
}

}  // namespace

TEST_CASE("linucb scores and selection") {
  SUBCASE("symmetric cold start ties to arm 0") {
    RidgeState st(2);
    CHECK(linucb_select(st, basis2(), 1.0) == 0);
  }
  SUBCASE("worked 1-d index value") {
    RidgeState st(1);
    st.A(0, 0) = 2.0;
    st.b(0) = 1.0;
    Eigen::MatrixXd x(1, 2);
    x << 1.0, 0.0;
    const auto scores = linucb_scores(st, ContextSet(std::move(x), 1), 1.0);
    CHECK(scores(0) == doctest::Approx(0.5 + std::sqrt(0.5)).epsilon(1e-12));
  }
  SUBCASE("alpha = 0 reduces to greedy ridge") {
    RngStream rng(3);
    RidgeState st(3);
    for (int k = 0; k < 20; ++k) {
      Eigen::VectorXd x(3);
      for (int j = 0; j < 3; ++j) x(j) = rng.normal() * 0.4;
      ridge_update(st, x, rng.normal());
    }
    for (int rep = 0; rep < 20; ++rep) {
      ContextSet x(test::random_contexts(3, 5, rng), 1);
      CHECK(linucb_select(st, x, 0.0) == select_arm(x, st.estimate()));
    }
  }
}

TEST_CASE("ridge state matches from-scratch recomputation") {
  RngStream rng(5);
  const int d = 4;
  RidgeState st(d);
  std::vector<Eigen::VectorXd> xs;
  std::vector<double> ys;
  for (int k = 0; k < 200; ++k) {
    Eigen::VectorXd x(d);
    for (int j = 0; j < d; ++j) x(j) = rng.normal() * 0.3;
    const double y = rng.normal();
    ridge_update(st, x, y);
    xs.push_back(x);
    ys.push_back(y);
  }
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
  for (std::size_t k = 0; k < xs.size(); ++k) {
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) a(i, j) += xs[k](i) * xs[k](j);
      b(i) += ys[k] * xs[k](i);
    }
  }
  CHECK(test::rel_frobenius(st.A, a) <= tol(1e-8));
  CHECK((st.b - b).norm() / std::max(1.0, b.norm()) <= tol(1e-8));
}

TEST_CASE("lints sampling behaviour") {
  SUBCASE("v -> 0 concentrates on the greedy arm") {
    RngStream rng(7);
    RidgeState st(2);
    ridge_update(st, Eigen::Vector2d(0.9, 0.1), 1.0);
    ridge_update(st, Eigen::Vector2d(0.1, 0.8), -0.5);
    int agree = 0;
    const int draws = 1000;
    for (int k = 0; k < draws; ++k) {
      ContextSet x(test::random_contexts(2, 4, rng), 1);
      const int greedy = select_arm(x, st.estimate());
      if (lints_select(st, x, 1e-8, rng) == greedy) ++agree;
    }
    CHECK(agree >= static_cast<int>(0.999 * draws));
  }
  SUBCASE("identity Gram: per-coordinate variance close to v^2") {
    RngStream rng(11);
    RidgeState st(3);
    const double v = 0.7;
    std::vector<std::vector<double>> draws(3);
    for (int k = 0; k < 10000; ++k) {
      const Eigen::VectorXd s = lints_sample(st, v, rng);
      for (int j = 0; j < 3; ++j) draws[j].push_back(s(j));
    }
    for (int j = 0; j < 3; ++j) {
      const double sd = test::sample_std(draws[j]);
      CHECK(std::abs(sd * sd - v * v) <= 0.1 * v * v);
    }
  }
  SUBCASE("deterministic under a fixed seed") {
    RidgeState st(2);
    RngStream a(13), b(13);
    ContextSet x = basis2();
    for (int k = 0; k < 50; ++k) CHECK(lints_select(st, x, 0.5, a) == lints_select(st, x, 0.5, b));
  }
  SUBCASE("a broken covariance surfaces as a numeric error") {
    RidgeState st(2);
    st.A << -1, 0, 0, -1;  // not positive definite
    RngStream rng(15);
    CHECK_THROWS_AS(lints_sample(st, 0.5, rng), NumericError);
  }
}

TEST_CASE("suplinucb level mechanics") {
  SUBCASE("cold start with wide alpha records at level 1") {
    SupLinUcb policy(2, 1.0, 16);
    const int arm = policy.select(basis2());
    CHECK(policy.last_level() == 1);
    CHECK(policy.level_rounds()[0].size() == 1);
    policy.update(basis2(), arm, 0.3);
  }
  SUBCASE("recorded rounds update exactly their level; exploitation updates none") {
    RngStream rng(17);
    const int d = 3, n = 5;
    const long T = 400;
    SupLinUcb policy(d, 1.0, T);
    for (long t = 1; t <= T; ++t) {
      ContextSet x(test::random_contexts(d, n, rng), t);
      const int arm = policy.select(x);
      const int recorded = policy.last_level();
      std::vector<std::size_t> counts;
      for (const auto& lv : policy.level_rounds()) counts.push_back(lv.size());
      policy.update(x, arm, rng.normal());
      if (recorded == -1) {
        // exploitation rounds must not grow any level's record
        for (std::size_t s = 0; s < counts.size(); ++s)
          CHECK(policy.level_rounds()[s].size() == counts[s]);
      }
    }
    // partition: recorded levels plus exploitation rounds cover [T] exactly once
    std::vector<int> seen(T + 1, 0);
    for (const auto& lv : policy.level_rounds())
      for (long t : lv) seen[t] += 1;
    for (long t : policy.exploitation_rounds()) seen[t] += 1;
    for (long t = 1; t <= T; ++t) CHECK(seen[t] == 1);
  }
  SUBCASE("pure-exploit rounds never touch ridge states") {
    // A tiny alpha keeps every width below 1/sqrt(T) from the start.
    SupLinUcb policy(2, 1e-6, 100);
    RngStream rng(19);
    for (long t = 1; t <= 50; ++t) {
      ContextSet x(test::random_contexts(2, 3, rng), t);
      const int arm = policy.select(x);
      CHECK(policy.last_level() == -1);
      policy.update(x, arm, rng.normal());
    }
    for (int s = 0; s < policy.num_levels(); ++s)
      CHECK(policy.level_rounds()[s].empty());
    CHECK(policy.exploitation_rounds().size() == 50);
  }
}

TEST_CASE("drts gating and degeneracy") {
  SUBCASE("running drts without the experimental flag is rejected") {
    ExperimentConfig cfg;
    cfg.algo = AlgoId::drts;
    cfg.hyper = 0.5;
    cfg.env = make_correlated_gaussian(2, 3);
    cfg.T = 5;
    CHECK_THROWS_AS(run_trajectory(cfg, 0), UnsupportedConfig);
  }
  SUBCASE("resampling disabled degenerates to lints") {
    ExperimentConfig drts_cfg;
    drts_cfg.algo = AlgoId::drts;
    drts_cfg.hyper = 0.3;
    drts_cfg.env = make_correlated_gaussian(3, 4);
    drts_cfg.T = 100;
    drts_cfg.experimental_drts = true;
    drts_cfg.drts.resample_draws = 0;
    ExperimentConfig ts_cfg = drts_cfg;
    ts_cfg.algo = AlgoId::lints;
    const RegretTrace a = run_trajectory(drts_cfg, 0);
    const RegretTrace b = run_trajectory(ts_cfg, 0);
    REQUIRE(a.rounds.size() == b.rounds.size());
    for (std::size_t k = 0; k < a.rounds.size(); ++k) {
      CHECK(a.rounds[k].chosen_arm == b.rounds[k].chosen_arm);
      CHECK(a.rounds[k].reward == b.rounds[k].reward);
    }
  }
  SUBCASE("deterministic under a fixed seed") {
    ExperimentConfig cfg;
    cfg.algo = AlgoId::drts;
    cfg.hyper = 0.5;
    cfg.env = make_correlated_gaussian(2, 4);
    cfg.T = 60;
    cfg.experimental_drts = true;
    const RegretTrace a = run_trajectory(cfg, 0);
    const RegretTrace b = run_trajectory(cfg, 0);
    for (std::size_t k = 0; k < a.rounds.size(); ++k) {
      CHECK(a.rounds[k].chosen_arm == b.rounds[k].chosen_arm);
      CHECK(a.rounds[k].cum_regret == b.rounds[k].cum_regret);
    }
  }
}
