#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "hyran/environment.hpp"
#include "oracles.hpp"

using namespace hyran;
using hyran::test::tol;

TEST_CASE("paper mean pattern skips zero and ends at +/- N") {
  const Eigen::VectorXd mu10 = paper_mean_vector(10);
  const double expected10[] = {-10, -8, -6, -4, -2, 2, 4, 6, 8, 10};
  for (int i = 0; i < 10; ++i) CHECK(mu10(i) == expected10[i]);
  const Eigen::VectorXd mu20 = paper_mean_vector(20);
  CHECK(mu20(0) == -20);
  CHECK(mu20(9) == -2);
  CHECK(mu20(10) == 2);
  CHECK(mu20(19) == 20);
}

TEST_CASE("beta star sampling") {
  RngStream rng(1);
  SUBCASE("d = 1 stays inside (-1, 1)") {
    for (int k = 0; k < 200; ++k) {
      const Eigen::VectorXd b = gen_beta_star(1, rng);
      CHECK(b(0) > -1.0);
      CHECK(b(0) < 1.0);
    }
  }
  SUBCASE("norm never exceeds one") {
    for (int d : {2, 5, 17}) {
      for (int k = 0; k < 100; ++k) CHECK(gen_beta_star(d, rng).norm() <= 1.0 + 1e-12);
    }
  }
  SUBCASE("coordinates are centered") {
    const int n = 100000;
    double sum = 0.0, ss = 0.0;
    for (int k = 0; k < n; ++k) {
      const double v = gen_beta_star(4, rng)(0);
      sum += v;
      ss += v * v;
    }
    const double mean = sum / n;
    const double sd = std::sqrt(ss / n - mean * mean);
    CHECK(std::abs(mean) <= 4 * sd / std::sqrt(n));
  }
}

TEST_CASE("correlated-Gaussian context generation") {
  const EnvironmentSpec spec = make_correlated_gaussian(5, 10);

  SUBCASE("norms respect the scaling rule") {
    RngStream rng(2);
    for (long t = 1; t <= 200; ++t) {
      const ContextSet x = gen_contexts(spec, t, rng);
      for (int i = 0; i < 10; ++i) CHECK(x.matrix().col(i).norm() <= 1.0 + 1e-12);
    }
  }
  SUBCASE("pre-truncation last coordinate copies an earlier one exactly") {
    RngStream rng(3);
    for (int k = 0; k < 100; ++k) {
      std::vector<int> dup;
      const Eigen::MatrixXd raw = gen_contexts_raw(spec, rng, &dup);
      REQUIRE(dup.size() == 10);
      for (int i = 0; i < 10; ++i) CHECK(raw(4, i) == raw(dup[i], i));
    }
  }
  SUBCASE("cross-arm correlation of a raw coordinate is about one half") {
    RngStream rng(4);
    const int n = 10000;
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (int k = 0; k < n; ++k) {
      const Eigen::MatrixXd raw = gen_contexts_raw(spec, rng);
      const double a = raw(0, 0), b = raw(0, 1);
      sx += a;
      sy += b;
      sxx += a * a;
      syy += b * b;
      sxy += a * b;
    }
    const double cov = sxy / n - (sx / n) * (sy / n);
    const double va = sxx / n - (sx / n) * (sx / n);
    const double vb = syy / n - (sy / n) * (sy / n);
    CHECK(std::abs(cov / std::sqrt(va * vb) - 0.5) <= 0.05);
  }
  SUBCASE("d < 2 is unsupported") {
    EnvironmentSpec bad = spec;
    bad.d = 1;
    RngStream rng(5);
    CHECK_THROWS_AS(gen_contexts(bad, 1, rng), UnsupportedConfig);
  }
}

TEST_CASE("context draws are independent across rounds") {
  const EnvironmentSpec spec = make_correlated_gaussian(3, 4);
  RngStream rng(6);
  // lag-1 autocorrelation of a fixed statistic (first arm's first coordinate)
  const int n = 10000;
  std::vector<double> stat;
  stat.reserve(n);
  for (long t = 1; t <= n; ++t) stat.push_back(gen_contexts(spec, t, rng).matrix()(0, 0));
  double sx = 0, sxx = 0, sxy = 0;
  for (int k = 0; k + 1 < n; ++k) {
    sx += stat[k];
    sxx += stat[k] * stat[k];
    sxy += stat[k] * stat[k + 1];
  }
  const double m = sx / (n - 1);
  const double var = sxx / (n - 1) - m * m;
  const double lag1 = (sxy / (n - 1) - m * m) / var;
  CHECK(std::abs(lag1) <= 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("empirical phi^2 is positive and seed-stable") {
  const EnvironmentSpec spec = make_correlated_gaussian(5, 10);
  RngStream r1(7), r2(8);
  const double a = estimate_phi_sq(spec, 10000, r1);
  const double b = estimate_phi_sq(spec, 10000, r2);
  CHECK(a > 0.0);
  CHECK(b > 0.0);
  CHECK(std::abs(a - b) <= 0.10 * std::max(a, b));
}

TEST_CASE("hard instance construction") {
  SUBCASE("worked gap value") {
    const EnvironmentSpec spec = gen_hard_instance(4, 4, 1024, 0);
    CHECK(spec.delta_gap == doctest::Approx(0.03125).epsilon(1e-14));
  }
  SUBCASE("optimal arm earns the gap, others zero") {
    const EnvironmentSpec spec = gen_hard_instance(3, 6, 256, 1);
    RngStream rng(9);
    const ContextSet x = gen_contexts(spec, 1, rng);
    const Eigen::VectorXd means = x.matrix().transpose() * spec.beta_star;
    for (int i = 0; i < 6; ++i) {
      if (i == 1)
        CHECK(means(i) == doctest::Approx(spec.delta_gap));
      else
        CHECK(means(i) == 0.0);
    }
  }
  SUBCASE("hypothesis checks") {
    CHECK_THROWS_AS(gen_hard_instance(1, 4, 100, 0), std::invalid_argument);
    CHECK_THROWS_AS(gen_hard_instance(5, 4, 100, 0), std::invalid_argument);
    CHECK_THROWS_AS(gen_hard_instance(4, 4, 0, 0), std::invalid_argument);
    // T = 1 >= d/4 for d = 2: boundary accepted
    CHECK_NOTHROW(gen_hard_instance(2, 2, 1, 0));
  }
}

TEST_CASE("reward draws") {
  RngStream rng(10);
  const Eigen::VectorXd x = (Eigen::VectorXd(2) << 0.6, -0.2).finished();
  const Eigen::VectorXd beta = (Eigen::VectorXd(2) << 0.5, 0.5).finished();
  SUBCASE("sigma 0 is deterministic") {
    for (int k = 0; k < 10; ++k)
      CHECK(draw_reward(x, beta, 0.0, rng) == doctest::Approx(x.dot(beta)).epsilon(1e-15));
  }
  SUBCASE("mean and variance match") {
    const double sigma = 1.3;
    const int n = 100000;
    double sum = 0, ss = 0;
    for (int k = 0; k < n; ++k) {
      const double y = draw_reward(x, beta, sigma, rng);
      sum += y;
      ss += y * y;
    }
    const double mean = sum / n;
    CHECK(std::abs(mean - x.dot(beta)) <= 4 * sigma / std::sqrt(n));
    const double var = ss / n - mean * mean;
    CHECK(std::abs(var - sigma * sigma) <= 0.05 * sigma * sigma);
  }
}

TEST_CASE("trace append enforces the regret invariants") {
  RegretTrace trace;
  trace.append({1, 0, -1, 0.5, 0.2, 0.2, 0, -1});
  RoundRecord bad{2, 0, -1, 0.5, -0.5, 0.1, 1, -1};
  CHECK_THROWS_AS(trace.append(bad), InternalInvariant);
  RoundRecord decreasing{2, 0, -1, 0.5, 0.0, 0.1, 1, -1};  // cum regret went down
  CHECK_THROWS_AS(trace.append(decreasing), InternalInvariant);
  trace.append({2, 0, -1, 0.5, 0.0, 0.2, 1, -1});
  CHECK(trace.final_cum_regret() == 0.2);
}

TEST_CASE("instantaneous regret") {
  Eigen::MatrixXd m(2, 2);
  m << 1, 0, 0, 1;
  const ContextSet x(std::move(m), 1);
  const Eigen::VectorXd beta = (Eigen::VectorXd(2) << 0.9, 0.1).finished();
  CHECK(instantaneous_regret(x, beta, 0) == 0.0);
  CHECK(instantaneous_regret(x, beta, 1) == doctest::Approx(0.8).epsilon(1e-14));
  RngStream rng(11);
  const EnvironmentSpec spec = make_correlated_gaussian(3, 5);
  for (long t = 1; t <= 100; ++t) {
    const ContextSet c = gen_contexts(spec, t, rng);
    Eigen::VectorXd b = gen_beta_star(3, rng);
    for (int i = 0; i < 5; ++i) CHECK(instantaneous_regret(c, b, i) >= 0.0);
  }
}
