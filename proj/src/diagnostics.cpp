#include "hyran/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "hyran/errors.hpp"
#include "hyran/linalg.hpp"

namespace hyran::diag {

namespace {
constexpr std::uint64_t kTagPhi = 0x70686900;
constexpr std::uint64_t kTagMc = 0x6d630000;
constexpr std::uint64_t kTagCloud = 0x636c6400;

// Exploration horizon with a guard for degenerate context distributions
// (phi^2 ~ 0 happens for real: at d = 2 the duplicate-coordinate
// construction makes every context collinear). Returns +inf in that case.
double horizon_or_inf(const BoundParams& bounds, long T, int N) {
  if (bounds.phi_sq_hat <= 1e-12) return std::numeric_limits<double>::infinity();
  return bounds.exploration_horizon(T, N);
}

long resolve_burn_in(double horizon, long configured, long T, std::vector<std::string>* notes) {
  if (configured > 0) {
    if (horizon > static_cast<double>(T))
      notes->push_back("theoretical exploration horizon " + format_double(horizon) +
                       " exceeds T=" + std::to_string(T) +
                       "; auditing past surrogate burn-in t>=" + std::to_string(configured));
    return configured;
  }
  if (horizon > static_cast<double>(T)) {
    notes->push_back("theoretical exploration horizon " + format_double(horizon) + " exceeds T=" +
                     std::to_string(T) + " and no surrogate burn-in was given; " +
                     "no rounds audited, the bound condition is vacuous at this scale");
    return T + 1;
  }
  return static_cast<long>(std::ceil(horizon));
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    const double lo = *std::max_element(v.begin(), v.begin() + mid);
    m = 0.5 * (m + lo);
  }
  return m;
}

// Max-residual of an estimation error over one context set.
double max_residual(const Eigen::MatrixXd& contexts, const Eigen::VectorXd& err) {
  return (contexts.transpose() * err).cwiseAbs().maxCoeff();
}

// Rebuilds the bandit state round by round from a retained trajectory log,
// invoking visit after every update.
void replay_log(const RegretTrace& log, const HyRanConfig& cfg,
                const std::function<void(const BanditState&)>& visit) {
  if (log.contexts.size() != log.rounds.size())
    throw InsufficientData("replay: trajectory log lacks retained contexts");
  BanditState state(log.env.d);
  for (std::size_t k = 0; k < log.rounds.size(); ++k) {
    const RoundRecord& r = log.rounds[k];
    if (r.hybrid_arm < 0)
      throw InsufficientData("replay: log has no hybridization draws");
    ContextSet x(log.contexts[k], r.t);
    update_state(state, x, r.chosen_arm, r.hybrid_arm, r.reward, cfg);
    visit(state);
  }
}

}  // namespace

double BoundParams::D_p_sigma() const { return 1.0 + 4.0 * std::sqrt(2.0) / (1.0 - p) + sigma / p; }

double BoundParams::C_p_sigma() const {
  return 8.0 * (2.0 - p) / ((1.0 - p) * std::sqrt(p)) +
         std::sqrt(2.0) * C_placeholder * sigma / (p * p) + 8.0 / std::sqrt(p);
}

double BoundParams::exploration_horizon(long T, int N) const {
  if (!(p > 0.0 && p < 1.0) || !(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("BoundParams: p and delta must lie in (0,1)");
  if (!(phi_sq_hat > 0.0))
    throw std::invalid_argument("BoundParams: phi_sq_hat must be positive");
  if (T < 1 || N < 2) throw std::invalid_argument("BoundParams: need T >= 1 and N >= 2");
  const double a = 8.0 / p * std::log(static_cast<double>(T) / delta);
  const double b = C_p_sigma() * N * static_cast<double>(N) / (phi_sq_hat * phi_sq_hat) *
                   std::log(2.0 * static_cast<double>(T) / delta);
  return std::max(1.0, std::max(a, b));
}

double rate_standard_error(double rate, long n) {
  if (n < 1) throw std::invalid_argument("rate_standard_error: n must be >= 1");
  return std::sqrt(std::max(0.0, rate * (1.0 - rate)) / static_cast<double>(n));
}

void finalize_rate_check(DiagnosticReport& report, double allowed_rate) {
  report.allowed_rate = allowed_rate;
  report.violation_rate =
      report.trials > 0 ? static_cast<double>(report.violations) / report.trials : 0.0;
  const double se_hat = rate_standard_error(report.violation_rate, std::max<long>(report.trials, 1));
  report.ci_low = std::max(0.0, report.violation_rate - 1.96 * se_hat);
  report.ci_high = std::min(1.0, report.violation_rate + 1.96 * se_hat);
  const double se_bound = rate_standard_error(allowed_rate, std::max<long>(report.trials, 1));
  report.pass = report.violation_rate <= allowed_rate + 3.0 * se_bound;
  report.metrics["allowed_rate_3se"] = allowed_rate + 3.0 * se_bound;
}

std::string DiagnosticReport::summary() const {
  std::ostringstream os;
  os << "[" << check << "] " << (pass ? "PASS" : "FAIL") << "\n";
  os << "  trials=" << trials << " violations=" << violations << " rate="
     << format_double(violation_rate) << " allowed=" << format_double(allowed_rate)
     << " ci95=[" << format_double(ci_low) << "," << format_double(ci_high) << "]\n";
  for (const auto& [k, v] : metrics) os << "  " << k << "=" << format_double(v) << "\n";
  for (const auto& n : notes) os << "  note: " << n << "\n";
  return os.str();
}

std::vector<std::string> DiagnosticReport::write_csv(const std::string& dir) const {
  std::vector<std::string> paths;
  const std::string base = dir.empty() ? std::string(".") : dir;
  {
    const std::string path = base + "/diag_" + check + "_summary.csv";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("DiagnosticReport: cannot open " + path);
    out << "field,value\n";
    out << "check," << check << "\n";
    out << "trials," << trials << "\n";
    out << "violations," << violations << "\n";
    out << "violation_rate," << format_double(violation_rate) << "\n";
    out << "allowed_rate," << format_double(allowed_rate) << "\n";
    out << "ci_low," << format_double(ci_low) << "\n";
    out << "ci_high," << format_double(ci_high) << "\n";
    out << "pass," << (pass ? 1 : 0) << "\n";
    for (const auto& [k, v] : metrics) out << k << "," << format_double(v) << "\n";
    paths.push_back(path);
  }
  for (const auto& s : series) {
    const std::string path = base + "/diag_" + check + "_" + s.name + ".csv";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("DiagnosticReport: cannot open " + path);
    for (std::size_t i = 0; i < s.columns.size(); ++i)
      out << (i ? "," : "") << s.columns[i];
    out << "\n";
    for (const auto& row : s.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
      out << "\n";
    }
    paths.push_back(path);
  }
  return paths;
}

DiagnosticReport check_psi_size(double p, double epsilon, long T, double delta, int trials,
                                std::uint64_t seed, int threads) {
  if (!(p > 0 && p < 1) || !(epsilon > 0 && epsilon < 1) || !(delta > 0 && delta < 1))
    throw std::invalid_argument("check_psi_size: p, epsilon, delta must lie in (0,1)");
  if (T < 1 || trials < 1) throw std::invalid_argument("check_psi_size: need T, trials >= 1");

  const double threshold_t =
      2.0 / (p * (1.0 - epsilon) * (1.0 - epsilon)) * std::log(static_cast<double>(T) / delta);

  std::vector<char> violated(trials, 0);
  std::vector<double> ratio(trials, 0.0);
  std::vector<std::vector<long>> counts(trials);
  parallel_for(trials, threads, [&](long i) {
    RngStream rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    long cnt = 0;
    bool bad = false;
    std::vector<long> cs(static_cast<std::size_t>(T));
    for (long t = 1; t <= T; ++t) {
      cnt += rng.uniform01() < p ? 1 : 0;
      cs[static_cast<std::size_t>(t - 1)] = cnt;
      if (static_cast<double>(t) >= threshold_t && static_cast<double>(cnt) < epsilon * p * t)
        bad = true;
    }
    violated[i] = bad ? 1 : 0;
    ratio[i] = static_cast<double>(cnt) / static_cast<double>(T);
    counts[i] = std::move(cs);
  });

  DiagnosticReport report;
  report.check = "psi_size";
  report.trials = trials;
  for (char v : violated) report.violations += v;
  finalize_rate_check(report, delta);

  double ratio_sum = 0.0;
  long within = 0;
  const double band = 4.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(T));
  for (double r : ratio) {
    ratio_sum += r;
    if (std::abs(r - p) <= band) ++within;
  }
  report.metrics["threshold_t"] = threshold_t;
  report.metrics["mean_psi_T_over_T"] = ratio_sum / trials;
  report.metrics["ratio_band_4se"] = band;
  report.metrics["frac_ratio_within_band"] = static_cast<double>(within) / trials;

  DiagnosticSeries s;
  s.name = "mean_size_vs_bound";
  s.columns = {"t", "mean_psi", "bound_eps_p_t"};
  for (long t = 1; t <= T; ++t) {
    long sum = 0;
    for (int i = 0; i < trials; ++i) sum += counts[i][static_cast<std::size_t>(t - 1)];
    s.rows.push_back({static_cast<double>(t), static_cast<double>(sum) / trials,
                      epsilon * p * static_cast<double>(t)});
  }
  report.series.push_back(std::move(s));
  return report;
}

DiagnosticReport check_self_normalized(const SelfNormalizedParams& P) {
  if (P.trials < 1) throw std::invalid_argument("check_self_normalized: trials must be >= 1");

  ExperimentConfig cfg;
  cfg.algo = AlgoId::hyran;
  cfg.hyper = P.p;
  cfg.env = make_correlated_gaussian(P.d, P.N, P.sigma);
  cfg.T = P.T;
  cfg.repetitions = P.trials;
  cfg.master_seed = P.seed;
  cfg.retain_contexts = true;
  cfg.lambda_mode = LambdaMode::theory;
  cfg.impute_mode = ImputationMode::theory;
  cfg.delta = P.delta;

  BoundParams bounds;
  bounds.p = P.p;
  bounds.sigma = P.sigma;
  bounds.delta = P.delta;
  {
    RngStream phi_rng(derive_seed(P.seed, kTagPhi));
    bounds.phi_sq_hat = estimate_phi_sq(cfg.env, 2000, phi_rng);
  }
  DiagnosticReport report;
  report.check = "self_normalized";
  const double horizon = horizon_or_inf(bounds, P.T, P.N);
  const long burn_in = resolve_burn_in(horizon, P.burn_in, P.T, &report.notes);

  const double err_coef = 4.0 * std::sqrt(2.0) / (1.0 - P.p) + P.sigma / P.p;
  const RegularizationSchedule schedule = RegularizationSchedule::theory(P.d, P.delta);

  struct TrialOut {
    bool violated = false;
    long audited = 0;
    long bad_rounds = 0;
    std::vector<double> ratios;
  };
  std::vector<TrialOut> outs(P.trials);

  parallel_for(P.trials, P.threads, [&](long trial) {
    const RegretTrace trace = run_trajectory(cfg, static_cast<int>(trial));
    const HyRanConfig hc = cfg.hyran_config();
    const Eigen::VectorXd& beta_star = trace.env.beta_star;
    TrialOut out;
    replay_log(trace, hc, [&](const BanditState& s) {
      const long t = s.t;
      if (t < burn_in) return;
      const double lam = lambda_value(schedule, t);
      const Eigen::VectorXd err = estimate(s, lam) - beta_star;
      Eigen::MatrixXd vn = s.V;  // hybrid Gram + lambda_t I
      vn.diagonal().array() += lam - 1.0;
      const double lhs = std::sqrt(std::max(0.0, err.dot(vn * err)));
      const double rhs =
          std::sqrt(lam) + err_coef * std::sqrt(P.d * std::log(4.0 * static_cast<double>(t) *
                                                               static_cast<double>(t) / P.delta));
      out.audited += 1;
      out.ratios.push_back(lhs / rhs);
      if (lhs > rhs) {
        out.bad_rounds += 1;
        out.violated = true;
      }
    });
    outs[trial] = std::move(out);
  });

  report.trials = P.trials;
  std::vector<double> all_ratios;
  long audited = 0;
  double max_ratio = 0.0;
  for (const auto& out : outs) {
    report.violations += out.violated ? 1 : 0;
    audited += out.audited;
    for (double r : out.ratios) {
      all_ratios.push_back(r);
      max_ratio = std::max(max_ratio, r);
    }
  }
  finalize_rate_check(report, std::min(1.0, 6.0 * P.delta));
  report.metrics["audited_rounds"] = static_cast<double>(audited);
  report.metrics["median_ratio"] = median_of(all_ratios);
  report.metrics["max_ratio"] = max_ratio;
  report.metrics["phi_sq_hat"] = bounds.phi_sq_hat;
  report.metrics["C_placeholder"] = bounds.C_placeholder;
  report.metrics["exploration_horizon"] = horizon;
  report.metrics["burn_in_used"] = static_cast<double>(burn_in);

  DiagnosticSeries s;
  s.name = "ratio_trial0";
  s.columns = {"t", "ratio"};
  for (std::size_t i = 0; i < outs[0].ratios.size(); ++i)
    s.rows.push_back({static_cast<double>(burn_in + static_cast<long>(i)), outs[0].ratios[i]});
  report.series.push_back(std::move(s));
  return report;
}

DiagnosticReport check_regret_decomposition(const RegretDecompParams& P) {
  if (P.trajectories < 1 || P.mc_contexts < 2 || P.stride < 1)
    throw std::invalid_argument("check_regret_decomposition: bad parameters");

  ExperimentConfig cfg;
  cfg.algo = AlgoId::hyran;
  cfg.hyper = P.p;
  cfg.env = make_correlated_gaussian(P.d, P.N, P.sigma);
  cfg.T = P.T;
  cfg.master_seed = P.seed;
  cfg.retain_contexts = true;

  const RegularizationSchedule schedule = RegularizationSchedule::practical(P.d);

  struct TrialOut {
    long eq10_audits = 0, eq10_violations = 0;
    long cs_audits = 0, cs_violations = 0;
    double worst_eq10_margin = std::numeric_limits<double>::infinity();
    double worst_cs_slack = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> rows;  // t, regret_next, rhs, cs_lhs, cs_rhs
  };
  std::vector<TrialOut> outs(P.trajectories);

  parallel_for(P.trajectories, P.threads, [&](long trial) {
    const RegretTrace trace = run_trajectory(cfg, static_cast<int>(trial));
    const HyRanConfig hc = cfg.hyran_config();
    const Eigen::VectorXd& beta_star = trace.env.beta_star;
    RngStream mc_rng(derive_seed(P.seed, static_cast<std::uint64_t>(trial), kTagMc));
    std::vector<const Eigen::MatrixXd*> psi_ctx;
    TrialOut out;
    long k = -1;
    replay_log(trace, hc, [&](const BanditState& s) {
      ++k;
      const RoundRecord& rec = trace.rounds[static_cast<std::size_t>(k)];
      if (rec.hybrid_arm == rec.chosen_arm)
        psi_ctx.push_back(&trace.contexts[static_cast<std::size_t>(k)]);
      const long t = s.t;
      if (s.psi_count < 1) return;

      const double lam = lambda_value(schedule, t);
      const Eigen::VectorXd err = estimate(s, lam) - beta_star;
      Eigen::MatrixXd vn = s.V;
      vn.diagonal().array() += lam - 1.0;
      const double sn = std::sqrt(std::max(0.0, err.dot(vn * err)));

      double sum_psi = 0.0;
      for (const auto* x : psi_ctx) sum_psi += max_residual(*x, err);

      // Inner Cauchy-Schwarz step, deterministic at every round.
      const double cs_rhs = std::sqrt(static_cast<double>(s.psi_count)) * sn;
      out.cs_audits += 1;
      out.worst_cs_slack = std::min(out.worst_cs_slack, cs_rhs - sum_psi);
      if (sum_psi > cs_rhs + 1e-9) out.cs_violations += 1;

      // Full decomposition at the audit stride, while a next round exists.
      if (t % P.stride != 0 || t >= static_cast<long>(trace.rounds.size())) return;
      const double regret_next = trace.rounds[static_cast<std::size_t>(t)].inst_regret;
      const double delta_next = max_residual(trace.contexts[static_cast<std::size_t>(t)], err);

      double mc_sum = 0.0, mc_ss = 0.0;
      for (int m = 0; m < P.mc_contexts; ++m) {
        const ContextSet fresh = gen_contexts(trace.env, t, mc_rng);
        const double v = max_residual(fresh.matrix(), err);
        mc_sum += v;
        mc_ss += v * v;
      }
      const double mc_mean = mc_sum / P.mc_contexts;
      const double mc_var = std::max(0.0, (mc_ss - P.mc_contexts * mc_mean * mc_mean) /
                                              (P.mc_contexts - 1.0));
      const double mc_se = std::sqrt(mc_var / P.mc_contexts);

      const double avg_psi = sum_psi / static_cast<double>(s.psi_count);
      const double term1 = 2.0 * (delta_next - mc_mean);
      const double term2 = 2.0 * (mc_mean - avg_psi);
      const double term3 = 2.0 / std::sqrt(static_cast<double>(s.psi_count)) * sn;
      const double rhs = term1 + term2 + term3 + 4.0 * mc_se;
      out.eq10_audits += 1;
      out.worst_eq10_margin = std::min(out.worst_eq10_margin, rhs - regret_next);
      if (regret_next > rhs) out.eq10_violations += 1;
      if (trial == 0)
        out.rows.push_back({static_cast<double>(t), regret_next, rhs, sum_psi, cs_rhs});
    });
    outs[trial] = std::move(out);
  });

  DiagnosticReport report;
  report.check = "regret_decomposition";
  report.trials = P.trajectories;
  long cs_viol = 0, eq10_audits = 0, cs_audits = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  double worst_cs = std::numeric_limits<double>::infinity();
  for (const auto& out : outs) {
    report.violations += out.eq10_violations > 0 ? 1 : 0;
    cs_viol += out.cs_violations;
    eq10_audits += out.eq10_audits;
    cs_audits += out.cs_audits;
    worst_margin = std::min(worst_margin, out.worst_eq10_margin);
    worst_cs = std::min(worst_cs, out.worst_cs_slack);
  }
  finalize_rate_check(report, 0.0);
  report.pass = report.violations == 0 && cs_viol == 0;
  report.metrics["eq10_audited_rounds"] = static_cast<double>(eq10_audits);
  report.metrics["cs_audited_rounds"] = static_cast<double>(cs_audits);
  report.metrics["cs_violations"] = static_cast<double>(cs_viol);
  report.metrics["worst_eq10_margin"] = worst_margin;
  report.metrics["worst_cs_slack"] = worst_cs;

  DiagnosticSeries s;
  s.name = "audit_trial0";
  s.columns = {"t", "regret_next", "decomposition_rhs", "cs_lhs", "cs_rhs"};
  s.rows = outs[0].rows;
  report.series.push_back(std::move(s));
  return report;
}

DiagnosticReport check_imputation_error(const ImputationErrorParams& P) {
  if (P.trials < 1) throw std::invalid_argument("check_imputation_error: trials must be >= 1");

  ExperimentConfig cfg;
  cfg.algo = AlgoId::hyran;
  cfg.hyper = P.p;
  cfg.env = make_correlated_gaussian(P.d, P.N, P.sigma);
  cfg.T = P.T;
  cfg.master_seed = P.seed;
  cfg.retain_contexts = true;
  cfg.impute_mode = ImputationMode::theory;
  cfg.delta = P.delta;

  BoundParams bounds;
  bounds.p = P.p;
  bounds.sigma = P.sigma;
  bounds.delta = P.delta;
  {
    RngStream phi_rng(derive_seed(P.seed, kTagPhi));
    bounds.phi_sq_hat = estimate_phi_sq(cfg.env, 2000, phi_rng);
  }
  DiagnosticReport report;
  report.check = "imputation_error";
  const double horizon = horizon_or_inf(bounds, P.T, P.N);
  const long burn_in = resolve_burn_in(horizon, P.burn_in, P.T, &report.notes);

  struct TrialOut {
    double slope = 0.0;
    bool bound_violated = false;
    double final_err = 0.0;
    std::vector<double> errs;
  };
  std::vector<TrialOut> outs(P.trials);

  parallel_for(P.trials, P.threads, [&](long trial) {
    const RegretTrace trace = run_trajectory(cfg, static_cast<int>(trial));
    const HyRanConfig hc = cfg.hyran_config();
    const Eigen::VectorXd& beta_star = trace.env.beta_star;
    TrialOut out;
    out.errs.reserve(static_cast<std::size_t>(P.T));
    replay_log(trace, hc, [&](const BanditState& s) {
      const double err = (s.impute - beta_star).norm();
      out.errs.push_back(err);
      if (s.t >= burn_in && err > 1.0 / P.N) out.bound_violated = true;
    });
    // Least-squares slope of log err against log t over positive entries.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    long n = 0;
    for (std::size_t k = 0; k < out.errs.size(); ++k) {
      if (out.errs[k] <= 0.0) continue;
      const double lx = std::log(static_cast<double>(k + 1));
      const double ly = std::log(out.errs[k]);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++n;
    }
    out.slope = n >= 2 ? (n * sxy - sx * sy) / std::max(1e-300, n * sxx - sx * sx) : 0.0;
    out.final_err = out.errs.empty() ? 0.0 : out.errs.back();
    outs[trial] = std::move(out);
  });

  report.trials = P.trials;
  long negative_slopes = 0;
  double slope_sum = 0.0, final_err_sum = 0.0;
  for (const auto& out : outs) {
    report.violations += out.bound_violated ? 1 : 0;
    negative_slopes += out.slope < 0.0 ? 1 : 0;
    slope_sum += out.slope;
    final_err_sum += out.final_err;
  }
  finalize_rate_check(report, P.delta);
  const bool pass_bound = report.pass;
  const long needed =
      static_cast<long>(std::ceil(P.slope_pass_fraction * P.trials - 1e-9));
  const bool pass_slope = negative_slopes >= needed;
  report.pass = pass_bound && pass_slope;
  report.metrics["negative_slopes"] = static_cast<double>(negative_slopes);
  report.metrics["required_negative_slopes"] = static_cast<double>(needed);
  report.metrics["mean_slope"] = slope_sum / P.trials;
  report.metrics["mean_final_error"] = final_err_sum / P.trials;
  report.metrics["one_over_N"] = 1.0 / P.N;
  report.metrics["phi_sq_hat"] = bounds.phi_sq_hat;
  report.metrics["C_placeholder"] = bounds.C_placeholder;
  report.metrics["exploration_horizon"] = horizon;
  report.metrics["burn_in_used"] = static_cast<double>(burn_in);

  DiagnosticSeries s;
  s.name = "error_trial0";
  s.columns = {"t", "error", "one_over_N"};
  for (std::size_t k = 0; k < outs[0].errs.size(); ++k)
    s.rows.push_back({static_cast<double>(k + 1), outs[0].errs[k], 1.0 / P.N});
  report.series.push_back(std::move(s));
  return report;
}

DiagnosticReport check_lower_bound(AlgoId algo, double hyper, int d, int N, long T,
                                   int runs_per_instance, std::uint64_t seed, int threads) {
  if (runs_per_instance < 2)
    throw std::invalid_argument("check_lower_bound: need at least two runs per instance");

  std::vector<std::vector<double>> finals(d, std::vector<double>(runs_per_instance, 0.0));
  parallel_for(static_cast<long>(d) * runs_per_instance, threads, [&](long i) {
    const int instance = static_cast<int>(i / runs_per_instance);
    const int run = static_cast<int>(i % runs_per_instance);
    ExperimentConfig cfg;
    cfg.algo = algo;
    cfg.hyper = hyper;
    cfg.env = gen_hard_instance(d, N, T, instance);
    cfg.T = T;
    cfg.master_seed = seed;
    cfg.config_index = instance;
    finals[instance][run] = run_trajectory(cfg, run).final_cum_regret();
  });

  double overall_mean = 0.0, var_of_mean = 0.0;
  DiagnosticReport report;
  report.check = "lower_bound";
  DiagnosticSeries s;
  s.name = "final_regret";
  s.columns = {"instance", "run", "cum_regret"};
  for (int i = 0; i < d; ++i) {
    double m = 0.0;
    for (double v : finals[i]) m += v;
    m /= runs_per_instance;
    double ss = 0.0;
    for (double v : finals[i]) ss += (v - m) * (v - m);
    const double var = ss / (runs_per_instance - 1.0);
    overall_mean += m / d;
    var_of_mean += var / runs_per_instance / (static_cast<double>(d) * d);
    report.metrics["instance_mean_" + std::to_string(i)] = m;
    for (int r = 0; r < runs_per_instance; ++r)
      s.rows.push_back({static_cast<double>(i), static_cast<double>(r), finals[i][r]});
  }
  const double se = std::sqrt(var_of_mean);
  const double threshold = 0.125 * std::sqrt(static_cast<double>(d) * static_cast<double>(T));

  report.trials = static_cast<long>(d) * runs_per_instance;
  report.pass = overall_mean >= threshold - 2.0 * se;
  report.violations = report.pass ? 0 : 1;
  report.violation_rate = report.pass ? 0.0 : 1.0;
  report.allowed_rate = 0.0;
  report.metrics["instance_averaged_mean"] = overall_mean;
  report.metrics["threshold"] = threshold;
  report.metrics["standard_error"] = se;
  report.metrics["delta_gap"] = 0.5 * std::sqrt(static_cast<double>(d) / static_cast<double>(T));
  report.series.push_back(std::move(s));
  return report;
}

Eigen::VectorXd replay_with_h_seed(const RegretTrace& log, const HyRanConfig& config,
                                   std::uint64_t h_seed) {
  if (log.contexts.size() != log.rounds.size())
    throw InsufficientData("replay_with_h_seed: trajectory log lacks retained contexts");
  BanditState state(log.env.d);
  RngStream h_rng(h_seed);
  for (std::size_t k = 0; k < log.rounds.size(); ++k) {
    const RoundRecord& r = log.rounds[k];
    ContextSet x(log.contexts[k], r.t);
    const int h = sample_hybridization(r.chosen_arm, config.hybrid, h_rng);
    update_state(state, x, r.chosen_arm, h, r.reward, config);
  }
  if (state.t < 1) return Eigen::VectorXd::Zero(log.env.d);
  return estimate(state, lambda_value(config.lambda, state.t));
}

std::vector<Eigen::VectorXd> estimator_cloud(const RegretTrace& log, const HyRanConfig& config,
                                             int M, std::uint64_t seed, int threads) {
  if (M < 1) throw std::invalid_argument("estimator_cloud: M must be >= 1");
  if (log.contexts.size() != log.rounds.size())
    throw InsufficientData("estimator_cloud: trajectory log lacks retained contexts");
  std::vector<Eigen::VectorXd> cloud(M);
  parallel_for(M, threads, [&](long m) {
    cloud[m] = replay_with_h_seed(log, config,
                                  derive_seed(seed, kTagCloud, static_cast<std::uint64_t>(m)));
  });
  return cloud;
}

void write_cloud_scatter(const std::vector<Eigen::VectorXd>& cloud, const std::string& dir,
                         const std::string& stem) {
  if (cloud.empty()) throw std::invalid_argument("write_cloud_scatter: empty cloud");
  const int d = static_cast<int>(cloud.front().size());
  const std::string base = dir.empty() ? std::string(".") : dir;
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      const std::string path =
          base + "/" + stem + "_c" + std::to_string(i) + "_c" + std::to_string(j) + ".csv";
      std::ofstream out(path, std::ios::binary);
      if (!out) throw std::runtime_error("write_cloud_scatter: cannot open " + path);
      out << "x,y\n";
      for (const auto& v : cloud) out << format_double(v(i)) << ',' << format_double(v(j)) << '\n';
    }
  }
}

}  // namespace hyran::diag
