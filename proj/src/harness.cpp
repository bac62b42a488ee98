#include "hyran/harness.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>

#include "hyran/errors.hpp"

namespace hyran {

namespace {
constexpr std::uint64_t kTagContexts = 0x63747800;
constexpr std::uint64_t kTagNoise = 0x6e6f6900;
constexpr std::uint64_t kTagHybrid = 0x68796200;
constexpr std::uint64_t kTagAlgo = 0x616c6700;
constexpr std::uint64_t kTagBeta = 0x62657400;
}  // namespace

std::string algo_name(AlgoId algo) {
  switch (algo) {
    case AlgoId::hyran: return "hyran";
    case AlgoId::linucb: return "linucb";
    case AlgoId::lints: return "lints";
    case AlgoId::suplinucb: return "suplinucb";
    case AlgoId::drts: return "drts";
    case AlgoId::uniform_random: return "random";
  }
  throw InternalInvariant("algo_name: unknown id");
}

AlgoId algo_from_name(const std::string& name) {
  if (name == "hyran") return AlgoId::hyran;
  if (name == "linucb") return AlgoId::linucb;
  if (name == "lints") return AlgoId::lints;
  if (name == "suplinucb") return AlgoId::suplinucb;
  if (name == "drts") return AlgoId::drts;
  if (name == "random") return AlgoId::uniform_random;
  throw std::invalid_argument("unknown algorithm: " + name);
}

std::string hyper_name(AlgoId algo) {
  switch (algo) {
    case AlgoId::hyran: return "p";
    case AlgoId::linucb:
    case AlgoId::suplinucb: return "alpha";
    case AlgoId::lints:
    case AlgoId::drts: return "v";
    case AlgoId::uniform_random: return "none";
  }
  throw InternalInvariant("hyper_name: unknown id");
}

HyRanConfig ExperimentConfig::hyran_config() const {
  HyRanConfig cfg{HybridizationConfig(hyper, env.num_arms),
                  lambda_mode == LambdaMode::theory
                      ? RegularizationSchedule::theory(env.d, delta)
                      : RegularizationSchedule::practical(env.d),
                  impute_mode};
  cfg.impute_timing = impute_timing;
  cfg.impute_delta = delta;
  return cfg;
}

namespace {

// Uniform trajectory driver over the policies; keeps the round loop single.
struct Runner {
  virtual ~Runner() = default;
  virtual int select(const ContextSet& x, RngStream& algo_rng) = 0;
  virtual void update(const ContextSet& x, int arm, int h, double y, RngStream& algo_rng) = 0;
  virtual bool wants_hybridization() const { return false; }
  virtual void finish(RegretTrace&) {}
};

struct HyRanRunner : Runner {
  HyRanConfig cfg;
  BanditState state;
  explicit HyRanRunner(const HyRanConfig& c, int d) : cfg(c), state(d) {}
  int select(const ContextSet& x, RngStream&) override {
    const double lam = lambda_value(cfg.lambda, state.t + 1);
    return select_arm(x, estimate(state, lam));
  }
  void update(const ContextSet& x, int arm, int h, double y, RngStream&) override {
    update_state(state, x, arm, h, y, cfg);
  }
  bool wants_hybridization() const override { return true; }
  void finish(RegretTrace& trace) override {
    if (state.t >= 1)
      trace.final_estimate = estimate(state, lambda_value(cfg.lambda, state.t));
    else
      trace.final_estimate = Eigen::VectorXd::Zero(state.dim());
  }
};

struct LinUcbRunner : Runner {
  RidgeState state;
  double alpha;
  LinUcbRunner(int d, double a) : state(d), alpha(a) {}
  int select(const ContextSet& x, RngStream&) override { return linucb_select(state, x, alpha); }
  void update(const ContextSet& x, int arm, int, double y, RngStream&) override {
    ridge_update(state, x.arm(arm), y);
  }
};

struct LinTsRunner : Runner {
  RidgeState state;
  double v;
  LinTsRunner(int d, double v_) : state(d), v(v_) {}
  int select(const ContextSet& x, RngStream& rng) override {
    return lints_select(state, x, v, rng);
  }
  void update(const ContextSet& x, int arm, int, double y, RngStream&) override {
    ridge_update(state, x.arm(arm), y);
  }
};

struct SupLinUcbRunner : Runner {
  SupLinUcb policy;
  SupLinUcbRunner(int d, double alpha, long T) : policy(d, alpha, T) {}
  int select(const ContextSet& x, RngStream&) override { return policy.select(x); }
  void update(const ContextSet& x, int arm, int, double y, RngStream&) override {
    policy.update(x, arm, y);
  }
};

struct DrtsRunner : Runner {
  Drts policy;
  DrtsRunner(int d, DrtsConfig cfg) : policy(d, cfg) {}
  int select(const ContextSet& x, RngStream& rng) override { return policy.select(x, rng); }
  void update(const ContextSet& x, int arm, int, double y, RngStream& rng) override {
    policy.update(x, arm, y, rng);
  }
};

struct UniformRandomRunner : Runner {
  int select(const ContextSet& x, RngStream& rng) override {
    return static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(x.num_arms())));
  }
  void update(const ContextSet&, int, int, double, RngStream&) override {}
};

std::unique_ptr<Runner> make_runner(const ExperimentConfig& cfg) {
  const int d = cfg.env.d;
  switch (cfg.algo) {
    case AlgoId::hyran: return std::make_unique<HyRanRunner>(cfg.hyran_config(), d);
    case AlgoId::linucb: return std::make_unique<LinUcbRunner>(d, cfg.hyper);
    case AlgoId::lints: return std::make_unique<LinTsRunner>(d, cfg.hyper);
    case AlgoId::suplinucb: return std::make_unique<SupLinUcbRunner>(d, cfg.hyper, cfg.T);
    case AlgoId::drts: {
      if (!cfg.experimental_drts)
        throw UnsupportedConfig("drts is experimental; enable it explicitly to run");
      DrtsConfig dc = cfg.drts;
      dc.v = cfg.hyper;
      return std::make_unique<DrtsRunner>(d, dc);
    }
    case AlgoId::uniform_random: return std::make_unique<UniformRandomRunner>();
  }
  throw InternalInvariant("make_runner: unknown id");
}

}  // namespace

RegretTrace run_trajectory(const ExperimentConfig& config, int rep_index) {
  if (config.T < 0) throw std::invalid_argument("run_trajectory: T must be >= 0");
  if (rep_index < 0) throw std::invalid_argument("run_trajectory: rep_index must be >= 0");
  config.env.validate();

  const std::uint64_t root = derive_seed(config.master_seed,
                                         static_cast<std::uint64_t>(config.config_index),
                                         static_cast<std::uint64_t>(rep_index));
  RngStream ctx_rng(derive_seed(root, kTagContexts));
  RngStream noise_rng(derive_seed(root, kTagNoise));
  RngStream algo_rng(derive_seed(root, kTagAlgo));
  const std::uint64_t h_seed = derive_seed(root, kTagHybrid);
  RngStream h_rng(h_seed);

  EnvironmentSpec env = config.env;
  if (env.beta_star.size() == 0) {
    RngStream beta_rng(derive_seed(root, kTagBeta));
    env.beta_star = gen_beta_star(env.d, beta_rng);
  }

  RegretTrace trace;
  trace.algo = algo_name(config.algo);
  trace.hyper_name = hyper_name(config.algo);
  trace.hyper_value = config.hyper;
  trace.env = env;
  trace.seed = root;
  trace.hybridization_seed = h_seed;
  trace.rounds.reserve(static_cast<std::size_t>(config.T));

  auto runner = make_runner(config);
  std::optional<HybridizationConfig> hcfg;
  if (runner->wants_hybridization()) hcfg.emplace(config.hyper, env.num_arms);

  double cum = 0.0;
  long event = 0;
  for (long t = 1; t <= config.T; ++t) {
    const ContextSet x = gen_contexts(env, t, ctx_rng);
    const int arm = runner->select(x, algo_rng);
    const long a_event = event++;
    int h = -1;
    long h_event = -1;
    if (hcfg) {
      h = sample_hybridization(arm, *hcfg, h_rng);
      h_event = event++;
    }
    const double y = draw_reward(x.arm(arm), env.beta_star, env.noise_sigma, noise_rng);
    runner->update(x, arm, h, y, algo_rng);
    const double r = instantaneous_regret(x, env.beta_star, arm);
    cum += r;
    trace.append({t, arm, h, y, r, cum, a_event, h_event});
    if (config.retain_contexts) trace.contexts.push_back(x.matrix());
  }
  runner->finish(trace);
  return trace;
}

std::vector<double> paper_grid(AlgoId algo) {
  if (algo == AlgoId::hyran) return {0.5, 0.65, 0.8, 0.95};
  if (algo == AlgoId::uniform_random) return {0.0};
  return {0.001, 0.01, 0.1, 1.0};
}

int select_best(const std::vector<AggregateCurve>& curves) {
  if (curves.empty()) throw std::invalid_argument("select_best: no curves");
  int best = 0;
  for (int i = 1; i < static_cast<int>(curves.size()); ++i) {
    const double cur = curves[i].mean_cum_regret.empty() ? 0.0 : curves[i].mean_cum_regret.back();
    const double ref =
        curves[best].mean_cum_regret.empty() ? 0.0 : curves[best].mean_cum_regret.back();
    if (cur < ref || (cur == ref && curves[i].hyper < curves[best].hyper)) best = i;
  }
  return best;
}

AggregateResult aggregate_traces(const ExperimentConfig& base, const std::vector<double>& grid,
                                 const std::vector<std::vector<RegretTrace>>& traces) {
  AggregateResult agg;
  agg.algo = base.algo;
  agg.hyper_nm = hyper_name(base.algo);
  agg.T = base.T;
  agg.repetitions = base.repetitions;
  agg.curves.resize(grid.size());
  for (std::size_t c = 0; c < grid.size(); ++c) {
    AggregateCurve& curve = agg.curves[c];
    curve.hyper = grid[c];
    curve.mean_cum_regret.assign(static_cast<std::size_t>(base.T), 0.0);
    curve.std_cum_regret.assign(static_cast<std::size_t>(base.T), 0.0);
    const auto& reps = traces[c];
    const double n = static_cast<double>(reps.size());
    for (long t = 0; t < base.T; ++t) {
      double sum = 0.0;
      for (const auto& tr : reps) sum += tr.rounds[t].cum_regret;
      const double mean = sum / n;
      double ss = 0.0;
      for (const auto& tr : reps) {
        const double dlt = tr.rounds[t].cum_regret - mean;
        ss += dlt * dlt;
      }
      curve.mean_cum_regret[t] = mean;
      curve.std_cum_regret[t] = reps.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    }
  }
  agg.best_index = select_best(agg.curves);
  return agg;
}

GridResult run_grid(const ExperimentConfig& base, const std::vector<double>& grid) {
  if (grid.empty()) throw std::invalid_argument("run_grid: empty grid");
  if (base.repetitions < 1) throw std::invalid_argument("run_grid: need at least one repetition");
  GridResult result;
  result.traces.assign(grid.size(), std::vector<RegretTrace>(base.repetitions));
  const long total = static_cast<long>(grid.size()) * base.repetitions;
  parallel_for(total, base.threads, [&](long i) {
    const long cell = i / base.repetitions;
    const int rep = static_cast<int>(i % base.repetitions);
    ExperimentConfig cfg = base;
    cfg.hyper = grid[cell];
    cfg.config_index = cell;
    result.traces[cell][rep] = run_trajectory(cfg, rep);
  });
  result.aggregate = aggregate_traces(base, grid, result.traces);
  return result;
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void write_csv(const std::string& path, const ExperimentConfig& base,
               const std::vector<double>& grid,
               const std::vector<std::vector<RegretTrace>>& traces) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path);
  out << "algo,d,N,T,hyper_name,hyper_value,rep,t,cum_regret\n";
  const std::string prefix = algo_name(base.algo) + "," + std::to_string(base.env.d) + "," +
                             std::to_string(base.env.num_arms) + "," + std::to_string(base.T) +
                             "," + hyper_name(base.algo) + ",";
  for (std::size_t c = 0; c < grid.size(); ++c) {
    const std::string cell_prefix = prefix + format_double(grid[c]) + ",";
    for (std::size_t rep = 0; rep < traces[c].size(); ++rep) {
      for (const RoundRecord& r : traces[c][rep].rounds) {
        out << cell_prefix << rep << ',' << r.t << ',' << format_double(r.cum_regret) << '\n';
      }
    }
  }
  if (!out.good()) throw std::runtime_error("write_csv: write failed for " + path);
}

void write_trace_csv(const std::string& path, const RegretTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_trace_csv: cannot open " + path);
  out << "t,chosen_arm,h,reward,inst_regret,cum_regret\n";
  for (const RoundRecord& r : trace.rounds) {
    out << r.t << ',' << r.chosen_arm << ',';
    if (r.hybrid_arm >= 0)
      out << r.hybrid_arm;
    out << ',' << format_double(r.reward) << ',' << format_double(r.inst_regret) << ','
        << format_double(r.cum_regret) << '\n';
  }
  if (!out.good()) throw std::runtime_error("write_trace_csv: write failed for " + path);
}

void parallel_for(long n, int threads, const std::function<void(long)>& fn) {
  if (n <= 0) return;
  int workers = threads;
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  workers = static_cast<int>(std::min<long>(workers, n));
  if (workers == 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (long i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace hyran
