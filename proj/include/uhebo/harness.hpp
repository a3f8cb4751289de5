#ifndef UHEBO_HARNESS_HPP
#define UHEBO_HARNESS_HPP

#include <atomic>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "uhebo/benchmarks.hpp"
#include "uhebo/strategies.hpp"
#include "uhebo/trace.hpp"

namespace uhebo {

struct ExperimentConfig {
  std::string objective;
  std::vector<std::string> strategies;
  int budget = 100;
  int repeats = 20;
  std::uint64_t base_seed = 0;
  int init_points = 0;          // 0 -> 3 * dim
  double mt_factor = 2.0;
  double ucb_multiplier = 1.96;
  double noise_std = -1.0;      // negative -> objective default
  int mse_grid = 0;             // 0 -> skip the GP-fit metric
  std::string out_dir = "results";
  int threads = 1;
  bool record_wall_time = false;
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{}) throw ConfigError("bad numeric field in CSV: " + s);
  return v;
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace detail

inline nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["objective"] = cfg.objective;
  j["strategies"] = cfg.strategies;
  j["budget"] = cfg.budget;
  j["repeats"] = cfg.repeats;
  j["seed"] = cfg.base_seed;
  j["init_points"] = cfg.init_points;
  j["mt_factor"] = cfg.mt_factor;
  j["ucb_multiplier"] = cfg.ucb_multiplier;
  j["noise_std"] = cfg.noise_std;
  j["mse_grid"] = cfg.mse_grid;
  j["out_dir"] = cfg.out_dir;
  j["threads"] = cfg.threads;
  j["record_wall_time"] = cfg.record_wall_time;
  return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  static const std::vector<std::string> known = {
      "objective",      "strategies", "budget",   "repeats", "seed",
      "init_points",    "mt_factor",  "ucb_multiplier", "noise_std", "mse_grid",
      "out_dir",        "threads",    "record_wall_time"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw ConfigError("unknown config key: " + it.key());
  }
  if (j.contains("objective")) cfg.objective = j.at("objective").get<std::string>();
  if (j.contains("strategies")) cfg.strategies = j.at("strategies").get<std::vector<std::string>>();
  if (j.contains("budget")) cfg.budget = j.at("budget").get<int>();
  if (j.contains("repeats")) cfg.repeats = j.at("repeats").get<int>();
  if (j.contains("seed")) cfg.base_seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("init_points")) cfg.init_points = j.at("init_points").get<int>();
  if (j.contains("mt_factor")) cfg.mt_factor = j.at("mt_factor").get<double>();
  if (j.contains("ucb_multiplier")) cfg.ucb_multiplier = j.at("ucb_multiplier").get<double>();
  if (j.contains("noise_std")) cfg.noise_std = j.at("noise_std").get<double>();
  if (j.contains("mse_grid")) cfg.mse_grid = j.at("mse_grid").get<int>();
  if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
  if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
  if (j.contains("record_wall_time")) cfg.record_wall_time = j.at("record_wall_time").get<bool>();
  return cfg;
}

/// Hash of the result-relevant config fields (excludes out_dir and threads,
/// which cannot change file contents).
inline std::string config_hash(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j = config_to_json(cfg);
  j.erase("out_dir");
  j.erase("threads");
  std::ostringstream hex;
  hex << std::hex << detail::fnv1a(j.dump());
  return hex.str();
}

/// Simple-regret series f(x*) - best_so_far(t), computed from noise-free
/// objective values at the sampled points.
inline std::vector<double> simple_regret(const RunTrace& trace, const Objective& obj) {
  if (!obj.known_optimum) throw InvalidState("simple_regret: objective has no known optimum");
  std::vector<double> series;
  series.reserve(trace.records.size());
  double best = -std::numeric_limits<double>::infinity();
  for (const TraceRecord& rec : trace.records) {
    best = std::max(best, obj.eval(rec.x));
    series.push_back(obj.known_optimum->value - best);
  }
  return series;
}

namespace detail {

/// Deterministic evaluation grid: full factorial for d <= 2, Latin hypercube
/// (seeded from the grid size) for higher dimensions.
inline std::vector<Eigen::VectorXd> mse_grid_points(const Bounds& bounds, int grid_size) {
  const int d = bounds.dim();
  std::vector<Eigen::VectorXd> pts;
  if (d <= 2) {
    const int n = static_cast<int>(std::ceil(std::pow(static_cast<double>(grid_size), 1.0 / d)));
    if (d == 1) {
      pts.reserve(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        Eigen::VectorXd x(1);
        x[0] = bounds.lo[0] + bounds.span(0) * static_cast<double>(i) / static_cast<double>(n - 1);
        pts.push_back(std::move(x));
      }
    } else {
      pts.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          Eigen::VectorXd x(2);
          x[0] = bounds.lo[0] + bounds.span(0) * static_cast<double>(i) / static_cast<double>(n - 1);
          x[1] = bounds.lo[1] + bounds.span(1) * static_cast<double>(j) / static_cast<double>(n - 1);
          pts.push_back(std::move(x));
        }
    }
  } else {
    Rng rng(0x6d73655f67726964ull ^ static_cast<std::uint64_t>(grid_size));
    std::vector<std::vector<int>> perms(static_cast<std::size_t>(d));
    for (int h = 0; h < d; ++h) {
      std::vector<int>& p = perms[static_cast<std::size_t>(h)];
      p.resize(static_cast<std::size_t>(grid_size));
      for (int i = 0; i < grid_size; ++i) p[static_cast<std::size_t>(i)] = i;
      for (int i = grid_size - 1; i > 0; --i)
        std::swap(p[static_cast<std::size_t>(i)],
                  p[static_cast<std::size_t>(rng.uniform01() * (i + 1))]);
    }
    pts.reserve(static_cast<std::size_t>(grid_size));
    for (int i = 0; i < grid_size; ++i) {
      Eigen::VectorXd x(d);
      for (int h = 0; h < d; ++h) {
        const double u = (perms[static_cast<std::size_t>(h)][static_cast<std::size_t>(i)] + 0.5) /
                         static_cast<double>(grid_size);
        x[h] = bounds.lo[h] + bounds.span(h) * u;
      }
      pts.push_back(std::move(x));
    }
  }
  return pts;
}

}  // namespace detail

/// Mean squared error between the GP predictive mean and the noise-free
/// objective over a deterministic evaluation grid.
inline double surrogate_mse(const GpPosterior& gp, const Objective& obj, int grid_size) {
  if (grid_size < 100) throw InvalidInput("surrogate_mse: grid_size must be >= 100");
  const std::vector<Eigen::VectorXd> grid = detail::mse_grid_points(obj.bounds, grid_size);
  double acc = 0.0;
  for (const Eigen::VectorXd& x : grid) {
    const double mu = gp.data.empty() ? 0.0 : kernel_cross(gp.data.points, x, gp.theta).dot(gp.alpha);
    const double diff = mu - obj.eval(x);
    acc += diff * diff;
  }
  return acc / static_cast<double>(grid.size());
}

struct StrategySummary {
  std::vector<double> final_regrets;
  std::vector<double> mses;
  double regret_mean = 0.0;
  double regret_se = 0.0;
  std::optional<double> mse_mean;
  std::optional<double> mse_se;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::string hash;
  std::vector<RunTrace> traces;                    // ordered by run id
  std::map<std::string, StrategySummary> summary;  // keyed by strategy name
};

namespace detail {

inline std::pair<double, double> mean_se(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  return {mean, sd / std::sqrt(n)};
}

inline std::string csv_cell_opt(const std::optional<double>& v) {
  return v ? fmt_double(*v) : std::string();
}

}  // namespace detail

/// Writes all traces as one CSV. Rows with t <= 0 are the initial design;
/// rows with t = 1..T are the strategy's iterations.
inline void write_traces_csv(const std::string& path, const std::vector<RunTrace>& traces,
                             const std::string& hash, int dim) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << "# config_hash " << hash << "\n";
  out << "run_id,strategy,objective,seed,t";
  for (int h = 0; h < dim; ++h) out << ",x" << h;
  out << ",y,best_so_far,arm,scaled_reward";
  for (int h = 0; h < dim; ++h) out << ",ls" << h;
  out << ",sigf2,noise2,wall_ms\n";
  for (std::size_t run = 0; run < traces.size(); ++run) {
    const RunTrace& tr = traces[run];
    auto row_prefix = [&](int t) {
      out << run << ',' << tr.strategy << ',' << tr.objective << ',' << tr.seed << ',' << t;
    };
    auto put_x = [&](const Eigen::VectorXd& x) {
      for (int h = 0; h < dim; ++h) out << ',' << detail::fmt_double(x[h]);
    };
    double init_best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < tr.init_size; ++i) {
      init_best = std::max(init_best, tr.data.values[i]);
      row_prefix(static_cast<int>(i) - static_cast<int>(tr.init_size) + 1);
      put_x(tr.data.points[i]);
      out << ',' << detail::fmt_double(tr.data.values[i]) << ',' << detail::fmt_double(init_best)
          << ",,";
      for (int h = 0; h < dim + 2; ++h) out << ',';
      out << ',' << detail::fmt_double(0.0) << "\n";
    }
    for (const TraceRecord& rec : tr.records) {
      row_prefix(rec.t);
      put_x(rec.x);
      out << ',' << detail::fmt_double(rec.y) << ',' << detail::fmt_double(rec.best_so_far);
      out << ',' << (rec.arm ? std::to_string(*rec.arm) : std::string());
      out << ',' << detail::csv_cell_opt(rec.scaled_reward);
      if (rec.theta_hat) {
        for (int h = 0; h < dim; ++h) out << ',' << detail::fmt_double(rec.theta_hat->lengthscales[h]);
        out << ',' << detail::fmt_double(rec.theta_hat->signal_variance) << ','
            << detail::fmt_double(rec.theta_hat->noise_variance);
      } else {
        for (int h = 0; h < dim + 2; ++h) out << ',';
      }
      out << ',' << detail::fmt_double(rec.wall_ms) << "\n";
    }
  }
}

/// Parses a traces CSV back into RunTrace values (exact float round-trip).
inline std::vector<RunTrace> parse_traces_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# config_hash ", 0) != 0)
    throw ConfigError("traces CSV missing the config hash line");
  const std::string hash = line.substr(14);
  if (!std::getline(in, line)) throw ConfigError("traces CSV missing the header");
  int dim = 0;
  {
    std::stringstream hs(line);
    std::string col;
    while (std::getline(hs, col, ','))
      if (col.size() > 1 && col[0] == 'x') ++dim;
  }
  std::vector<RunTrace> traces;
  long current_run = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() < static_cast<std::size_t>(12 + 2 * dim))
      cells.resize(static_cast<std::size_t>(12 + 2 * dim), std::string());
    const long run = std::stol(cells[0]);
    if (run != current_run) {
      current_run = run;
      traces.emplace_back();
      traces.back().strategy = cells[1];
      traces.back().objective = cells[2];
      traces.back().seed = std::stoull(cells[3]);
      traces.back().config_hash = hash;
      traces.back().data = Dataset(make_objective(cells[2]).bounds);
    }
    RunTrace& tr = traces.back();
    const int t = std::stoi(cells[4]);
    Eigen::VectorXd x(dim);
    for (int h = 0; h < dim; ++h) x[h] = detail::parse_double(cells[static_cast<std::size_t>(5 + h)]);
    const double y = detail::parse_double(cells[static_cast<std::size_t>(5 + dim)]);
    tr.data.add(x, y);
    if (t <= 0) {
      tr.init_size += 1;
      continue;
    }
    TraceRecord rec;
    rec.t = t;
    rec.x = std::move(x);
    rec.y = y;
    rec.best_so_far = detail::parse_double(cells[static_cast<std::size_t>(6 + dim)]);
    const std::string& arm = cells[static_cast<std::size_t>(7 + dim)];
    if (!arm.empty()) rec.arm = std::stoi(arm);
    const std::string& sr = cells[static_cast<std::size_t>(8 + dim)];
    if (!sr.empty()) rec.scaled_reward = detail::parse_double(sr);
    const std::string& ls0 = cells[static_cast<std::size_t>(9 + dim)];
    if (!ls0.empty()) {
      Eigen::VectorXd lsv(dim);
      for (int h = 0; h < dim; ++h)
        lsv[h] = detail::parse_double(cells[static_cast<std::size_t>(9 + dim + h)]);
      rec.theta_hat = Hyperparams(lsv, detail::parse_double(cells[static_cast<std::size_t>(9 + 2 * dim)]),
                                  detail::parse_double(cells[static_cast<std::size_t>(10 + 2 * dim)]));
    }
    rec.wall_ms = detail::parse_double(cells[static_cast<std::size_t>(11 + 2 * dim)]);
    tr.records.push_back(std::move(rec));
    tr.budget = std::max(tr.budget, t);
  }
  return traces;
}

namespace detail {

inline constexpr std::uint64_t kMseFitSalt = 0x5e0d6aa1b1e5ull;

/// GP used for the fit-quality metric: the strategy's last estimate on its
/// final dataset, or a fresh MAP fit for strategies that never estimate.
inline GpPosterior mse_posterior(const RunTrace& trace, const EstimatorConfig& est) {
  std::optional<Hyperparams> theta = trace.last_theta();
  if (!theta) {
    Rng rng(trace.seed ^ kMseFitSalt);
    theta = estimate_map(trace.data, est, rng);
  }
  return fit_posterior(trace.data, *theta);
}

}  // namespace detail

/// Runs every (strategy x seed) cell, optionally across threads, aggregates
/// final regret and GP-fit MSE, and writes traces.csv plus summary.json.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  // configuration errors must fire before any run starts
  Objective obj = make_objective(cfg.objective);
  std::vector<StrategyKind> kinds;
  for (const std::string& s : cfg.strategies) kinds.push_back(parse_strategy(s));
  if (kinds.empty()) throw ConfigError("no strategies configured");
  if (cfg.repeats < 1) throw ConfigError("repeats must be >= 1");
  if (cfg.budget < 1) throw ConfigError("budget must be >= 1");
  for (StrategyKind k : kinds)
    if ((k == StrategyKind::kUhe || k == StrategyKind::kRandomPlusExp3) && cfg.budget < 2)
      throw ConfigError("bandit strategies need budget >= 2");
  if (cfg.noise_std >= 0.0) obj.noise_std = cfg.noise_std;
  if (cfg.mse_grid != 0 && cfg.mse_grid < 100) throw ConfigError("mse_grid must be 0 or >= 100");

  const std::string hash = config_hash(cfg);
  namespace fs = std::filesystem;
  const fs::path dir(cfg.out_dir);
  const fs::path csv_path = dir / "traces.csv";
  const fs::path json_path = dir / "summary.json";
  if (fs::exists(csv_path)) {
    std::ifstream in(csv_path);
    std::string first;
    std::getline(in, first);
    if (first.rfind("# config_hash ", 0) == 0 && first.substr(14) != hash)
      throw ConfigError("out_dir holds results for a different config (hash " + first.substr(14) +
                        " vs " + hash + "); refusing to overwrite");
  }
  fs::create_directories(dir);

  StrategyConfig scfg;
  scfg.init_points = cfg.init_points;
  scfg.estimator.mt_factor = cfg.mt_factor;
  scfg.acquisition.ucb_multiplier = cfg.ucb_multiplier;
  scfg.record_wall_time = cfg.record_wall_time;

  struct Cell {
    StrategyKind kind;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (StrategyKind k : kinds)
    for (int r = 0; r < cfg.repeats; ++r)
      cells.push_back({k, cfg.base_seed + static_cast<std::uint64_t>(r)});

  std::vector<RunTrace> traces(cells.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex err_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size() || failed.load()) return;
      try {
        traces[i] = run_strategy(cells[i].kind, obj, cfg.budget, cells[i].seed, scfg);
        traces[i].config_hash = hash;
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };
  const int nthreads = std::max(1, cfg.threads);
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  ExperimentResult result;
  result.config = cfg;
  result.hash = hash;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const std::string name = strategy_name(cells[i].kind);
    StrategySummary& agg = result.summary[name];
    if (obj.known_optimum) agg.final_regrets.push_back(simple_regret(traces[i], obj).back());
    if (cfg.mse_grid >= 100)
      agg.mses.push_back(
          surrogate_mse(detail::mse_posterior(traces[i], scfg.estimator), obj, cfg.mse_grid));
  }
  for (auto& [name, agg] : result.summary) {
    if (!agg.final_regrets.empty())
      std::tie(agg.regret_mean, agg.regret_se) = detail::mean_se(agg.final_regrets);
    if (!agg.mses.empty()) {
      auto [m, se] = detail::mean_se(agg.mses);
      agg.mse_mean = m;
      agg.mse_se = se;
    }
  }
  result.traces = std::move(traces);

  write_traces_csv(csv_path.string(), result.traces, hash, obj.dim);
  nlohmann::ordered_json js;
  js["config_hash"] = hash;
  nlohmann::ordered_json cfg_echo = config_to_json(cfg);
  cfg_echo.erase("out_dir");  // execution-only knobs; keep the summary
  cfg_echo.erase("threads");  // byte-stable across reruns anywhere
  js["config"] = std::move(cfg_echo);
  nlohmann::ordered_json stats;
  for (const auto& [name, agg] : result.summary) {
    nlohmann::ordered_json s;
    s["runs"] = agg.final_regrets.empty() ? agg.mses.size() : agg.final_regrets.size();
    if (!agg.final_regrets.empty()) {
      s["final_regret"] = {{"mean", agg.regret_mean}, {"stderr", agg.regret_se}};
    }
    if (agg.mse_mean) {
      s["surrogate_mse"] = {{"mean", *agg.mse_mean}, {"stderr", *agg.mse_se}};
    }
    stats[name] = std::move(s);
  }
  js["strategies"] = std::move(stats);
  std::ofstream jout(json_path, std::ios::binary);
  jout << js.dump(2) << "\n";

  return result;
}

}  // namespace uhebo

#endif  // UHEBO_HARNESS_HPP
