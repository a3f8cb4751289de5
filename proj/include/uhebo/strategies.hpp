#ifndef UHEBO_STRATEGIES_HPP
#define UHEBO_STRATEGIES_HPP

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "uhebo/acquisition.hpp"
#include "uhebo/bandit.hpp"
#include "uhebo/benchmarks.hpp"
#include "uhebo/estimation.hpp"
#include "uhebo/gp.hpp"
#include "uhebo/trace.hpp"
#include "uhebo/types.hpp"

namespace uhebo {

enum class StrategyKind {
  kUhe,
  kMapBo,
  kRandom,
  kPortfolio,
  kAGpUcb,
  kWangDeFreitas,
  kRdExp3,
  kRandomPlusExp3,
};

inline std::string strategy_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::kUhe: return "uhe";
    case StrategyKind::kMapBo: return "map_bo";
    case StrategyKind::kRandom: return "random";
    case StrategyKind::kPortfolio: return "portfolio";
    case StrategyKind::kAGpUcb: return "a_gp_ucb";
    case StrategyKind::kWangDeFreitas: return "wang_defreitas";
    case StrategyKind::kRdExp3: return "rdexp3";
    case StrategyKind::kRandomPlusExp3: return "random_plus_exp3";
  }
  throw ConfigError("unknown strategy kind");
}

inline StrategyKind parse_strategy(const std::string& name) {
  if (name == "uhe") return StrategyKind::kUhe;
  if (name == "map_bo") return StrategyKind::kMapBo;
  if (name == "random") return StrategyKind::kRandom;
  if (name == "portfolio") return StrategyKind::kPortfolio;
  if (name == "a_gp_ucb") return StrategyKind::kAGpUcb;
  if (name == "wang_defreitas") return StrategyKind::kWangDeFreitas;
  if (name == "rdexp3") return StrategyKind::kRdExp3;
  if (name == "random_plus_exp3") return StrategyKind::kRandomPlusExp3;
  throw ConfigError("unknown strategy: " + name);
}

inline std::vector<std::string> strategy_names() {
  return {"uhe",      "map_bo",         "random", "portfolio",
          "a_gp_ucb", "wang_defreitas", "rdexp3", "random_plus_exp3"};
}

struct StrategyConfig {
  int init_points = 0;  // 0 -> 3 * dim
  EstimatorConfig estimator;
  AcquisitionConfig acquisition;
  double wang_kappa = 0.1;
  bool record_wall_time = false;
};

/// Noisy observation with failure annotation.
inline double observe(const Objective& obj, const Eigen::VectorXd& x, Rng& rng, int iteration) {
  double f;
  try {
    f = obj.eval(x);
  } catch (const std::exception& e) {
    throw EvaluationError(std::string("objective evaluation failed: ") + e.what(), iteration);
  }
  if (!std::isfinite(f)) throw EvaluationError("objective returned a non-finite value", iteration);
  if (obj.noise_std > 0.0) f += obj.noise_std * rng.normal();
  return f;
}

inline Dataset make_initial_design(const Objective& obj, int n, Rng& rng) {
  if (n < 1) throw InvalidInput("initial design needs at least one point");
  Dataset d(obj.bounds);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd x = rng.uniform_in(obj.bounds);
    const double y = observe(obj, x, rng, 0);
    d.add(std::move(x), y);
  }
  return d;
}

namespace detail {

class TraceBuilder {
 public:
  TraceBuilder(const Objective& obj, int budget, std::size_t init_size, bool timed)
      : timed_(timed) {
    trace_.objective = obj.name;
    trace_.budget = budget;
    trace_.init_size = init_size;
    trace_.records.reserve(static_cast<std::size_t>(budget));
  }

  void start_iteration() {
    if (timed_) t0_ = std::chrono::steady_clock::now();
  }

  TraceRecord& push(int t, Eigen::VectorXd x, double y) {
    best_ = records_empty() ? y : std::max(best_, y);
    TraceRecord rec;
    rec.t = t;
    rec.x = std::move(x);
    rec.y = y;
    rec.best_so_far = best_;
    if (timed_) {
      const auto t1 = std::chrono::steady_clock::now();
      rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0_).count();
    }
    trace_.records.push_back(std::move(rec));
    return trace_.records.back();
  }

  RunTrace finish(Dataset data) && {
    trace_.data = std::move(data);
    return std::move(trace_);
  }

 private:
  bool records_empty() const { return trace_.records.empty(); }

  RunTrace trace_;
  double best_ = 0.0;
  bool timed_ = false;
  std::chrono::steady_clock::time_point t0_{};
};

constexpr int kArmRandom = 0;
constexpr int kArmAcquisition = 1;

}  // namespace detail

/// The full bandit-scheduled loop with the consistent pseudo-label loss.
/// Odd iterations draw an arm; arm 1 on an odd iteration samples uniformly,
/// every other iteration estimates hyperparameters, refits the GP on the
/// original data, and maximizes GP-UCB. Even iterations compute the pair
/// reward max(y_t, y_{t-1}), scale it by the initial design, and update the
/// chosen arm's weight.
inline RunTrace run_uhe(const Objective& obj, int budget, const Dataset& init,
                        const StrategyConfig& cfg, Rng& rng, bool consistent_loss = true) {
  if (budget < 2) throw InvalidInput("run_uhe: budget must be >= 2");
  if (init.empty()) throw InvalidInput("run_uhe: initial design must be non-empty");
  Dataset data = init;
  detail::TraceBuilder tb(obj, budget, init.size(), cfg.record_wall_time);
  Exp3State state = Exp3State::make(2, exp3_gamma(budget));
  std::optional<Hyperparams> warm;
  double prev_y = 0.0;
  int arm = detail::kArmRandom;
  for (int t = 1; t <= budget; ++t) {
    tb.start_iteration();
    if (t % 2 == 1) arm = draw_arm(state, rng);
    Eigen::VectorXd x;
    std::optional<Hyperparams> theta;
    if (arm == detail::kArmRandom && t % 2 == 1) {
      x = rng.uniform_in(obj.bounds);
    } else {
      if (consistent_loss) {
        auto [th, pseudo] = estimate_consistent(data, cfg.estimator, rng,
                                                warm ? &*warm : nullptr);
        theta = std::move(th);
      } else {
        theta = estimate_map(data, cfg.estimator, rng, warm ? &*warm : nullptr);
      }
      warm = theta;
      const GpPosterior gp = fit_posterior(data, *theta);
      x = maximize(gp, obj.bounds, cfg.acquisition, rng).first;
    }
    const double y = observe(obj, x, rng, t);
    data.add(x, y);
    TraceRecord& rec = tb.push(t, std::move(x), y);
    rec.arm = arm + 1;
    rec.theta_hat = std::move(theta);
    if (t % 2 == 0) {
      const double raw = std::max(y, prev_y);
      RewardRecord reward{raw, scale_reward(raw, init.values), arm};
      update(state, reward);
      rec.scaled_reward = reward.scaled_reward;
    }
    prev_y = y;
  }
  RunTrace out = std::move(tb).finish(std::move(data));
  out.strategy = consistent_loss ? "uhe" : "random_plus_exp3";
  return out;
}

/// Standard BO: MAP (or MLL) estimate on the original, biased data each
/// iteration, then GP-UCB.
inline RunTrace run_map_bo(const Objective& obj, int budget, const Dataset& init,
                           const StrategyConfig& cfg, Rng& rng) {
  if (budget < 1) throw InvalidInput("run_map_bo: budget must be >= 1");
  Dataset data = init;
  detail::TraceBuilder tb(obj, budget, init.size(), cfg.record_wall_time);
  std::optional<Hyperparams> warm;
  for (int t = 1; t <= budget; ++t) {
    tb.start_iteration();
    Hyperparams theta = estimate_map(data, cfg.estimator, rng, warm ? &*warm : nullptr);
    warm = theta;
    const GpPosterior gp = fit_posterior(data, theta);
    Eigen::VectorXd x = maximize(gp, obj.bounds, cfg.acquisition, rng).first;
    const double y = observe(obj, x, rng, t);
    data.add(x, y);
    tb.push(t, std::move(x), y).theta_hat = std::move(theta);
  }
  RunTrace out = std::move(tb).finish(std::move(data));
  out.strategy = "map_bo";
  return out;
}

inline RunTrace run_random(const Objective& obj, int budget, const Dataset& init,
                           const StrategyConfig& cfg, Rng& rng) {
  if (budget < 1) throw InvalidInput("run_random: budget must be >= 1");
  Dataset data = init;
  detail::TraceBuilder tb(obj, budget, init.size(), cfg.record_wall_time);
  for (int t = 1; t <= budget; ++t) {
    tb.start_iteration();
    Eigen::VectorXd x = rng.uniform_in(obj.bounds);
    const double y = observe(obj, x, rng, t);
    data.add(x, y);
    tb.push(t, std::move(x), y);
  }
  RunTrace out = std::move(tb).finish(std::move(data));
  out.strategy = "random";
  return out;
}

/// Acquisition portfolio {random, GP-UCB} selected per iteration by the
/// unpaired EXP3; reward is the scaled observed value of the chosen point.
inline RunTrace run_portfolio(const Objective& obj, int budget, const Dataset& init,
                              const StrategyConfig& cfg, Rng& rng) {
  if (budget < 1) throw InvalidInput("run_portfolio: budget must be >= 1");
  Dataset data = init;
  detail::TraceBuilder tb(obj, budget, init.size(), cfg.record_wall_time);
  std::optional<Hyperparams> warm;
  auto step = [&](int arm, long t0) -> double {
    const int t = static_cast<int>(t0) + 1;
    tb.start_iteration();
    Eigen::VectorXd x;
    std::optional<Hyperparams> theta;
    if (arm == detail::kArmRandom) {
      x = rng.uniform_in(obj.bounds);
    } else {
      theta = estimate_map(data, cfg.estimator, rng, warm ? &*warm : nullptr);
      warm = theta;
      const GpPosterior gp = fit_posterior(data, *theta);
      x = maximize(gp, obj.bounds, cfg.acquisition, rng).first;
    }
    const double y = observe(obj, x, rng, t);
    data.add(x, y);
    const double scaled = scale_reward(y, init.values);
    TraceRecord& rec = tb.push(t, std::move(x), y);
    rec.arm = arm + 1;
    rec.scaled_reward = scaled;
    rec.theta_hat = std::move(theta);
    return scaled;
  };
  exp3_generic(2, step, budget, exp3_gamma(budget), rng);
  RunTrace out = std::move(tb).finish(std::move(data));
  out.strategy = "portfolio";
  return out;
}

/// Lengthscale shrink factor (t0 / tau)^(0.9 / d) for tau past the initial
/// design size, 1 before.
inline double agp_shrink_factor(std::size_t t0, std::size_t tau, int dim) {
  if (tau <= t0) return 1.0;
  return std::pow(static_cast<double>(t0) / static_cast<double>(tau), 0.9 / static_cast<double>(dim));
}

/// Adaptive GP-UCB variant: MAP estimate with lengthscales shrunk over time
/// and never re-grown, expanding the function class encoded by the GP.
inline RunTrace run_a_gp_ucb(const Objective& obj, int budget, const Dataset& init,
                             const StrategyConfig& cfg, Rng& rng) {
  if (budget < 1) throw InvalidInput("run_a_gp_ucb: budget must be >= 1");
  Dataset data = init;
  detail::TraceBuilder tb(obj, budget, init.size(), cfg.record_wall_time);
  std::optional<Hyperparams> warm;
  Eigen::VectorXd ls_eff;
  for (int t = 1; t <= budget; ++t) {
    tb.start_iteration();
    Hyperparams theta = estimate_map(data, cfg.estimator, rng, warm ? &*warm : nullptr);
    warm = theta;
    const double factor = agp_shrink_factor(init.size(), data.size(), obj.dim);
    Eigen::VectorXd candidate = theta.lengthscales * factor;
    ls_eff = (ls_eff.size() == 0) ? candidate : ls_eff.cwiseMin(candidate);
    Hyperparams used(ls_eff, theta.signal_variance, theta.noise_variance);
    const GpPosterior gp = fit_posterior(data, used);
    Eigen::VectorXd x = maximize(gp, obj.bounds, cfg.acquisition, rng).first;
    const double y = observe(obj, x, rng, t);
    data.add(x, y);
    tb.push(t, std::move(x), y).theta_hat = std::move(used);
  }
  RunTrace out = std::move(tb).finish(std::move(data));
  out.strategy = "a_gp_ucb";
  return out;
}

/// Largest scaling factor s in {1, 1/2, ..., 2^-10} (applied to all
/// lengthscales) for which the predictive standard deviation at x reaches
/// kappa; bottoms out at 2^-10.
inline double wang_scale_search(const Dataset& data, const Hyperparams& theta,
                                const Eigen::VectorXd& x, double kappa) {
  double s = 1.0;
  for (int k = 0; k <= 10; ++k) {
    Hyperparams scaled(theta.lengthscales * s, theta.signal_variance, theta.noise_variance);
    const GpPosterior gp = fit_posterior(data, scaled);
    if (std::sqrt(predict(gp, x).variance) >= kappa) return s;
    if (k < 10) s *= 0.5;
  }
  return s;
}

/// MAP estimate, GP-UCB proposal; when the proposal's predictive deviation
/// falls below kappa, lengthscales are scaled down by the largest admissible
/// grid factor and the point is re-proposed once.
inline RunTrace run_wang_defreitas(const Objective& obj, int budget, const Dataset& init,
                                   const StrategyConfig& cfg, Rng& rng) {
  if (budget < 1) throw InvalidInput("run_wang_defreitas: budget must be >= 1");
  Dataset data = init;
  detail::TraceBuilder tb(obj, budget, init.size(), cfg.record_wall_time);
  std::optional<Hyperparams> warm;
  for (int t = 1; t <= budget; ++t) {
    tb.start_iteration();
    Hyperparams theta = estimate_map(data, cfg.estimator, rng, warm ? &*warm : nullptr);
    warm = theta;
    GpPosterior gp = fit_posterior(data, theta);
    Eigen::VectorXd x = maximize(gp, obj.bounds, cfg.acquisition, rng).first;
    Hyperparams used = theta;
    if (cfg.wang_kappa > 0.0 && std::sqrt(predict(gp, x).variance) < cfg.wang_kappa) {
      const double s = wang_scale_search(data, theta, x, cfg.wang_kappa);
      used.lengthscales *= s;
      gp = fit_posterior(data, used);
      x = maximize(gp, obj.bounds, cfg.acquisition, rng).first;
    }
    const double y = observe(obj, x, rng, t);
    data.add(x, y);
    tb.push(t, std::move(x), y).theta_hat = std::move(used);
  }
  RunTrace out = std::move(tb).finish(std::move(data));
  out.strategy = "wang_defreitas";
  return out;
}

/// Deterministic alternation ablation: odd iterations sample uniformly, even
/// iterations run the consistent-loss BO step. No bandit.
inline RunTrace run_rdexp3(const Objective& obj, int budget, const Dataset& init,
                           const StrategyConfig& cfg, Rng& rng) {
  if (budget < 1) throw InvalidInput("run_rdexp3: budget must be >= 1");
  Dataset data = init;
  detail::TraceBuilder tb(obj, budget, init.size(), cfg.record_wall_time);
  std::optional<Hyperparams> warm;
  for (int t = 1; t <= budget; ++t) {
    tb.start_iteration();
    Eigen::VectorXd x;
    std::optional<Hyperparams> theta;
    if (t % 2 == 1) {
      x = rng.uniform_in(obj.bounds);
    } else {
      auto [th, pseudo] = estimate_consistent(data, cfg.estimator, rng, warm ? &*warm : nullptr);
      theta = std::move(th);
      warm = theta;
      const GpPosterior gp = fit_posterior(data, *theta);
      x = maximize(gp, obj.bounds, cfg.acquisition, rng).first;
    }
    const double y = observe(obj, x, rng, t);
    data.add(x, y);
    tb.push(t, std::move(x), y).theta_hat = std::move(theta);
  }
  RunTrace out = std::move(tb).finish(std::move(data));
  out.strategy = "rdexp3";
  return out;
}

/// Bandit scheduling without the consistent loss: the run_uhe control flow
/// with the standard MAP estimate on the original data.
inline RunTrace run_random_plus_exp3(const Objective& obj, int budget, const Dataset& init,
                                     const StrategyConfig& cfg, Rng& rng) {
  return run_uhe(obj, budget, init, cfg, rng, /*consistent_loss=*/false);
}

/// Seeds an rng, draws the initial design (3d points unless configured), and
/// dispatches. Identical (kind, objective, budget, seed, config) inputs give
/// identical traces.
inline RunTrace run_strategy(StrategyKind kind, const Objective& obj, int budget,
                             std::uint64_t seed, const StrategyConfig& cfg) {
  Rng rng(seed);
  const int n0 = cfg.init_points > 0 ? cfg.init_points : 3 * obj.dim;
  const Dataset init = make_initial_design(obj, n0, rng);
  RunTrace trace;
  switch (kind) {
    case StrategyKind::kUhe: trace = run_uhe(obj, budget, init, cfg, rng); break;
    case StrategyKind::kMapBo: trace = run_map_bo(obj, budget, init, cfg, rng); break;
    case StrategyKind::kRandom: trace = run_random(obj, budget, init, cfg, rng); break;
    case StrategyKind::kPortfolio: trace = run_portfolio(obj, budget, init, cfg, rng); break;
    case StrategyKind::kAGpUcb: trace = run_a_gp_ucb(obj, budget, init, cfg, rng); break;
    case StrategyKind::kWangDeFreitas: trace = run_wang_defreitas(obj, budget, init, cfg, rng); break;
    case StrategyKind::kRdExp3: trace = run_rdexp3(obj, budget, init, cfg, rng); break;
    case StrategyKind::kRandomPlusExp3: trace = run_random_plus_exp3(obj, budget, init, cfg, rng); break;
  }
  trace.seed = seed;
  return trace;
}

}  // namespace uhebo

#endif  // UHEBO_STRATEGIES_HPP
