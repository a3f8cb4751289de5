#ifndef UHEBO_BANDIT_HPP
#define UHEBO_BANDIT_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "uhebo/types.hpp"

namespace uhebo {

/// Exploration mixing rate gamma = sqrt(4 log2 / ((e - 1) T)), clamped to 1.
inline double exp3_gamma(long T) {
  if (T < 1) throw InvalidInput("exp3_gamma: T must be >= 1");
  const double g = std::sqrt(4.0 * std::log(2.0) / ((M_E - 1.0) * static_cast<double>(T)));
  return std::min(g, 1.0);
}

struct RewardRecord {
  double raw_reward = 0.0;     // max(y_t, y_{t-1})
  double scaled_reward = 0.0;  // in [0, 1]
  int arm = 0;
};

/// EXP3 state for the paired two-arm protocol: draw_arm on the odd round of
/// a pair, update with the pair's reward on the even round.
struct Exp3State {
  enum class Parity { kOdd, kEven };

  Eigen::VectorXd weights;
  double gamma = 0.0;
  Eigen::VectorXd last_probs;
  std::optional<int> last_arm;
  Parity round_parity = Parity::kOdd;

  static Exp3State make(int arms, double gamma) {
    if (arms < 1) throw InvalidInput("Exp3State: need at least one arm");
    if (!(gamma > 0.0) || gamma > 1.0) throw InvalidInput("Exp3State: gamma must be in (0,1]");
    Exp3State s;
    s.weights = Eigen::VectorXd::Ones(arms);
    s.gamma = gamma;
    s.last_probs = Eigen::VectorXd::Zero(arms);
    return s;
  }

  int arms() const { return static_cast<int>(weights.size()); }

  Eigen::VectorXd probs() const {
    const double m = static_cast<double>(arms());
    return ((1.0 - gamma) * weights / weights.sum()).array() + gamma / m;
  }
};

/// p^m = (1 - gamma) w^m / sum(w) + gamma / M, then samples the arm.
inline int draw_arm(Exp3State& state, Rng& rng) {
  if (state.round_parity != Exp3State::Parity::kOdd)
    throw ProtocolError("draw_arm: expected update() first (even round pending)");
  state.last_probs = state.probs();
  const int arm = rng.categorical(state.last_probs);
  state.last_arm = arm;
  state.round_parity = Exp3State::Parity::kEven;
  return arm;
}

/// Chosen arm's weight <- weight * exp(gamma * (r / p) / M); others unchanged.
inline void update(Exp3State& state, const RewardRecord& reward) {
  if (state.round_parity != Exp3State::Parity::kEven)
    throw ProtocolError("update: expected draw_arm() first (odd round pending)");
  if (!state.last_arm || reward.arm != *state.last_arm)
    throw ProtocolError("update: reward arm does not match the drawn arm");
  if (reward.scaled_reward < 0.0 || reward.scaled_reward > 1.0)
    throw InvalidInput("update: scaled reward must lie in [0,1]");
  const double m = static_cast<double>(state.arms());
  const double rhat = reward.scaled_reward / state.last_probs[reward.arm];
  state.weights[reward.arm] *= std::exp(state.gamma * rhat / m);
  const double wmax = state.weights.maxCoeff();
  if (wmax > 1e100) state.weights /= wmax;  // probabilities are scale-invariant
  state.round_parity = Exp3State::Parity::kOdd;
}

/// Min-max reward scaling over the initial design's observed values,
/// clipped to [0,1]; degenerate (all-equal) designs map to 0.5.
inline double scale_reward(double raw, const std::vector<double>& d0_values) {
  if (d0_values.empty()) throw InvalidInput("scale_reward: empty initial design");
  const auto [mn, mx] = std::minmax_element(d0_values.begin(), d0_values.end());
  if (*mx == *mn) return 0.5;
  return std::clamp((raw - *mn) / (*mx - *mn), 0.0, 1.0);
}

struct Exp3RunResult {
  std::vector<int> arms;
  std::vector<double> rewards;
  std::vector<double> cumulative;
  Eigen::VectorXd final_weights;
  double total = 0.0;
};

/// Standard unpaired EXP3 over M arms: draw, observe the chosen arm's reward
/// in [0,1], importance-weight, w^m <- w^m exp(gamma rhat / M).
inline Exp3RunResult exp3_generic(int arms, const std::function<double(int arm, long t)>& reward,
                                  long T, double gamma, Rng& rng) {
  if (arms < 1) throw InvalidInput("exp3_generic: need at least one arm");
  if (!(gamma > 0.0) || gamma > 1.0) throw InvalidInput("exp3_generic: gamma must be in (0,1]");
  Eigen::VectorXd w = Eigen::VectorXd::Ones(arms);
  const double m = static_cast<double>(arms);
  Exp3RunResult out;
  out.arms.reserve(static_cast<std::size_t>(T));
  out.rewards.reserve(static_cast<std::size_t>(T));
  for (long t = 0; t < T; ++t) {
    const Eigen::VectorXd p = ((1.0 - gamma) * w / w.sum()).array() + gamma / m;
    const int a = rng.categorical(p);
    const double r = reward(a, t);
    if (r < 0.0 || r > 1.0) throw InvalidInput("exp3_generic: reward outside [0,1]");
    w[a] *= std::exp(gamma * (r / p[a]) / m);
    const double wmax = w.maxCoeff();
    if (wmax > 1e100) w /= wmax;
    out.arms.push_back(a);
    out.rewards.push_back(r);
    out.total += r;
    out.cumulative.push_back(out.total);
  }
  out.final_weights = std::move(w);
  return out;
}

}  // namespace uhebo

#endif  // UHEBO_BANDIT_HPP
