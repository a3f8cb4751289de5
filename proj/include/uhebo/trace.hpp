#ifndef UHEBO_TRACE_HPP
#define UHEBO_TRACE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "uhebo/types.hpp"

namespace uhebo {

struct TraceRecord {
  int t = 0;
  Eigen::VectorXd x;
  double y = 0.0;
  double best_so_far = 0.0;
  std::optional<int> arm;            // 1-based: 1 = random, 2 = acquisition
  std::optional<double> scaled_reward;
  std::optional<Hyperparams> theta_hat;
  double wall_ms = 0.0;
};

/// Per-run record: one TraceRecord per iteration t = 1..T plus the final
/// dataset (initial design followed by the sampled points, in order).
struct RunTrace {
  std::string strategy;
  std::string objective;
  std::uint64_t seed = 0;
  int budget = 0;
  std::string config_hash;
  std::size_t init_size = 0;
  std::vector<TraceRecord> records;
  Dataset data;

  double final_best() const { return records.empty() ? 0.0 : records.back().best_so_far; }

  /// Last recorded hyperparameter estimate, if any strategy step produced one.
  std::optional<Hyperparams> last_theta() const {
    for (auto it = records.rbegin(); it != records.rend(); ++it)
      if (it->theta_hat) return it->theta_hat;
    return std::nullopt;
  }
};

}  // namespace uhebo

#endif  // UHEBO_TRACE_HPP
