#ifndef UHEBO_ACQUISITION_HPP
#define UHEBO_ACQUISITION_HPP

#include <cmath>
#include <utility>

#include <Eigen/Dense>

#include "uhebo/gp.hpp"
#include "uhebo/types.hpp"

namespace uhebo {

struct AcquisitionConfig {
  double ucb_multiplier = 1.96;  // multiplier on the predictive standard deviation
  int candidates = 2000;
  int refine_steps = 50;

  void validate() const {
    if (!(ucb_multiplier >= 0.0)) throw InvalidInput("ucb_multiplier must be non-negative");
    if (candidates < 1) throw InvalidInput("candidates must be >= 1");
    if (refine_steps < 0) throw InvalidInput("refine_steps must be >= 0");
  }
};

/// GP-UCB: mu(x) + multiplier * sigma(x).
inline double ucb_value(const GpPosterior& gp, const Eigen::VectorXd& x,
                        const AcquisitionConfig& cfg) {
  const Prediction p = predict(gp, x);
  return p.mean + cfg.ucb_multiplier * std::sqrt(p.variance);
}

/// Maximizes the acquisition over the box: best of `candidates` uniform
/// samples, then coordinate-wise ascent with a shrinking step, projected to
/// the bounds. Deterministic under the rng seed.
inline std::pair<Eigen::VectorXd, double> maximize(const GpPosterior& gp, const Bounds& bounds,
                                                   const AcquisitionConfig& cfg, Rng& rng) {
  cfg.validate();
  const int d = bounds.dim();
  Eigen::VectorXd best_x = rng.uniform_in(bounds);
  double best_v = ucb_value(gp, best_x, cfg);
  for (int c = 1; c < cfg.candidates; ++c) {
    Eigen::VectorXd x = rng.uniform_in(bounds);
    const double v = ucb_value(gp, x, cfg);
    if (v > best_v) {
      best_v = v;
      best_x = std::move(x);
    }
  }
  Eigen::VectorXd step(d);
  for (int h = 0; h < d; ++h) step[h] = 0.1 * bounds.span(h);
  for (int it = 0; it < cfg.refine_steps; ++it) {
    bool improved = false;
    for (int h = 0; h < d; ++h) {
      if (step[h] <= 0.0) continue;
      for (double dir : {+1.0, -1.0}) {
        Eigen::VectorXd x = best_x;
        x[h] = std::clamp(x[h] + dir * step[h], bounds.lo[h], bounds.hi[h]);
        if (x[h] == best_x[h]) continue;
        const double v = ucb_value(gp, x, cfg);
        if (v > best_v) {
          best_v = v;
          best_x = std::move(x);
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return {best_x, best_v};
}

}  // namespace uhebo

#endif  // UHEBO_ACQUISITION_HPP
