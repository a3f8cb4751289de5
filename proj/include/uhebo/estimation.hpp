#ifndef UHEBO_ESTIMATION_HPP
#define UHEBO_ESTIMATION_HPP

#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "uhebo/gp.hpp"
#include "uhebo/types.hpp"

namespace uhebo {

/// Uniformly sampled points with their nearest observed neighbors and the
/// copied (pseudo) target values.
struct PseudoDataset {
  std::vector<Eigen::VectorXd> random_points;
  std::vector<std::size_t> matched_indices;
  std::vector<double> pseudo_values;

  std::size_t size() const { return random_points.size(); }
};

enum class LossKind { kMll, kMap };

struct EstimatorConfig {
  double mt_factor = 2.0;  // M_t = ceil(mt_factor * |D|)
  int restarts = 5;
  int max_iters = 200;
  LossKind loss_kind = LossKind::kMap;
  GammaPriors priors{};

  void validate() const {
    if (!(mt_factor >= 1.0)) throw InvalidInput("mt_factor must be >= 1");
    if (restarts < 1) throw InvalidInput("restarts must be >= 1");
    if (max_iters < 1) throw InvalidInput("max_iters must be >= 1");
  }
};

namespace detail {

inline std::atomic<long>& match_nearest_calls() {
  static std::atomic<long> n{0};
  return n;
}

}  // namespace detail

/// Matches every random point to its L2-nearest observed point (brute-force
/// scan; ties break to the lowest observation index) and copies the observed
/// values as pseudo targets.
inline PseudoDataset match_nearest(const Dataset& data,
                                   const std::vector<Eigen::VectorXd>& random_points) {
  if (data.empty()) throw InvalidState("match_nearest: empty dataset");
  detail::match_nearest_calls().fetch_add(1, std::memory_order_relaxed);
  PseudoDataset out;
  out.random_points = random_points;
  out.matched_indices.reserve(random_points.size());
  out.pseudo_values.reserve(random_points.size());
  for (const Eigen::VectorXd& xp : random_points) {
    if (xp.size() != data.bounds.lo.size()) throw InvalidInput("match_nearest: dimension mismatch");
    if (!data.bounds.contains(xp)) throw InvalidInput("match_nearest: random point outside bounds");
    std::size_t best = 0;
    double best_d2 = (xp - data.points[0]).squaredNorm();
    for (std::size_t i = 1; i < data.size(); ++i) {
      const double d2 = (xp - data.points[i]).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = i;
      }
    }
    out.matched_indices.push_back(best);
    out.pseudo_values.push_back(data.values[best]);
  }
  return out;
}

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Log-space parametrization u = [log l_0 .. log l_{d-1}, log sigf2, log sig2].
inline Hyperparams theta_from_log(const Eigen::VectorXd& u) {
  const int d = static_cast<int>(u.size()) - 2;
  Eigen::VectorXd ls(d);
  for (int h = 0; h < d; ++h) ls[h] = std::exp(u[h]);
  return Hyperparams(ls, std::exp(u[d]), std::exp(u[d + 1]));
}

inline Eigen::VectorXd log_from_theta(const Hyperparams& theta) {
  const int d = theta.dim();
  Eigen::VectorXd u(d + 2);
  for (int h = 0; h < d; ++h) u[h] = std::log(theta.lengthscales[h]);
  u[d] = std::log(theta.signal_variance);
  u[d + 1] = std::log(theta.noise_variance);
  return u;
}

struct LogSpaceBox {
  Eigen::VectorXd lo, hi;
  Eigen::VectorXd clamp(Eigen::VectorXd u) const {
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = std::clamp(u[i], lo[i], hi[i]);
    return u;
  }
};

/// Characteristic squared scale of the targets; keeps the search box
/// data-informed even for constant or single-observation data.
inline double value_scale2(const std::vector<double>& values) {
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  return std::max({var, 1e-3 * mean * mean, 1e-12});
}

/// Search box in log-space. The Gamma(1e-3, .) prior density diverges as any
/// hyperparameter approaches 0, so the exact MAP is unbounded below the data
/// scale; the floors sit where smaller values are statistically
/// indistinguishable from zero, which caps that spike at a few nats.
inline LogSpaceBox make_box(const Bounds& bounds, double vy) {
  const int d = bounds.dim();
  LogSpaceBox box;
  box.lo.resize(d + 2);
  box.hi.resize(d + 2);
  for (int h = 0; h < d; ++h) {
    const double span = bounds.span(h) > 0.0 ? bounds.span(h) : 1.0;
    box.lo[h] = std::log(1e-3 * span);
    box.hi[h] = std::log(1e3 * span);
  }
  box.lo[d] = std::log(1e-6 * vy);
  box.hi[d] = std::log(1e6 * vy);
  box.lo[d + 1] = std::log(1e-6 * vy);
  box.hi[d + 1] = std::log(1e2 * vy);
  return box;
}

/// Restart locations are log-uniform over data-informed ranges, i.e. the
/// Gamma prior conditioned on a plausible window (its x^(a-1) density with
/// a ~ 0 is log-uniform to first order).
inline Eigen::VectorXd draw_restart(const Bounds& bounds, double vy, Rng& rng) {
  const int d = bounds.dim();
  Eigen::VectorXd u(d + 2);
  for (int h = 0; h < d; ++h) {
    const double span = bounds.span(h) > 0.0 ? bounds.span(h) : 1.0;
    u[h] = rng.uniform(std::log(0.01 * span), std::log(2.0 * span));
  }
  u[d] = rng.uniform(std::log(0.05 * vy), std::log(20.0 * vy));
  u[d + 1] = rng.uniform(std::log(1e-5 * vy), std::log(0.1 * vy));
  return u;
}

/// Negative selected loss at a log-space point u, with the factorization of
/// the most recent value cached so the gradient at an accepted line-search
/// point costs no extra Cholesky. Per-dimension squared differences are
/// precomputed once per estimation. A failed factorization yields +inf so
/// the line search backs off.
class NegLoss {
 public:
  NegLoss(const std::vector<Eigen::VectorXd>& points, const std::vector<double>& values,
          LossKind kind, const GammaPriors* priors)
      : kind_(kind), priors_(priors), n_(static_cast<Eigen::Index>(points.size())) {
    d_ = points.empty() ? 0 : static_cast<int>(points.front().size());
    y_ = Eigen::Map<const Eigen::VectorXd>(values.data(), n_);
    diff2_.reserve(static_cast<std::size_t>(d_));
    for (int h = 0; h < d_; ++h) {
      Eigen::MatrixXd D(n_, n_);
      for (Eigen::Index i = 0; i < n_; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) {
          const double dh = points[static_cast<std::size_t>(i)][h] -
                            points[static_cast<std::size_t>(j)][h];
          D(i, j) = dh * dh;
          D(j, i) = dh * dh;
        }
      diff2_.push_back(std::move(D));
    }
  }

  double value(const Eigen::VectorXd& u) {
    const Hyperparams theta = theta_from_log(u);
    cached_ = false;
    if (!theta_finite(theta)) return kInf;

    Eigen::ArrayXXd r2 = Eigen::ArrayXXd::Zero(n_, n_);
    for (int h = 0; h < d_; ++h)
      r2 += diff2_[static_cast<std::size_t>(h)].array() / (theta.lengthscales[h] * theta.lengthscales[h]);
    // cap the exponent scale: beyond ~600 the kernel is zero for all
    // practical purposes, and letting exp() underflow gradually drags the
    // factorization through subnormal arithmetic
    s_ = (kSqrt5 * r2.sqrt()).min(600.0).eval();
    expterm_ = (-s_).exp().eval();
    K_ = (theta.signal_variance * (1.0 + s_ + s_ * s_ / 3.0) * expterm_).eval();

    double loglik = 0.0;
    bool factored = false;
    for (double jitter : kJitterLadder) {
      Eigen::MatrixXd A = K_.matrix();
      A.diagonal().array() += theta.noise_variance + jitter;
      Eigen::LLT<Eigen::MatrixXd> llt(std::move(A));
      if (llt.info() != Eigen::Success) continue;
      L_ = llt.matrixL();
      bool finite = true;
      for (Eigen::Index i = 0; i < n_ && finite; ++i) finite = std::isfinite(L_(i, i)) && L_(i, i) > 0.0;
      if (!finite) continue;
      const Eigen::VectorXd a = L_.triangularView<Eigen::Lower>().solve(y_);
      loglik = -0.5 * a.squaredNorm() - L_.diagonal().array().log().sum() -
               0.5 * static_cast<double>(n_) * std::log(2.0 * M_PI);
      alpha_ = a;
      L_.transpose().triangularView<Eigen::Upper>().solveInPlace(alpha_);
      factored = true;
      break;
    }
    if (!factored) return kInf;
    if (kind_ == LossKind::kMap) loglik += priors_->log_density(theta);
    if (!std::isfinite(loglik)) return kInf;
    theta_ = theta;
    cached_ = true;
    return -loglik;
  }

  /// Gradient at the point of the last successful value(); reuses its
  /// factorization.
  Eigen::VectorXd gradient_at_last() const {
    if (!cached_) throw InvalidState("NegLoss::gradient_at_last without a cached value");
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(d_ + 2);
    Eigen::MatrixXd W = Eigen::MatrixXd::Identity(n_, n_);
    L_.triangularView<Eigen::Lower>().solveInPlace(W);
    L_.transpose().triangularView<Eigen::Upper>().solveInPlace(W);
    W.noalias() -= alpha_ * alpha_.transpose();  // A^-1 - alpha alpha'; negated loss below
    const Eigen::ArrayXXd dls_common =
        theta_.signal_variance * (5.0 / 3.0) * (1.0 + s_) * expterm_;
    for (int h = 0; h < d_; ++h) {
      const double inv_l2 = 1.0 / (theta_.lengthscales[h] * theta_.lengthscales[h]);
      grad[h] =
          0.5 *
          (W.array() * (dls_common * diff2_[static_cast<std::size_t>(h)].array() * inv_l2)).sum();
    }
    grad[d_] = 0.5 * (W.array() * K_).sum();
    grad[d_ + 1] = 0.5 * theta_.noise_variance * W.trace();
    if (kind_ == LossKind::kMap) {
      for (int h = 0; h < d_; ++h) grad[h] -= priors_->dlogpdf_dlogx(theta_.lengthscales[h]);
      grad[d_] -= priors_->dlogpdf_dlogx(theta_.signal_variance);
      grad[d_ + 1] -= priors_->dlogpdf_dlogx(theta_.noise_variance);
    }
    return grad;
  }

 private:
  static bool theta_finite(const Hyperparams& theta) {
    for (Eigen::Index h = 0; h < theta.lengthscales.size(); ++h)
      if (!std::isfinite(theta.lengthscales[h]) || theta.lengthscales[h] <= 0.0) return false;
    return std::isfinite(theta.signal_variance) && theta.signal_variance > 0.0 &&
           std::isfinite(theta.noise_variance) && theta.noise_variance > 0.0;
  }

  LossKind kind_;
  const GammaPriors* priors_;
  Eigen::Index n_;
  int d_ = 0;
  Eigen::VectorXd y_;
  std::vector<Eigen::MatrixXd> diff2_;

  // cache of the last successful value()
  bool cached_ = false;
  Hyperparams theta_;
  Eigen::ArrayXXd s_, expterm_, K_;
  Eigen::MatrixXd L_;
  Eigen::VectorXd alpha_;
};

struct OptResult {
  Eigen::VectorXd u;
  double value = kInf;
  int iters = 0;
};

/// Dense BFGS with backtracking line search, projected onto the box.
inline OptResult bfgs_minimize(NegLoss& f, Eigen::VectorXd u0, const LogSpaceBox& box,
                               int max_iters) {
  const Eigen::Index m = u0.size();
  OptResult res;
  res.u = box.clamp(std::move(u0));
  res.value = f.value(res.u);
  if (!std::isfinite(res.value)) return res;

  Eigen::VectorXd g = f.gradient_at_last();
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(m, m);
  for (int it = 0; it < max_iters; ++it) {
    res.iters = it + 1;
    if (g.lpNorm<Eigen::Infinity>() < 1e-6) break;
    Eigen::VectorXd p = -(H * g);
    if (p.dot(g) >= 0.0) {
      p = -g;
      H.setIdentity();
    }
    // first trial moves at most ~2 log-units per coordinate; corner starts
    // otherwise propose enormous steps that waste dozens of halvings
    double t = std::min(1.0, 2.0 / std::max(1.0, p.lpNorm<Eigen::Infinity>()));
    Eigen::VectorXd un;
    double vn = kInf;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls) {
      un = box.clamp(res.u + t * p);
      const Eigen::VectorXd step = un - res.u;
      if (step.lpNorm<Eigen::Infinity>() < 1e-14) break;
      vn = f.value(un);
      if (std::isfinite(vn) && vn <= res.value + 1e-4 * g.dot(step)) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    Eigen::VectorXd gn = f.gradient_at_last();
    const Eigen::VectorXd s = un - res.u;
    const Eigen::VectorXd yv = gn - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m, m);
      H = (I - rho * s * yv.transpose()) * H * (I - rho * yv * s.transpose()) +
          rho * s * s.transpose();
    } else {
      H.setIdentity();
    }
    res.u = un;
    res.value = vn;
    g = std::move(gn);
  }
  return res;
}

inline Hyperparams optimize_loss(const std::vector<Eigen::VectorXd>& points,
                                 const std::vector<double>& values, const Bounds& bounds,
                                 const EstimatorConfig& cfg, Rng& rng,
                                 const Hyperparams* warm_start) {
  cfg.validate();
  if (points.empty()) throw InvalidState("hyperparameter estimation requires data");
  const double vy = value_scale2(values);
  const LogSpaceBox box = make_box(bounds, vy);
  NegLoss f(points, values, cfg.loss_kind, &cfg.priors);

  std::vector<Eigen::VectorXd> starts;
  if (warm_start) starts.push_back(log_from_theta(*warm_start));
  for (int r = 0; r < cfg.restarts; ++r) starts.push_back(draw_restart(bounds, vy, rng));

  OptResult best;
  for (const Eigen::VectorXd& u0 : starts) {
    OptResult r = bfgs_minimize(f, u0, box, cfg.max_iters);
    if (r.value < best.value) best = std::move(r);
  }
  if (!std::isfinite(best.value))
    throw NumericalError("hyperparameter estimation: every restart failed factorization",
                         max_jitter());
  return theta_from_log(best.u);
}

}  // namespace detail

/// Point estimate from the standard loss (MLL or MAP) on the given pairs.
/// Multi-start local search in log-space; the best restart wins. With a
/// fixed rng seed the result is bit-identical across calls.
inline Hyperparams estimate_map(const std::vector<Eigen::VectorXd>& points,
                                const std::vector<double>& values, const Bounds& bounds,
                                const EstimatorConfig& cfg, Rng& rng,
                                const Hyperparams* warm_start = nullptr) {
  return detail::optimize_loss(points, values, bounds, cfg, rng, warm_start);
}

inline Hyperparams estimate_map(const Dataset& data, const EstimatorConfig& cfg, Rng& rng,
                                const Hyperparams* warm_start = nullptr) {
  return estimate_map(data.points, data.values, data.bounds, cfg, rng, warm_start);
}

/// Consistent estimate: samples M_t uniform points, pseudo-labels them from
/// their nearest observed neighbors, and minimizes the configured loss over
/// the (x'_j, y(xhat'_j)) pairs. The pseudo pairs are used only here;
/// prediction always uses the original observed dataset.
inline std::pair<Hyperparams, PseudoDataset> estimate_consistent(
    const Dataset& data, const EstimatorConfig& cfg, Rng& rng,
    const Hyperparams* warm_start = nullptr) {
  cfg.validate();
  if (data.empty()) throw InvalidState("estimate_consistent: empty dataset");
  const std::size_t mt =
      static_cast<std::size_t>(std::ceil(cfg.mt_factor * static_cast<double>(data.size())));
  std::vector<Eigen::VectorXd> random_points;
  random_points.reserve(mt);
  for (std::size_t j = 0; j < mt; ++j) random_points.push_back(rng.uniform_in(data.bounds));
  PseudoDataset pseudo = match_nearest(data, random_points);
  Hyperparams theta = detail::optimize_loss(pseudo.random_points, pseudo.pseudo_values,
                                            data.bounds, cfg, rng, warm_start);
  return {std::move(theta), std::move(pseudo)};
}

}  // namespace uhebo

#endif  // UHEBO_ESTIMATION_HPP
