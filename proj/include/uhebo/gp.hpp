#ifndef UHEBO_GP_HPP
#define UHEBO_GP_HPP

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "uhebo/kernel.hpp"
#include "uhebo/types.hpp"

namespace uhebo {

/// Independent Gamma(shape, scale) prior on every hyperparameter
/// (kernel variance, noise variance, each lengthscale).
struct GammaPriors {
  double shape = 1e-3;
  double scale = 10.0;
  bool enabled = true;

  static GammaPriors flat() {
    GammaPriors p;
    p.enabled = false;
    return p;
  }

  double log_pdf(double x) const {
    if (!enabled) return 0.0;
    if (!(shape > 0.0) || !(scale > 0.0)) throw InvalidInput("gamma prior shape/scale must be positive");
    return (shape - 1.0) * std::log(x) - x / scale - shape * std::log(scale) - std::lgamma(shape);
  }

  /// d log_pdf / d log(x) = (shape - 1) - x / scale.
  double dlogpdf_dlogx(double x) const { return enabled ? (shape - 1.0) - x / scale : 0.0; }

  double log_density(const Hyperparams& theta) const {
    if (!enabled) return 0.0;
    double s = log_pdf(theta.signal_variance) + log_pdf(theta.noise_variance);
    for (Eigen::Index h = 0; h < theta.lengthscales.size(); ++h) s += log_pdf(theta.lengthscales[h]);
    return s;
  }
};

namespace detail {

inline constexpr double kJitterLadder[] = {0.0, 1e-8, 1e-6, 1e-4};

/// Cholesky of K + sig2 I with escalating diagonal jitter.
/// Returns the lower factor and the jitter that succeeded, or nullopt.
inline std::optional<std::pair<Eigen::MatrixXd, double>> cholesky_with_jitter(
    const Eigen::MatrixXd& K, double sig2) {
  const Eigen::Index n = K.rows();
  for (double jitter : kJitterLadder) {
    Eigen::MatrixXd A = K;
    A.diagonal().array() += sig2 + jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd L = llt.matrixL();
      bool finite = true;
      for (Eigen::Index i = 0; i < n && finite; ++i) finite = std::isfinite(L(i, i)) && L(i, i) > 0.0;
      if (finite) return std::make_pair(std::move(L), jitter);
    }
  }
  return std::nullopt;
}

inline double max_jitter() { return kJitterLadder[3]; }

}  // namespace detail

/// Fitted GP: cached Cholesky factor of K + sig2 I (+jitter) and
/// alpha = (K + sig2 I)^-1 y. Immutable after construction.
struct GpPosterior {
  Dataset data;
  Hyperparams theta;
  Eigen::MatrixXd chol;   // lower triangular; 0x0 for an empty (prior-only) GP
  Eigen::VectorXd alpha;
  double jitter = 0.0;
};

/// Fits the posterior for the given data and hyperparameters. An empty
/// dataset yields a prior-only GP (zero mean, variance sigf2 everywhere).
inline GpPosterior fit_posterior(const Dataset& data, const Hyperparams& theta) {
  theta.validate(data.dim());
  GpPosterior gp;
  gp.data = data;
  gp.theta = theta;
  if (data.empty()) return gp;
  const Eigen::MatrixXd K = kernel_matrix(data.points, theta);
  auto fac = detail::cholesky_with_jitter(K, theta.noise_variance);
  if (!fac)
    throw NumericalError("fit_posterior: Cholesky failed at maximum jitter", detail::max_jitter());
  gp.chol = std::move(fac->first);
  gp.jitter = fac->second;
  gp.alpha = gp.chol.triangularView<Eigen::Lower>().solve(data.values_vec());
  gp.chol.transpose().triangularView<Eigen::Upper>().solveInPlace(gp.alpha);
  return gp;
}

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Predictive mean and variance at x. Variance is clamped to [0, sigf2];
/// a negative value below -1e-8 raises a NumericalError.
inline Prediction predict(const GpPosterior& gp, const Eigen::VectorXd& x) {
  if (x.size() != gp.theta.lengthscales.size()) throw InvalidInput("predict: dimension mismatch");
  if (gp.data.empty()) return {0.0, gp.theta.signal_variance};
  const Eigen::VectorXd k = kernel_cross(gp.data.points, x, gp.theta);
  const double mean = k.dot(gp.alpha);
  const Eigen::VectorXd v = gp.chol.triangularView<Eigen::Lower>().solve(k);
  double var = gp.theta.signal_variance - v.squaredNorm();
  if (var < -1e-8)
    throw NumericalError("predict: negative predictive variance " + std::to_string(var), gp.jitter);
  var = std::clamp(var, 0.0, gp.theta.signal_variance);
  return {mean, var};
}

/// log p(y | X, theta) = -1/2 y' (K + sig2 I)^-1 y - 1/2 log|K + sig2 I| - N/2 log 2pi.
inline double log_marginal_likelihood(const std::vector<Eigen::VectorXd>& points,
                                      const std::vector<double>& values,
                                      const Hyperparams& theta) {
  if (points.size() != values.size()) throw InvalidInput("points/values length mismatch");
  const Eigen::Index n = static_cast<Eigen::Index>(points.size());
  if (n == 0) return 0.0;
  const Eigen::MatrixXd K = kernel_matrix(points, theta);
  auto fac = detail::cholesky_with_jitter(K, theta.noise_variance);
  if (!fac)
    throw NumericalError("log_marginal_likelihood: Cholesky failed at maximum jitter",
                         detail::max_jitter());
  const Eigen::MatrixXd& L = fac->first;
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(values.data(), n);
  const Eigen::VectorXd a = L.triangularView<Eigen::Lower>().solve(y);
  return -0.5 * a.squaredNorm() - L.diagonal().array().log().sum() -
         0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
}

inline double log_marginal_likelihood(const Dataset& data, const Hyperparams& theta) {
  return log_marginal_likelihood(data.points, data.values, theta);
}

/// Log posterior: log marginal likelihood plus the Gamma log-prior over all
/// hyperparameters.
inline double log_posterior(const std::vector<Eigen::VectorXd>& points,
                            const std::vector<double>& values, const Hyperparams& theta,
                            const GammaPriors& priors) {
  return log_marginal_likelihood(points, values, theta) + priors.log_density(theta);
}

inline double log_posterior(const Dataset& data, const Hyperparams& theta,
                            const GammaPriors& priors) {
  return log_posterior(data.points, data.values, theta, priors);
}

/// Gradient of the selected log objective (MLL, plus log-prior when `priors`
/// is non-null) with respect to log-parametrized theta. Component order:
/// [log l_0 .. log l_{d-1}, log sigf2, log sig2].
///
/// Kernel part: dL/dtheta_j = 1/2 tr((alpha alpha' - A^-1) dA/dtheta_j),
/// A = K + sig2 I.
inline Eigen::VectorXd loss_gradient(const std::vector<Eigen::VectorXd>& points,
                                     const std::vector<double>& values, const Hyperparams& theta,
                                     const GammaPriors* priors = nullptr) {
  if (points.size() != values.size()) throw InvalidInput("points/values length mismatch");
  const int d = theta.dim();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(d + 2);
  const Eigen::Index n = static_cast<Eigen::Index>(points.size());
  if (n > 0) {
    detail::KernelDerivs kd = detail::kernel_derivs(points, theta);
    auto fac = detail::cholesky_with_jitter(kd.K, theta.noise_variance);
    if (!fac)
      throw NumericalError("loss_gradient: Cholesky failed at maximum jitter",
                           detail::max_jitter());
    const Eigen::MatrixXd& L = fac->first;
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(values.data(), n);
    Eigen::VectorXd alpha = L.triangularView<Eigen::Lower>().solve(y);
    L.transpose().triangularView<Eigen::Upper>().solveInPlace(alpha);
    Eigen::MatrixXd Ainv = Eigen::MatrixXd::Identity(n, n);
    L.triangularView<Eigen::Lower>().solveInPlace(Ainv);
    L.transpose().triangularView<Eigen::Upper>().solveInPlace(Ainv);
    const Eigen::MatrixXd W = alpha * alpha.transpose() - Ainv;
    for (int h = 0; h < d; ++h)
      grad[h] = 0.5 * (W.array() * (kd.B.array() * kd.S[static_cast<std::size_t>(h)].array())).sum();
    grad[d] = 0.5 * (W.array() * kd.K.array()).sum();
    grad[d + 1] = 0.5 * theta.noise_variance * W.trace();
  }
  if (priors && priors->enabled) {
    for (int h = 0; h < d; ++h) grad[h] += priors->dlogpdf_dlogx(theta.lengthscales[h]);
    grad[d] += priors->dlogpdf_dlogx(theta.signal_variance);
    grad[d + 1] += priors->dlogpdf_dlogx(theta.noise_variance);
  }
  return grad;
}

}  // namespace uhebo

#endif  // UHEBO_GP_HPP
