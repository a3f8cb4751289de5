#ifndef UHEBO_KERNEL_HPP
#define UHEBO_KERNEL_HPP

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "uhebo/types.hpp"

namespace uhebo {

inline constexpr double kSqrt5 = 2.2360679774997896964;

/// Matern 5/2 with per-dimension (ARD) lengthscales:
///   k(x, x') = sigf2 * (1 + sqrt(5) r + 5 r^2 / 3) exp(-sqrt(5) r),
///   r^2 = sum_h (x_h - x'_h)^2 / l_h^2.
inline double matern52_ard(const Eigen::VectorXd& x, const Eigen::VectorXd& x2,
                           const Hyperparams& theta) {
  if (x.size() != theta.lengthscales.size() || x2.size() != theta.lengthscales.size())
    throw InvalidInput("matern52_ard: input dimension does not match lengthscales");
  const double r2 = ((x - x2).array() / theta.lengthscales.array()).square().sum();
  const double r = std::sqrt(r2);
  const double s = kSqrt5 * r;
  return theta.signal_variance * (1.0 + s + 5.0 * r2 / 3.0) * std::exp(-s);
}

inline Eigen::MatrixXd kernel_matrix(const std::vector<Eigen::VectorXd>& pts,
                                     const Hyperparams& theta) {
  const Eigen::Index n = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = theta.signal_variance;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = matern52_ard(pts[static_cast<std::size_t>(i)],
                                    pts[static_cast<std::size_t>(j)], theta);
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return K;
}

inline Eigen::VectorXd kernel_cross(const std::vector<Eigen::VectorXd>& pts,
                                    const Eigen::VectorXd& x, const Hyperparams& theta) {
  Eigen::VectorXd k(static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i)
    k[static_cast<Eigen::Index>(i)] = matern52_ard(pts[i], x, theta);
  return k;
}

namespace detail {

/// Pairwise pieces reused by the analytic log-space kernel gradients.
/// dK/dlog(l_h) = sigf2 * (5/3)(1 + sqrt(5) r) exp(-sqrt(5) r) * (d_h / l_h)^2
/// dK/dlog(sigf2) = K (kernel part only).
struct KernelDerivs {
  Eigen::MatrixXd K;     // kernel matrix (no noise)
  Eigen::MatrixXd B;     // sigf2 * (5/3)(1 + sqrt(5) r) exp(-sqrt(5) r)
  std::vector<Eigen::MatrixXd> S;  // per dim: ((x_h - x'_h)/l_h)^2
};

inline KernelDerivs kernel_derivs(const std::vector<Eigen::VectorXd>& pts,
                                  const Hyperparams& theta) {
  const Eigen::Index n = static_cast<Eigen::Index>(pts.size());
  const int d = theta.dim();
  KernelDerivs out;
  out.K.resize(n, n);
  out.B.resize(n, n);
  out.S.assign(static_cast<std::size_t>(d), Eigen::MatrixXd(n, n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      double r2 = 0.0;
      for (int h = 0; h < d; ++h) {
        const double dh = (pts[static_cast<std::size_t>(i)][h] -
                           pts[static_cast<std::size_t>(j)][h]) /
                          theta.lengthscales[h];
        const double s2 = dh * dh;
        out.S[static_cast<std::size_t>(h)](i, j) = s2;
        out.S[static_cast<std::size_t>(h)](j, i) = s2;
        r2 += s2;
      }
      const double r = std::sqrt(r2);
      const double e = std::exp(-kSqrt5 * r);
      const double k = theta.signal_variance * (1.0 + kSqrt5 * r + 5.0 * r2 / 3.0) * e;
      const double b = theta.signal_variance * (5.0 / 3.0) * (1.0 + kSqrt5 * r) * e;
      out.K(i, j) = k;
      out.K(j, i) = k;
      out.B(i, j) = b;
      out.B(j, i) = b;
    }
  }
  return out;
}

}  // namespace detail

}  // namespace uhebo

#endif  // UHEBO_KERNEL_HPP
