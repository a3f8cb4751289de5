#ifndef UHEBO_BENCHMARKS_HPP
#define UHEBO_BENCHMARKS_HPP

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "uhebo/types.hpp"

namespace uhebo {

struct Optimum {
  Eigen::VectorXd x;
  double value = 0.0;
};

/// Black-box objective in maximization convention. `eval` is noise-free;
/// observation noise (additive Gaussian, `noise_std`) is applied by the
/// runner, never by regret bookkeeping.
struct Objective {
  std::string name;
  int dim = 0;
  Bounds bounds;
  std::function<double(const Eigen::VectorXd&)> eval;
  double noise_std = 0.0;
  std::optional<Optimum> known_optimum;
};

namespace detail {

inline Eigen::VectorXd vecd(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) x[i++] = e;
  return x;
}

}  // namespace detail

/// Branin, negated for maximization. Standard domain x1 in [-5,10],
/// x2 in [0,15]; three global optima with value -0.397887...
inline Objective branin() {
  Objective obj;
  obj.name = "branin";
  obj.dim = 2;
  obj.bounds = Bounds(detail::vecd({-5.0, 0.0}), detail::vecd({10.0, 15.0}));
  obj.eval = [](const Eigen::VectorXd& x) {
    const double a = 1.0;
    const double b = 5.1 / (4.0 * M_PI * M_PI);
    const double c = 5.0 / M_PI;
    const double r = 6.0;
    const double s = 10.0;
    const double t = 1.0 / (8.0 * M_PI);
    const double inner = x[1] - b * x[0] * x[0] + c * x[0] - r;
    return -(a * inner * inner + s * (1.0 - t) * std::cos(x[0]) + s);
  };
  obj.noise_std = 0.01 * 307.7;  // 1% of the value range over the domain
  obj.known_optimum = Optimum{detail::vecd({M_PI, 2.275}), -0.39788735772973834};
  return obj;
}

/// Hartmann 3-D on [0,1]^3; the leading minus in the printed formula makes
/// the negated sum the natural maximization target (max ~ 3.86278).
inline Objective hartmann3() {
  Objective obj;
  obj.name = "hartmann3";
  obj.dim = 3;
  obj.bounds = Bounds::cube(3, 0.0, 1.0);
  obj.eval = [](const Eigen::VectorXd& x) {
    static const double alpha[4] = {1.0, 1.2, 3.0, 3.2};
    static const double A[4][3] = {
        {3.0, 10.0, 30.0}, {0.1, 10.0, 35.0}, {3.0, 10.0, 30.0}, {0.1, 10.0, 35.0}};
    static const double P[4][3] = {{0.3689, 0.1170, 0.2673},
                                   {0.4699, 0.4387, 0.7470},
                                   {0.1091, 0.8732, 0.5547},
                                   {0.0381, 0.5743, 0.8828}};
    double total = 0.0;
    for (int i = 0; i < 4; ++i) {
      double inner = 0.0;
      for (int j = 0; j < 3; ++j) {
        const double dj = x[j] - P[i][j];
        inner += A[i][j] * dj * dj;
      }
      total += alpha[i] * std::exp(-inner);
    }
    return total;
  };
  obj.noise_std = 0.01 * 3.86;
  obj.known_optimum =
      Optimum{detail::vecd({0.11459107670037848, 0.55564888938794383, 0.8525469796835558}),
              3.8627797873297335};
  return obj;
}

namespace detail {

/// Piecewise-linear deceptive profile with alpha_i = i/(n+1); continuous,
/// peaks at g(alpha_i) = 1, local ends at 4/5.
inline double deceptive_g(double x, double alpha) {
  if (x <= 0.8 * alpha) return -x / alpha + 0.8;
  if (x <= alpha) return 5.0 * x / alpha - 4.0;
  if (x <= (1.0 + 4.0 * alpha) / 5.0) return 5.0 * (x - alpha) / (alpha - 1.0) + 1.0;
  return (x - 1.0) / (1.0 - alpha) + 0.8;
}

}  // namespace detail

/// Deceptive function on [0,1]^n with beta = 2, maximized as -f; global
/// optimum +1 at x_i = alpha_i, misleading local structure toward the corners.
inline Objective deceptive(int n) {
  if (n < 1) throw InvalidInput("deceptive: dimension must be >= 1");
  Objective obj;
  obj.name = "deceptive";
  obj.dim = n;
  obj.bounds = Bounds::cube(n, 0.0, 1.0);
  obj.eval = [n](const Eigen::VectorXd& x) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
      sum += detail::deceptive_g(x[i], static_cast<double>(i + 1) / static_cast<double>(n + 1));
    const double mean = sum / static_cast<double>(n);
    return mean * mean;  // -f with f = -(mean)^beta, beta = 2
  };
  obj.noise_std = 0.01 * 1.0;
  Eigen::VectorXd xstar(n);
  for (int i = 0; i < n; ++i) xstar[i] = static_cast<double>(i + 1) / static_cast<double>(n + 1);
  obj.known_optimum = Optimum{xstar, 1.0};
  return obj;
}

/// h1 on [-25,25]^2, maximized directly; sharp peak of height ~2 near
/// (8.6998, 6.7665) over a slowly decaying plateau.
inline Objective h1() {
  Objective obj;
  obj.name = "h1";
  obj.dim = 2;
  obj.bounds = Bounds::cube(2, -25.0, 25.0);
  obj.eval = [](const Eigen::VectorXd& x) {
    const double s1 = std::sin(x[0] - x[1] / 8.0);
    const double s2 = std::sin(x[1] + x[0] / 8.0);
    const double d1 = x[0] - 8.6998;
    const double d2 = x[1] - 6.7665;
    return (s1 * s1 + s2 * s2) / std::sqrt(d1 * d1 + d2 * d2 + 1.0);
  };
  obj.noise_std = 0.01 * 2.0;
  obj.known_optimum =
      Optimum{detail::vecd({8.6997975011330478, 6.7665036550586966}), 1.9999999999610940};
  return obj;
}

inline std::vector<std::string> objective_names() { return {"branin", "hartmann3", "deceptive", "h1"}; }

/// Registry keyed by name; "deceptive" is the 2-D variant used in the
/// experiments.
inline Objective make_objective(const std::string& name) {
  if (name == "branin") return branin();
  if (name == "hartmann3") return hartmann3();
  if (name == "deceptive") return deceptive(2);
  if (name == "h1") return h1();
  throw ConfigError("unknown objective: " + name);
}

}  // namespace uhebo

#endif  // UHEBO_BENCHMARKS_HPP
