#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "uhebo/benchmarks.hpp"

using namespace uhebo;

namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

/// Grid scan plus a test-local hill climb from the best grid point; the
/// 400^2 grid alone cannot resolve the h1 peak to 1e-3.
double grid_polish_max(const Objective& obj, int n) {
  REQUIRE(obj.dim == 2);
  Eigen::VectorXd best = obj.bounds.lo;
  double best_v = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Eigen::VectorXd x = vec2(
          obj.bounds.lo[0] + obj.bounds.span(0) * static_cast<double>(i) / static_cast<double>(n - 1),
          obj.bounds.lo[1] + obj.bounds.span(1) * static_cast<double>(j) / static_cast<double>(n - 1));
      const double v = obj.eval(x);
      if (v > best_v) {
        best_v = v;
        best = std::move(x);
      }
    }
  double step = std::max(obj.bounds.span(0), obj.bounds.span(1)) / static_cast<double>(n - 1);
  while (step > 1e-10) {
    bool improved = false;
    for (int h = 0; h < 2; ++h)
      for (double dir : {1.0, -1.0}) {
        Eigen::VectorXd x = best;
        x[h] = std::clamp(x[h] + dir * step, obj.bounds.lo[h], obj.bounds.hi[h]);
        const double v = obj.eval(x);
        if (v > best_v) {
          best_v = v;
          best = std::move(x);
          improved = true;
        }
      }
    if (!improved) step *= 0.5;
  }
  return best_v;
}

}  // namespace

TEST_CASE("branin values and symmetry", "[benchmarks]") {
  const Objective obj = branin();
  CHECK(obj.eval(vec2(M_PI, 2.275)) == Catch::Approx(-0.39788735772973834).epsilon(1e-12));
  CHECK(obj.eval(vec2(-M_PI, 12.275)) ==
        Catch::Approx(obj.eval(vec2(M_PI, 2.275))).margin(1e-9));
  // at x1 = pi/2 the cosine term vanishes: f = -(inner^2 + s)
  const double b = 5.1 / (4.0 * M_PI * M_PI);
  const double inner = 7.0 - b * (M_PI / 2.0) * (M_PI / 2.0) + (5.0 / M_PI) * (M_PI / 2.0) - 6.0;
  CHECK(obj.eval(vec2(M_PI / 2.0, 7.0)) == Catch::Approx(-(inner * inner + 10.0)).margin(1e-12));
  CHECK(obj.known_optimum->value == Catch::Approx(-0.39788735772973834));
}

TEST_CASE("hartmann3 values", "[benchmarks]") {
  const Objective obj = hartmann3();
  Eigen::VectorXd x(3);
  x << 0.114614, 0.555649, 0.852547;
  CHECK(obj.eval(x) == Catch::Approx(3.8627797869493366).epsilon(1e-12));
  CHECK(obj.eval(Eigen::VectorXd::Zero(3)) > 0.0);
  CHECK(std::isfinite(obj.eval(Eigen::VectorXd::Zero(3))));
  // sum of positive exponentials: the maximization target is positive everywhere
  Rng rng(3);
  for (int i = 0; i < 50; ++i) CHECK(obj.eval(rng.uniform_in(obj.bounds)) > 0.0);
  CHECK(obj.known_optimum->value == Catch::Approx(3.8627797873297335).epsilon(1e-12));
}

TEST_CASE("deceptive branch values and continuity", "[benchmarks]") {
  const Objective obj = deceptive(2);
  Eigen::VectorXd alpha(2);
  alpha << 1.0 / 3.0, 2.0 / 3.0;
  CHECK(obj.eval(alpha) == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(obj.eval(Eigen::VectorXd::Zero(2)) == Catch::Approx(0.64).epsilon(1e-12));

  for (int n : {2, 3}) {
    for (int i = 1; i <= n; ++i) {
      const double a = static_cast<double>(i) / static_cast<double>(n + 1);
      for (double b : {0.8 * a, a, (1.0 + 4.0 * a) / 5.0}) {
        const double lo = detail::deceptive_g(b - 1e-11, a);
        const double hi = detail::deceptive_g(b + 1e-11, a);
        CHECK(std::abs(hi - lo) < 1e-9);
      }
    }
  }
}

TEST_CASE("h1 values and decay", "[benchmarks]") {
  const Objective obj = h1();
  CHECK(obj.eval(vec2(8.6998, 6.7665)) == Catch::Approx(1.9999999999215801).epsilon(1e-12));
  Rng rng(5);
  for (int i = 0; i < 100; ++i) CHECK(obj.eval(rng.uniform_in(obj.bounds)) >= 0.0);
  // decays along rays away from the peak
  const Eigen::VectorXd peak = obj.known_optimum->x;
  for (double angle : {0.1, 1.3, 2.9, 4.2}) {
    Eigen::VectorXd dir = vec2(std::cos(angle), std::sin(angle));
    double prev = obj.eval(obj.bounds.project(peak + 8.0 * dir));
    for (double t : {12.0, 16.0, 20.0}) {
      const double v = obj.eval(obj.bounds.project(peak + t * dir));
      CHECK(v < prev + 0.3);  // allow local sine ripples, require overall decay
      prev = v;
    }
    CHECK(prev < 0.4);
  }
}

TEST_CASE("known optima agree with a grid-plus-polish oracle", "[benchmarks]") {
  for (const Objective& obj : {branin(), deceptive(2), h1()}) {
    INFO(obj.name);
    // the claimed optimizer attains the claimed value
    CHECK(obj.eval(obj.known_optimum->x) == Catch::Approx(obj.known_optimum->value).margin(1e-9));
    const double oracle = grid_polish_max(obj, 400);
    CHECK(std::abs(oracle - obj.known_optimum->value) <= 1e-3);
    CHECK(oracle <= obj.known_optimum->value + 1e-9);  // nothing beats the claimed optimum
  }
}

TEST_CASE("objective registry", "[benchmarks]") {
  for (const std::string& name : objective_names()) {
    const Objective obj = make_objective(name);
    CHECK(obj.name == name);
    CHECK(obj.dim >= 2);
    CHECK(obj.known_optimum.has_value());
    CHECK(obj.bounds.contains(obj.known_optimum->x));
    CHECK(obj.noise_std > 0.0);
    // noise-free evaluation is pure: bit-identical across calls
    const Eigen::VectorXd mid = 0.5 * (obj.bounds.lo + obj.bounds.hi);
    CHECK(obj.eval(mid) == obj.eval(mid));
  }
  CHECK_THROWS_AS(make_objective("rosenbrock"), ConfigError);
}
