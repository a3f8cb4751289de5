#ifndef UHEBO_TYPES_HPP
#define UHEBO_TYPES_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace uhebo {

class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvalidState : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ProtocolError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Linear-algebra failure that survived the jitter escalation ladder.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double attempted_jitter)
      : std::runtime_error(what), attempted_jitter_(attempted_jitter) {}
  double attempted_jitter() const { return attempted_jitter_; }

 private:
  double attempted_jitter_ = 0.0;
};

/// Objective evaluation failure, annotated with the loop iteration.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(const std::string& what, int iteration)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}
  int iteration() const { return iteration_; }

 private:
  int iteration_ = 0;
};

/// Axis-aligned box domain, one [lo, hi] pair per dimension.
struct Bounds {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  Bounds() = default;
  Bounds(Eigen::VectorXd lo_in, Eigen::VectorXd hi_in) : lo(std::move(lo_in)), hi(std::move(hi_in)) {
    if (lo.size() != hi.size()) throw InvalidInput("bounds lo/hi dimension mismatch");
    for (Eigen::Index h = 0; h < lo.size(); ++h) {
      if (!(lo[h] <= hi[h])) throw InvalidInput("bounds require lo <= hi in every dimension");
    }
  }

  int dim() const { return static_cast<int>(lo.size()); }
  double span(int h) const { return hi[h] - lo[h]; }

  bool contains(const Eigen::VectorXd& x) const {
    if (x.size() != lo.size()) return false;
    for (Eigen::Index h = 0; h < lo.size(); ++h) {
      if (x[h] < lo[h] || x[h] > hi[h]) return false;
    }
    return true;
  }

  Eigen::VectorXd project(Eigen::VectorXd x) const {
    for (Eigen::Index h = 0; h < lo.size(); ++h) x[h] = std::clamp(x[h], lo[h], hi[h]);
    return x;
  }

  static Bounds cube(int d, double lo_v, double hi_v) {
    return Bounds(Eigen::VectorXd::Constant(d, lo_v), Eigen::VectorXd::Constant(d, hi_v));
  }
};

/// GP hyperparameters: ARD lengthscales, signal variance, noise variance.
struct Hyperparams {
  Eigen::VectorXd lengthscales;
  double signal_variance = 1.0;
  double noise_variance = 1e-2;

  Hyperparams() = default;
  Hyperparams(Eigen::VectorXd ls, double sigf2, double sig2)
      : lengthscales(std::move(ls)), signal_variance(sigf2), noise_variance(sig2) {}

  int dim() const { return static_cast<int>(lengthscales.size()); }

  void validate(int expected_dim) const {
    if (dim() != expected_dim) throw InvalidInput("lengthscale vector length != problem dimension");
    for (Eigen::Index h = 0; h < lengthscales.size(); ++h) {
      if (!(lengthscales[h] > 0.0) || !std::isfinite(lengthscales[h]))
        throw InvalidInput("lengthscales must be strictly positive");
    }
    if (!(signal_variance > 0.0) || !std::isfinite(signal_variance))
      throw InvalidInput("signal variance must be strictly positive");
    if (!(noise_variance > 0.0) || !std::isfinite(noise_variance))
      throw InvalidInput("noise variance must be strictly positive");
  }
};

/// Ordered observations; the iteration index is the list index.
struct Dataset {
  Bounds bounds;
  std::vector<Eigen::VectorXd> points;
  std::vector<double> values;

  Dataset() = default;
  explicit Dataset(Bounds b) : bounds(std::move(b)) {}

  int dim() const { return bounds.dim(); }
  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  void add(Eigen::VectorXd x, double y) {
    if (x.size() != bounds.lo.size()) throw InvalidInput("point dimension mismatch");
    if (!bounds.contains(x)) throw InvalidInput("point outside bounds");
    points.push_back(std::move(x));
    values.push_back(y);
  }

  Eigen::VectorXd values_vec() const {
    return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  }
};

/// Deterministic RNG with pinned uniform/normal mappings so that seeded
/// streams are identical across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  Eigen::VectorXd uniform_in(const Bounds& b) {
    Eigen::VectorXd x(b.dim());
    for (int h = 0; h < b.dim(); ++h) x[h] = uniform(b.lo[h], b.hi[h]);
    return x;
  }

  /// Standard normal via Box-Muller (one spare cached per pair).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// Index sampled from a discrete distribution by inverse CDF.
  int categorical(const Eigen::VectorXd& probs) {
    const double u = uniform01();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size() - 1);
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace uhebo

#endif  // UHEBO_TYPES_HPP
