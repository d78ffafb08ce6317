#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace netval {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Endowment maps q -> f_i(q). All are nondecreasing and nonnegative.

struct AffineMap {
  double intercept = 0.0;
  double slope = 0.0;
};

/// shift + scale * exp(log_factor) * q^exponent
struct PowerMap {
  double scale = 1.0;
  double log_factor = 0.0;
  double exponent = 1.0;
  double shift = 0.0;
};

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes),
/// constant outside the knot range.
struct TabulatedMap {
  std::vector<double> knots;
  std::vector<double> values;
  std::vector<double> slopes;
};

/// Quantile of a lognormal law, u -> exp(mu + sigma * Phi^{-1}(u)), u in [0,1].
struct LognormalQuantileMap {
  double mu = 0.0;
  double sigma = 1.0;
};

/// Generalized inverse of a finite-support CDF, u -> inf{x : F(x) >= u}.
struct StepQuantileMap {
  std::vector<double> values;      // sorted ascending
  std::vector<double> cumulative;  // F at each value; last entry is 1
};

class EndowmentMap {
 public:
  using Kind = std::variant<AffineMap, PowerMap, TabulatedMap, LognormalQuantileMap, StepQuantileMap>;

  static EndowmentMap affine(double intercept, double slope);
  static EndowmentMap power(double scale, double log_factor, double exponent, double shift = 0.0);
  static EndowmentMap tabulated(std::vector<double> knots, std::vector<double> values);
  static EndowmentMap lognormal_quantile(double mu, double sigma);
  /// Values need not be sorted; probabilities must sum to one.
  static EndowmentMap step_quantile(std::vector<double> values, std::vector<double> probabilities);

  double operator()(double q) const;

  /// Largest admissible factor value: +inf, or 1 for quantile maps.
  double domain_max() const;

  /// Smallest q >= 0 with f(q) >= y for continuous strictly increasing maps;
  /// nullopt for map types without a closed-form inverse.
  std::optional<double> inverse(double y) const;

  /// Points of discontinuity (step maps only).
  std::vector<double> jumps() const;

  const Kind& kind() const noexcept { return kind_; }

 private:
  explicit EndowmentMap(Kind kind) : kind_(std::move(kind)) {}
  Kind kind_;
};

struct LogNormalLaw {
  double mu = 0.0;
  double sigma = 1.0;
};
struct PointMassLaw {
  std::vector<double> points;
  std::vector<double> weights;
};
struct EmpiricalLaw {
  std::vector<double> samples;  // sorted ascending
};
struct UniformLaw {};

/// Law of the nonnegative scalar factor q.
class FactorDistribution {
 public:
  using Kind = std::variant<LogNormalLaw, PointMassLaw, EmpiricalLaw, UniformLaw>;

  static FactorDistribution lognormal(double mu, double sigma);
  static FactorDistribution point_masses(std::vector<double> points, std::vector<double> weights);
  static FactorDistribution point_mass(double point) { return point_masses({point}, {1.0}); }
  static FactorDistribution empirical(std::vector<double> samples);
  static FactorDistribution uniform();

  /// P(a <= q < b).
  double probability(double a, double b) const;
  /// Inverse CDF, used for sampling.
  double quantile(double u) const;
  double support_max() const;

  const Kind& kind() const noexcept { return kind_; }

 private:
  explicit FactorDistribution(Kind kind) : kind_(std::move(kind)) {}
  Kind kind_;
};

struct IntervalMoments {
  double probability = 0.0;          // P(q in [a,b))
  double partial_expectation = 0.0;  // E[f(q) 1{q in [a,b)}]
};

/// Closed forms for lognormal factors with affine/power maps, for uniform
/// factors with quantile maps, and finite sums for discrete laws; adaptive
/// quadrature otherwise. Requires 0 <= a <= b (b may be +inf).
IntervalMoments partial_expectation(const FactorDistribution& dist, const EndowmentMap& f, double a, double b);

/// Single-factor comonotonic endowment model X = f(q).
class FactorModel {
 public:
  /// Checks each map is nonnegative and nondecreasing on a sampling grid and
  /// that the factor support lies inside every map's domain.
  FactorModel(std::vector<EndowmentMap> maps, FactorDistribution dist);

  std::size_t size() const noexcept { return maps_.size(); }
  const std::vector<EndowmentMap>& maps() const noexcept { return maps_; }
  const FactorDistribution& distribution() const noexcept { return dist_; }

  Eigen::VectorXd endowments(double q) const;
  double domain_max() const noexcept { return domain_max_; }
  /// Union of all jump points, sorted.
  const std::vector<double>& jumps() const noexcept { return jumps_; }

 private:
  std::vector<EndowmentMap> maps_;
  FactorDistribution dist_;
  double domain_max_ = kInfinity;
  std::vector<double> jumps_;
};

}  // namespace netval
