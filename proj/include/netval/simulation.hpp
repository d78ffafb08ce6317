#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>

#include <Eigen/Dense>

#include "netval/capm.hpp"
#include "netval/factor_model.hpp"
#include "netval/network.hpp"

namespace netval {

using ScenarioMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// X = f(q) with q drawn from the model's factor law.
struct ComonotonicFactorSpec {
  FactorModel model;
};

enum class Measure { risk_neutral, physical };

/// Terminal CAPM endowments. Under the physical measure each path carries
/// its dQ/dP density as a weight.
struct CapmSpec {
  CapmParams params;
  Measure measure = Measure::risk_neutral;
  /// Correlation of the idiosyncratic Brownian motions; identity when empty.
  Eigen::MatrixXd idiosyncratic_correlation;
};

/// X_i = exp(mu_i + sigma_i Z_i), Z ~ N(0, correlation).
struct GaussianCopulaLognormalSpec {
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma;
  Eigen::MatrixXd correlation;
};

/// Finitely many joint scenarios (rows) with probabilities.
struct FiniteSupportSpec {
  ScenarioMatrix scenarios;
  Eigen::VectorXd probabilities;
  /// Enumerate the scenarios with their probabilities instead of sampling.
  bool exact = true;
};

using SimulationSpec = std::variant<ComonotonicFactorSpec, CapmSpec, GaussianCopulaLognormalSpec, FiniteSupportSpec>;

const char* spec_name(const SimulationSpec& spec) noexcept;

struct ScenarioBatch {
  ScenarioMatrix endowments;  // paths x banks
  Eigen::VectorXd factor;     // per path, when the spec has a scalar factor
  /// Empty: equally weighted draws. Exact batches: probabilities summing to
  /// one. Otherwise: likelihood ratios multiplying each draw.
  Eigen::VectorXd weights;
  bool exact = false;
  std::string generator;
  std::uint64_t seed = 0;

  std::size_t paths() const noexcept { return static_cast<std::size_t>(endowments.rows()); }
  std::size_t banks() const noexcept { return static_cast<std::size_t>(endowments.cols()); }
};

/// splitmix64 stream keyed by (seed, path); independent of thread layout.
class PathRng {
 public:
  using result_type = std::uint64_t;
  PathRng(std::uint64_t seed, std::uint64_t path) noexcept;
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }
  result_type operator()() noexcept;
  /// Uniform on the open interval (0,1).
  double uniform() noexcept;

 private:
  std::uint64_t state_;
};

ScenarioBatch simulate(const SimulationSpec& spec, std::size_t n_paths, std::uint64_t seed);

struct Estimate {
  Eigen::VectorXd mean;
  Eigen::VectorXd se;
};

struct McExpectations {
  Estimate default_probability;
  Estimate wealth;
  Estimate payment;
  Estimate equity;
  double sector_equity = 0.0;  // sum of bank equities
  double sector_equity_se = 0.0;
  double societal_payment = 0.0;
  double societal_payment_se = 0.0;
  std::size_t paths = 0;
};

/// Averages greatest_clearing over the batch; SE = sample std / sqrt(paths)
/// (zero for exact batches).
McExpectations mc_expectations(const FinancialNetwork& net, const ScenarioBatch& batch);

/// Runs body(begin, end) over fixed-size chunks of [0, count) on up to
/// `threads` workers (0 = hardware concurrency). Chunking is independent of
/// the thread count.
void parallel_chunks(std::size_t count, std::size_t chunk, unsigned threads,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& body);

}  // namespace netval
