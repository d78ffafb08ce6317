#pragma once

#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "netval/factor_model.hpp"
#include "netval/network.hpp"

namespace netval {

struct PointMassMarginal {
  double value = 0.0;
};
struct FiniteSupportMarginal {
  std::vector<double> values;
  std::vector<double> probabilities;
};
struct LogNormalMarginal {
  double mu = 0.0;
  double sigma = 1.0;
};

using Marginal = std::variant<PointMassMarginal, FiniteSupportMarginal, LogNormalMarginal>;

/// Marginal laws of the endowments, one per bank.
class MarginalSet {
 public:
  explicit MarginalSet(std::vector<Marginal> marginals);

  std::size_t size() const noexcept { return marginals_.size(); }
  const std::vector<Marginal>& marginals() const noexcept { return marginals_; }

  Eigen::VectorXd mean() const;
  /// Generalized inverse CDF inf{x : F(x) >= u} of bank i.
  double quantile(std::size_t i, double u) const;
  /// The comonotonic coupling as a factor model driven by a uniform factor.
  FactorModel comonotonic_model() const;

 private:
  std::vector<Marginal> marginals_;
};

struct BoundValues {
  Eigen::VectorXd wealth;
  Eigen::VectorXd payment;
};

/// E[V(Z)], E[p(Z)] for the comonotonic coupling Z of the marginals.
BoundValues comonotonic_lower(const FinancialNetwork& net, const MarginalSet& marginals);
/// V(E[X]), p(E[X]).
BoundValues jensen_upper(const FinancialNetwork& net, const Eigen::VectorXd& mean_x);
/// E[V(E[X|q])], E[p(E[X|q])] for caller-supplied conditional means.
BoundValues conditional_upper(const FinancialNetwork& net, const FactorModel& conditional);

}  // namespace netval
