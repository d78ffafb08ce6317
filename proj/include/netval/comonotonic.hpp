#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "netval/clearing.hpp"
#include "netval/factor_model.hpp"
#include "netval/network.hpp"

namespace netval {

/// Factor levels at which each bank becomes solvent, with the banks sorted
/// by decreasing threshold and the linearization of the wealths on every
/// default regime of the factor line.
struct SolvencyThresholds {
  Eigen::VectorXd q_star;          // per bank, original labels
  std::vector<std::size_t> order;  // order[k] = bank with the (k+1)-th largest threshold
  std::vector<std::size_t> position;
  /// ladder[k] linearizes V when exactly the first k banks of `order` default, k = 0..n.
  std::vector<WealthLinearization> ladder;

  std::size_t size() const noexcept { return order.size(); }
  /// Sorted threshold with sentinels: sorted(0) = +inf, sorted(n+1) = 0.
  double sorted(std::size_t k) const;
  /// Default set of regime k.
  DefaultSet regime(std::size_t k) const;
};

SolvencyThresholds solvency_thresholds(const FinancialNetwork& net, const FactorModel& model);

struct ExpectedClearing {
  Eigen::VectorXd default_probability;
  Eigen::VectorXd wealth;
  Eigen::VectorXd payment;
  Eigen::VectorXd equity;
};

ExpectedClearing expected_values(const FinancialNetwork& net, const FactorModel& model);
ExpectedClearing expected_values(const FinancialNetwork& net, const FactorModel& model,
                                 const SolvencyThresholds& thresholds);

}  // namespace netval
