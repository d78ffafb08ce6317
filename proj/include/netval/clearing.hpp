#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "netval/network.hpp"

namespace netval {

/// z_i = true when bank i defaults.
using DefaultSet = std::vector<bool>;

/// Wealths for a fixed default set are affine in the endowments:
/// V = slope * x - offset.
struct WealthLinearization {
  Eigen::MatrixXd slope;
  Eigen::VectorXd offset;

  Eigen::VectorXd wealth(const Eigen::VectorXd& x) const { return slope * x - offset; }
};

struct ClearingResult {
  Eigen::VectorXd wealth;    // V
  Eigen::VectorXd payments;  // p = p_bar - V^-
  Eigen::VectorXd equity;    // E = V^+
  DefaultSet defaults;       // z = 1{V < 0}
  std::size_t iterations = 0;
  double societal_payment = 0.0;
};

/// Sign tolerance used when classifying a wealth as negative.
double solvency_tolerance(double total_liability) noexcept;

/// One application of the clearing map with bankruptcy costs. Solvent
/// branch when V_i >= 0.
Eigen::VectorXd psi_star(const FinancialNetwork& net, const Eigen::VectorXd& x, const Eigen::VectorXd& wealth);

WealthLinearization linearize(const FinancialNetwork& net, const DefaultSet& defaults);
Eigen::MatrixXd delta_matrix(const FinancialNetwork& net, const DefaultSet& defaults);
Eigen::VectorXd delta_vector(const FinancialNetwork& net, const DefaultSet& defaults);

/// Greatest clearing wealths via the fictitious default algorithm.
ClearingResult greatest_clearing(const FinancialNetwork& net, const Eigen::VectorXd& x);

/// Reusable fictitious-default solver. Keeps its scratch buffers between
/// calls, so one engine per thread.
class ClearingEngine {
 public:
  explicit ClearingEngine(const FinancialNetwork& net);

  /// The returned reference is valid until the next call.
  const ClearingResult& solve(const Eigen::VectorXd& x);

 private:
  void assemble(const DefaultSet& defaults, const DefaultSet& holders, const Eigen::VectorXd& x);
  void solve_regime(const Eigen::VectorXd& x);

  const FinancialNetwork& net_;
  Eigen::MatrixXd pi_t_;
  Eigen::VectorXd interbank_assets_;
  Eigen::VectorXd tolerance_;
  DefaultSet holders_;  // banks whose equity is passed on
  Eigen::MatrixXd system_;
  Eigen::VectorXd rhs_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  ClearingResult result_;
};

}  // namespace netval
