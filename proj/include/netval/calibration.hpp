#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netval/network.hpp"

namespace netval {

struct BalanceSheet {
  std::string id;
  double total_assets = 0.0;
  double capital = 0.0;
  double interbank_liabilities = 0.0;
};

struct Calibration {
  Eigen::VectorXd s;          // external (risky) assets
  Eigen::VectorXd external;   // obligations to society
  Eigen::VectorXd p_bar;      // total liabilities
  Eigen::VectorXd interbank;  // interbank liabilities = interbank assets
};

/// Stylized balance sheets: s = A - IB, L_ext = A - IB - C, p_bar = L_ext + IB.
Calibration calibrate(const std::vector<BalanceSheet>& sheets);

using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Off-diagonal entries kept independently with the given probability;
/// every row and column keeps at least one entry.
Mask random_mask(std::size_t n, double density, std::uint64_t seed);

/// Iterative proportional fitting from a seeded random start on the mask.
/// Margins are matched to 1e-12 relative; throws infeasible when they
/// cannot be reached.
Eigen::MatrixXd fill_matrix(const Eigen::VectorXd& row_sums, const Eigen::VectorXd& col_sums, const Mask& mask,
                            std::uint64_t seed);

struct CalibratedNetwork {
  FinancialNetwork network;
  Eigen::VectorXd s;
  std::vector<std::string> ids;
};

CalibratedNetwork calibrated_network(const std::vector<BalanceSheet>& sheets, double density, std::uint64_t seed,
                                     double alpha_x = 1.0, double alpha_L = 1.0);

/// d = p_bar / (cash + s q0 + Pi^T p_bar).
Eigen::VectorXd current_ratio(const FinancialNetwork& net, const Eigen::VectorXd& s, double q0,
                              const Eigen::VectorXd& cash);

/// Total liabilities reaching the target ratios with s fixed:
/// (I - diag(d) Pi^T) p_bar = diag(d)(cash + s q0).
FinancialNetwork ratio_via_liabilities(const FinancialNetwork& net, const Eigen::VectorXd& s,
                                       const Eigen::VectorXd& d, double q0, const Eigen::VectorXd& cash);

/// Investments reaching the target ratios with p_bar fixed:
/// s q0 = p_bar / d - Pi^T p_bar - cash.
Eigen::VectorXd ratio_via_assets(const FinancialNetwork& net, const Eigen::VectorXd& d, double q0,
                                 const Eigen::VectorXd& cash);

}  // namespace netval
