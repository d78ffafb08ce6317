#pragma once

#include <cstddef>
#include <optional>

#include <Eigen/Dense>

namespace netval {

/// Interbank network with a societal sink node.
///
/// Liabilities are stored as an n x (n+1) matrix whose last column holds the
/// obligations to society. Every bank must owe something to society, so
/// total liabilities are strictly positive and each row of the relative
/// liabilities matrix sums to strictly less than one.
///
/// Instances are immutable once built.
class FinancialNetwork {
 public:
  /// Validates and derives p_bar, Pi and pi_soc. Throws NetworkError naming
  /// the offending bank on: negative or non-finite entries, self-obligation,
  /// zero total liabilities, missing societal obligation, recovery rates
  /// outside [0,1], or a cross-ownership row summing to one or more.
  static FinancialNetwork build(const Eigen::MatrixXd& liabilities,
                                double alpha_x, double alpha_L,
                                std::optional<Eigen::MatrixXd> gamma = std::nullopt);

  /// Rebuilds the nominal liabilities L_ij = pi_ij * p_bar_i, with the
  /// societal column taken as 1 - sum_j pi_ij.
  static FinancialNetwork from_relative(const Eigen::MatrixXd& pi,
                                        const Eigen::VectorXd& p_bar,
                                        double alpha_x, double alpha_L,
                                        std::optional<Eigen::MatrixXd> gamma = std::nullopt);

  std::size_t size() const noexcept { return n_; }
  const Eigen::MatrixXd& liabilities() const noexcept { return liabilities_; }
  const Eigen::VectorXd& total_liabilities() const noexcept { return p_bar_; }
  const Eigen::MatrixXd& relative_liabilities() const noexcept { return pi_; }
  const Eigen::VectorXd& societal_share() const noexcept { return pi_soc_; }
  double alpha_x() const noexcept { return alpha_x_; }
  double alpha_L() const noexcept { return alpha_L_; }
  const std::optional<Eigen::MatrixXd>& cross_ownership() const noexcept { return gamma_; }

  bool full_recovery() const noexcept { return alpha_x_ == 1.0 && alpha_L_ == 1.0; }

  /// Nominal interbank assets Pi^T p_bar.
  Eigen::VectorXd interbank_assets() const;

  FinancialNetwork with_recovery(double alpha_x, double alpha_L) const;

  /// Same relative liabilities, new totals.
  FinancialNetwork with_total_liabilities(const Eigen::VectorXd& p_bar) const;

 private:
  FinancialNetwork() = default;

  std::size_t n_ = 0;
  Eigen::MatrixXd liabilities_;
  Eigen::VectorXd p_bar_;
  Eigen::MatrixXd pi_;
  Eigen::VectorXd pi_soc_;
  double alpha_x_ = 1.0;
  double alpha_L_ = 1.0;
  std::optional<Eigen::MatrixXd> gamma_;
};

}  // namespace netval
