#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "netval/comonotonic.hpp"
#include "netval/factor_model.hpp"
#include "netval/network.hpp"

namespace netval {

/// Market model for the risky investments. Bank i holds s_i units of a
/// portfolio started at q0 with market beta beta_i and idiosyncratic
/// volatility gamma_i, plus an optional risk-free cash position.
struct CapmParams {
  double r = 0.0;
  double T = 1.0;
  double sigma_M = 1.0;
  double mu_M = 0.0;  // physical drift, Monte Carlo only
  double q0 = 1.0;
  Eigen::VectorXd beta;
  Eigen::VectorXd gamma;
  Eigen::VectorXd sigma;  // sqrt(beta^2 sigma_M^2 + gamma^2); filled by complete() when empty
  Eigen::VectorXd s;
  Eigen::VectorXd cash;   // time-0 value, grows at r; zero when empty

  /// Fills sigma and cash when empty, then validates against n banks.
  CapmParams& complete(std::size_t n);
  void validate(std::size_t n) const;

  bool homogeneous() const;
};

enum class Bound { lower, upper };

const char* to_string(Bound b) noexcept;

/// Per-bank exponent vector z: sigma for the lower bound, beta * sigma_M for the upper.
Eigen::VectorXd bound_exponents(const CapmParams& params, Bound which);

/// exp((1 - z_i/sigma_M)(r + z_i sigma_M / 2) T) * qT^(z_i/sigma_M)
Eigen::VectorXd hat_eta(const Eigen::VectorXd& z, double qT, const CapmParams& params);

/// Factor model for X = cash e^{rT} + s q0 hat_eta(z), driven by the
/// risk-neutral normalized market value qT / q0.
FactorModel capm_factor_model(const CapmParams& params, const Eigen::VectorXd& z);

struct DebtPriceResult {
  Eigen::VectorXd price;       // E[e^{-rT} p_i] / p_bar_i, in [0, e^{-rT}]
  Eigen::VectorXd market_cap;  // E[e^{-rT} E_i]
  Eigen::VectorXd rate;        // effective interest rate
  SolvencyThresholds thresholds;
  bool bound_guarantee = true;
};

/// Closed-form comonotonic price of every bank's debt. Refuses networks
/// with bankruptcy costs unless `force` is set, in which case the result is
/// flagged as carrying no bound guarantee.
DebtPriceResult debt_price_bound(const FinancialNetwork& net, const CapmParams& params, Bound which,
                                 bool force = false);

/// Same as debt_price_bound but with thresholds supplied by the caller.
DebtPriceResult debt_price_from_thresholds(const FinancialNetwork& net, const CapmParams& params,
                                           const Eigen::VectorXd& z, SolvencyThresholds thresholds);

/// Thresholds for equal betas and gammas, obtained by rescaling those of
/// the pure market model f(q) = s q. Requires zero cash and z > 0.
SolvencyThresholds homogeneous_thresholds(const FinancialNetwork& net, const CapmParams& params, double z);

Eigen::VectorXd market_cap(const FinancialNetwork& net, const CapmParams& params, Bound which, bool force = false);

/// (1/T)[log p_bar - log price]; +inf for a zero price.
double effective_rate(double discounted_price, double p_bar, double T);

enum class BaselineMode { riskfree_interbank, risky_interbank };

struct BaselineResult {
  Eigen::VectorXd price;  // per unit of face value
  Eigen::VectorXd rate;
  Eigen::VectorXd market_cap;
};

/// Single-firm structural prices without contagion: each bank on its own,
/// with its interbank assets either paid in full in cash at maturity or
/// invested in its risky portfolio.
BaselineResult merton_baseline(const FinancialNetwork& net, const CapmParams& params, BaselineMode mode);

}  // namespace netval
