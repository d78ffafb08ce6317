#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netval/capm.hpp"
#include "netval/network.hpp"

namespace netval {

/// One tidy long-format record: param, bank, metric, value. Bank is a
/// 1-based label or "median" for cross-sectional medians.
struct StaticsRow {
  std::string param;
  std::string bank;
  std::string metric;
  double value = 0.0;
};

/// Betas set to beta for every bank with total volatilities held fixed
/// (gamma adjusted). Metrics: price_lower, price_upper, price_jensen,
/// qstar_lower, qstar_upper.
std::vector<StaticsRow> sweep_beta(const FinancialNetwork& net, const CapmParams& params,
                                   const std::vector<double>& grid);

/// Maturity sweep on the comonotonic (lower) price. Metrics: rate,
/// market_cap, rate_riskfree, market_cap_riskfree, rate_risky, market_cap_risky.
std::vector<StaticsRow> sweep_maturity(const FinancialNetwork& net, const CapmParams& params,
                                       const std::vector<double>& grid);

/// alpha_x = alpha_L = alpha. Metrics: price, rate, market_cap, plus medians.
std::vector<StaticsRow> sweep_alpha(const FinancialNetwork& net, const CapmParams& params,
                                    const std::vector<double>& grid);

enum class RatioRoute { assets, liabilities };

/// Debt-firm ratio grid over banks 1 and 2 (others keep their current
/// ratio). Param labels read "d1=<v>;d2=<v>". Infeasible points are skipped.
std::vector<StaticsRow> sweep_ratio(const FinancialNetwork& net, const CapmParams& params, RatioRoute route,
                                    const std::vector<double>& d1_grid, const std::vector<double>& d2_grid);

/// Median, averaging the two middle values for even counts.
double median(std::vector<double> values);

void write_statics_csv(std::ostream& os, const std::vector<StaticsRow>& rows);

}  // namespace netval
