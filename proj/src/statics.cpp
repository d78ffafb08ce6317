#include "netval/statics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "netval/calibration.hpp"
#include "netval/clearing.hpp"
#include "netval/error.hpp"
#include "netval/io.hpp"
#include "netval/simulation.hpp"

namespace netval {

namespace {

using Block = std::vector<StaticsRow>;

std::string bank_label(Eigen::Index i) { return std::to_string(i + 1); }

void per_bank(Block& out, const std::string& param, const char* metric, const Eigen::VectorXd& v,
              bool with_median) {
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back({param, bank_label(i), metric, v(i)});
  if (with_median) out.push_back({param, "median", metric, median({v.data(), v.data() + v.size()})});
}

// Evaluates every grid point independently and concatenates in grid order.
template <class F>
std::vector<StaticsRow> sweep(std::size_t points, F&& point) {
  std::vector<Block> blocks(points);
  parallel_chunks(points, 1, 0, [&](std::size_t, std::size_t b, std::size_t) { blocks[b] = point(b); });
  std::vector<StaticsRow> out;
  for (auto& b : blocks) out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorKind::invalid_input, "median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  if (values.size() % 2 == 1) return values[m];
  return 0.5 * (values[m - 1] + values[m]);
}

std::vector<StaticsRow> sweep_beta(const FinancialNetwork& net, const CapmParams& params,
                                   const std::vector<double>& grid) {
  params.validate(net.size());
  return sweep(grid.size(), [&](std::size_t k) {
    const double beta = grid[k];
    CapmParams p = params;
    for (Eigen::Index i = 0; i < p.beta.size(); ++i) {
      const double idio = p.sigma(i) * p.sigma(i) - beta * beta * p.sigma_M * p.sigma_M;
      if (beta < 0.0 || idio < -1e-12) {
        throw Error(ErrorKind::invalid_input,
                    fmt::format("beta {} exceeds sigma / sigma_M for bank {}", beta, i + 1));
      }
      p.beta(i) = beta;
      p.gamma(i) = std::sqrt(std::max(0.0, idio));
      p.sigma(i) = std::sqrt(beta * beta * p.sigma_M * p.sigma_M + p.gamma(i) * p.gamma(i));
    }
    const auto lower = debt_price_bound(net, p, Bound::lower);
    const auto upper = debt_price_bound(net, p, Bound::upper);
    const double growth = std::exp(p.r * p.T);
    const Eigen::VectorXd mean_x = (p.cash + p.s * p.q0) * growth;
    const auto at_mean = greatest_clearing(net, mean_x);
    const Eigen::VectorXd jensen =
        std::exp(-p.r * p.T) * at_mean.payments.cwiseQuotient(net.total_liabilities());

    Block out;
    const auto param = format_number(beta);
    per_bank(out, param, "price_lower", lower.price, false);
    per_bank(out, param, "price_upper", upper.price, false);
    per_bank(out, param, "price_jensen", jensen, false);
    per_bank(out, param, "qstar_lower", lower.thresholds.q_star, false);
    per_bank(out, param, "qstar_upper", upper.thresholds.q_star, false);
    return out;
  });
}

std::vector<StaticsRow> sweep_maturity(const FinancialNetwork& net, const CapmParams& params,
                                       const std::vector<double>& grid) {
  params.validate(net.size());
  return sweep(grid.size(), [&](std::size_t k) {
    CapmParams p = params;
    p.T = grid[k];
    const auto full = debt_price_bound(net, p, Bound::lower, true);
    const auto riskfree = merton_baseline(net, p, BaselineMode::riskfree_interbank);
    const auto risky = merton_baseline(net, p, BaselineMode::risky_interbank);
    Block out;
    const auto param = format_number(p.T);
    const bool med = net.size() > 2;
    per_bank(out, param, "rate", full.rate, med);
    per_bank(out, param, "market_cap", full.market_cap, med);
    per_bank(out, param, "rate_riskfree", riskfree.rate, med);
    per_bank(out, param, "market_cap_riskfree", riskfree.market_cap, med);
    per_bank(out, param, "rate_risky", risky.rate, med);
    per_bank(out, param, "market_cap_risky", risky.market_cap, med);
    return out;
  });
}

std::vector<StaticsRow> sweep_alpha(const FinancialNetwork& net, const CapmParams& params,
                                    const std::vector<double>& grid) {
  params.validate(net.size());
  return sweep(grid.size(), [&](std::size_t k) {
    const auto at = net.with_recovery(grid[k], grid[k]);
    const auto r = debt_price_bound(at, params, Bound::lower, true);
    Block out;
    const auto param = format_number(grid[k]);
    per_bank(out, param, "price", r.price, true);
    per_bank(out, param, "rate", r.rate, true);
    per_bank(out, param, "market_cap", r.market_cap, true);
    return out;
  });
}

std::vector<StaticsRow> sweep_ratio(const FinancialNetwork& net, const CapmParams& params, RatioRoute route,
                                    const std::vector<double>& d1_grid, const std::vector<double>& d2_grid) {
  params.validate(net.size());
  if (net.size() < 2) throw Error(ErrorKind::invalid_input, "ratio sweep needs at least two banks");
  const Eigen::VectorXd base = current_ratio(net, params.s, params.q0, params.cash);
  return sweep(d1_grid.size() * d2_grid.size(), [&](std::size_t k) {
    const double d1 = d1_grid[k / d2_grid.size()];
    const double d2 = d2_grid[k % d2_grid.size()];
    Eigen::VectorXd d = base;
    d(0) = d1;
    d(1) = d2;
    Block out;
    try {
      CapmParams p = params;
      FinancialNetwork at = net;
      if (route == RatioRoute::assets) {
        p.s = ratio_via_assets(net, d, p.q0, p.cash);
      } else {
        at = ratio_via_liabilities(net, p.s, d, p.q0, p.cash);
      }
      const auto r = debt_price_bound(at, p, Bound::lower, true);
      const auto param = fmt::format("d1={};d2={}", format_number(d1), format_number(d2));
      per_bank(out, param, "rate", r.rate, false);
      per_bank(out, param, "price", r.price, false);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::infeasible) throw;
    }
    return out;
  });
}

void write_statics_csv(std::ostream& os, const std::vector<StaticsRow>& rows) {
  os << "param,bank,metric,value\n";
  for (const auto& r : rows) os << r.param << ',' << r.bank << ',' << r.metric << ',' << format_number(r.value) << '\n';
}

}  // namespace netval
