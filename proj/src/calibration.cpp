#include "netval/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "netval/error.hpp"

namespace netval {

namespace {

constexpr double kMarginTol = 1e-12;
constexpr int kMaxSweeps = 100000;

const std::string& label(const std::vector<BalanceSheet>& sheets, std::size_t i) { return sheets[i].id; }

void check_ratio_inputs(const FinancialNetwork& net, const Eigen::VectorXd& d, double q0,
                        const Eigen::VectorXd& cash) {
  const auto n = static_cast<Eigen::Index>(net.size());
  if (d.size() != n || cash.size() != n) throw Error(ErrorKind::invalid_input, "ratio vectors must have one entry per bank");
  if (!(q0 > 0.0)) throw Error(ErrorKind::invalid_input, "q0 must be > 0");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(d(i) > 0.0) || !std::isfinite(d(i))) {
      throw Error(ErrorKind::infeasible, fmt::format("debt-firm ratio of bank {} must be positive", i + 1));
    }
    if (!(cash(i) >= 0.0)) throw Error(ErrorKind::invalid_input, fmt::format("cash of bank {} must be >= 0", i + 1));
  }
}

}  // namespace

Calibration calibrate(const std::vector<BalanceSheet>& sheets) {
  const auto n = static_cast<Eigen::Index>(sheets.size());
  if (n == 0) throw Error(ErrorKind::invalid_input, "no balance sheets");
  Calibration c;
  c.s.resize(n);
  c.external.resize(n);
  c.p_bar.resize(n);
  c.interbank.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& b = sheets[static_cast<std::size_t>(i)];
    const auto& id = label(sheets, static_cast<std::size_t>(i));
    if (!std::isfinite(b.total_assets) || !std::isfinite(b.capital) || !std::isfinite(b.interbank_liabilities) ||
        b.total_assets < 0.0 || b.capital < 0.0 || b.interbank_liabilities < 0.0) {
      throw Error(ErrorKind::invalid_input, fmt::format("bank {}: balance-sheet entries must be finite and >= 0", id));
    }
    c.interbank(i) = b.interbank_liabilities;
    c.s(i) = b.total_assets - b.interbank_liabilities;
    c.external(i) = b.total_assets - b.interbank_liabilities - b.capital;
    c.p_bar(i) = c.external(i) + b.interbank_liabilities;
    if (c.s(i) < 0.0) {
      throw Error(ErrorKind::infeasible, fmt::format("bank {}: negative external assets ({})", id, c.s(i)));
    }
    if (c.external(i) < 0.0) {
      throw Error(ErrorKind::infeasible, fmt::format("bank {}: negative external liability ({})", id, c.external(i)));
    }
  }
  return c;
}

Mask random_mask(std::size_t n, double density, std::uint64_t seed) {
  if (!(density > 0.0 && density <= 1.0)) throw Error(ErrorKind::invalid_input, "mask density must lie in (0,1]");
  const auto ni = static_cast<Eigen::Index>(n);
  Mask mask = Mask::Constant(ni, ni, false);
  if (n < 2) return mask;
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(density);
  for (Eigen::Index i = 0; i < ni; ++i) {
    for (Eigen::Index j = 0; j < ni; ++j) mask(i, j) = i != j && keep(rng);
  }
  std::uniform_int_distribution<Eigen::Index> other(0, ni - 2);
  auto pick = [&](Eigen::Index self) {
    const Eigen::Index k = other(rng);
    return k >= self ? k + 1 : k;
  };
  for (Eigen::Index i = 0; i < ni; ++i) {
    if (!mask.row(i).any()) mask(i, pick(i)) = true;
    if (!mask.col(i).any()) mask(pick(i), i) = true;
  }
  return mask;
}

Eigen::MatrixXd fill_matrix(const Eigen::VectorXd& row_sums, const Eigen::VectorXd& col_sums, const Mask& mask,
                            std::uint64_t seed) {
  const auto n = row_sums.size();
  if (col_sums.size() != n || mask.rows() != n || mask.cols() != n) {
    throw Error(ErrorKind::invalid_input, "margins and mask must share the dimension n");
  }
  if ((row_sums.array() < 0.0).any() || (col_sums.array() < 0.0).any() || !row_sums.allFinite() ||
      !col_sums.allFinite()) {
    throw Error(ErrorKind::invalid_input, "margins must be finite and >= 0");
  }
  const double total = row_sums.sum();
  if (std::abs(total - col_sums.sum()) > 1e-10 * std::max(1.0, total)) {
    throw Error(ErrorKind::infeasible,
                fmt::format("row margins sum to {} but column margins sum to {}", total, col_sums.sum()));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (mask(i, i)) throw Error(ErrorKind::invalid_input, "mask must have a zero diagonal");
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> start(0.5, 1.5);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = start(rng);
      if (mask(i, j) && row_sums(i) > 0.0 && col_sums(j) > 0.0) m(i, j) = v;
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (row_sums(i) > 0.0 && m.row(i).sum() == 0.0) {
      throw Error(ErrorKind::infeasible, fmt::format("row {} has a positive margin but no admissible entries", i + 1));
    }
    if (col_sums(i) > 0.0 && m.col(i).sum() == 0.0) {
      throw Error(ErrorKind::infeasible,
                  fmt::format("column {} has a positive margin but no admissible entries", i + 1));
    }
  }

  auto error = [&]() {
    double e = 0.0;
    const Eigen::VectorXd r = m.rowwise().sum();
    const Eigen::VectorXd c = m.colwise().sum().transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
      e = std::max(e, std::abs(r(i) - row_sums(i)) / std::max(row_sums(i), 1e-300 + kMarginTol * total));
      e = std::max(e, std::abs(c(i) - col_sums(i)) / std::max(col_sums(i), 1e-300 + kMarginTol * total));
    }
    return e;
  };
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r = m.row(i).sum();
      if (r > 0.0) m.row(i) *= row_sums(i) / r;
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      const double c = m.col(j).sum();
      if (c > 0.0) m.col(j) *= col_sums(j) / c;
    }
    if (error() <= kMarginTol) return m;
  }
  throw Error(ErrorKind::infeasible,
              fmt::format("proportional fitting did not reach the margins (relative error {})", error()));
}

CalibratedNetwork calibrated_network(const std::vector<BalanceSheet>& sheets, double density, std::uint64_t seed,
                                     double alpha_x, double alpha_L) {
  const Calibration c = calibrate(sheets);
  const auto n = static_cast<Eigen::Index>(sheets.size());
  const Eigen::MatrixXd interbank = fill_matrix(c.interbank, c.interbank, random_mask(sheets.size(), density, seed), seed);
  Eigen::MatrixXd liabilities(n, n + 1);
  liabilities.leftCols(n) = interbank;
  liabilities.col(n) = c.external;
  CalibratedNetwork out{FinancialNetwork::build(liabilities, alpha_x, alpha_L), c.s, {}};
  for (const auto& s : sheets) out.ids.push_back(s.id);
  return out;
}

Eigen::VectorXd current_ratio(const FinancialNetwork& net, const Eigen::VectorXd& s, double q0,
                              const Eigen::VectorXd& cash) {
  return net.total_liabilities().cwiseQuotient(cash + s * q0 + net.interbank_assets());
}

FinancialNetwork ratio_via_liabilities(const FinancialNetwork& net, const Eigen::VectorXd& s,
                                       const Eigen::VectorXd& d, double q0, const Eigen::VectorXd& cash) {
  check_ratio_inputs(net, d, q0, cash);
  const auto n = static_cast<Eigen::Index>(net.size());
  if (s.size() != n) throw Error(ErrorKind::invalid_input, "s must have one entry per bank");
  const Eigen::MatrixXd scaled = d.asDiagonal() * net.relative_liabilities().transpose();
  const double radius = scaled.eigenvalues().cwiseAbs().maxCoeff();
  if (!(radius < 1.0)) {
    throw Error(ErrorKind::infeasible,
                fmt::format("debt-firm ratios infeasible for the liability route (spectral radius {} >= 1)", radius));
  }
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - scaled;
  const Eigen::VectorXd p_bar = system.partialPivLu().solve(d.cwiseProduct(cash + s * q0));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(p_bar(i) > 0.0)) {
      throw Error(ErrorKind::infeasible, fmt::format("liability route gives non-positive p_bar for bank {}", i + 1));
    }
  }
  return net.with_total_liabilities(p_bar);
}

Eigen::VectorXd ratio_via_assets(const FinancialNetwork& net, const Eigen::VectorXd& d, double q0,
                                 const Eigen::VectorXd& cash) {
  check_ratio_inputs(net, d, q0, cash);
  const Eigen::VectorXd s = (net.total_liabilities().cwiseQuotient(d) - net.interbank_assets() - cash) / q0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) < 0.0) {
      throw Error(ErrorKind::infeasible,
                  fmt::format("debt-firm ratio of bank {} exceeds p_bar / (interbank assets + cash)", i + 1));
    }
  }
  return s;
}

}  // namespace netval
