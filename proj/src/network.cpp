#include "netval/network.hpp"

#include <cmath>
#include <string>

#include <fmt/format.h>

#include "netval/error.hpp"

namespace netval {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid_input";
    case ErrorKind::schema: return "schema";
    case ErrorKind::not_found: return "file_not_found";
    case ErrorKind::infeasible: return "infeasible";
    case ErrorKind::model: return "model";
    case ErrorKind::internal: return "internal";
  }
  return "unknown";
}

namespace {

void check_recovery(double alpha, const char* name) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw NetworkError(std::nullopt, fmt::format("recovery rate {} = {} outside [0,1]", name, alpha));
  }
}

}  // namespace

FinancialNetwork FinancialNetwork::build(const Eigen::MatrixXd& liabilities,
                                         double alpha_x, double alpha_L,
                                         std::optional<Eigen::MatrixXd> gamma) {
  const auto n = static_cast<std::size_t>(liabilities.rows());
  if (n == 0) throw NetworkError(std::nullopt, "network has no banks");
  if (static_cast<std::size_t>(liabilities.cols()) != n + 1) {
    throw NetworkError(std::nullopt,
                       fmt::format("liabilities matrix must be n x (n+1); got {} x {}",
                                   liabilities.rows(), liabilities.cols()));
  }
  check_recovery(alpha_x, "alpha_x");
  check_recovery(alpha_L, "alpha_L");

  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j <= n; ++j) {
      const double v = liabilities(row, static_cast<Eigen::Index>(j));
      if (!std::isfinite(v)) {
        throw NetworkError(i, fmt::format("bank {}: non-finite liability L_{}{}", i + 1, i + 1, j + 1));
      }
      if (v < 0.0) {
        throw NetworkError(i, fmt::format("bank {}: negative liability L_{}{} = {}", i + 1, i + 1, j + 1, v));
      }
    }
    if (liabilities(row, row) != 0.0) {
      throw NetworkError(i, fmt::format("bank {}: self-obligation L_{}{} = {}", i + 1, i + 1, i + 1,
                                        liabilities(row, row)));
    }
  }

  FinancialNetwork net;
  net.n_ = n;
  net.liabilities_ = liabilities;
  net.alpha_x_ = alpha_x;
  net.alpha_L_ = alpha_L;
  net.p_bar_ = liabilities.rowwise().sum();
  const auto nn = static_cast<Eigen::Index>(n);
  net.pi_.resize(nn, nn);
  net.pi_soc_.resize(nn);
  for (Eigen::Index i = 0; i < nn; ++i) {
    const double total = net.p_bar_(i);
    if (!(total > 0.0)) {
      throw NetworkError(static_cast<std::size_t>(i),
                         fmt::format("bank {}: zero total liabilities", i + 1));
    }
    if (!(liabilities(i, nn) > 0.0)) {
      throw NetworkError(static_cast<std::size_t>(i),
                         fmt::format("bank {}: missing societal obligation (L_{}{} = 0)", i + 1, i + 1, nn + 1));
    }
    net.pi_.row(i) = liabilities.row(i).head(nn) / total;
    net.pi_soc_(i) = liabilities(i, nn) / total;
  }

  if (gamma) {
    if (gamma->rows() != nn || gamma->cols() != nn) {
      throw NetworkError(std::nullopt, fmt::format("cross-ownership matrix must be {} x {}", nn, nn));
    }
    for (Eigen::Index i = 0; i < nn; ++i) {
      for (Eigen::Index j = 0; j < nn; ++j) {
        const double g = (*gamma)(i, j);
        if (!std::isfinite(g) || g < 0.0) {
          throw NetworkError(static_cast<std::size_t>(i),
                             fmt::format("bank {}: invalid cross-ownership entry gamma_{}{} = {}", i + 1, i + 1,
                                         j + 1, g));
        }
      }
      const double row_sum = gamma->row(i).sum();
      if (!(row_sum < 1.0)) {
        throw NetworkError(static_cast<std::size_t>(i),
                           fmt::format("bank {}: cross-ownership row sum {} must be < 1", i + 1, row_sum));
      }
    }
    net.gamma_ = std::move(gamma);
  }
  return net;
}

FinancialNetwork FinancialNetwork::from_relative(const Eigen::MatrixXd& pi, const Eigen::VectorXd& p_bar,
                                                 double alpha_x, double alpha_L,
                                                 std::optional<Eigen::MatrixXd> gamma) {
  const Eigen::Index n = pi.rows();
  if (pi.cols() != n || p_bar.size() != n) {
    throw NetworkError(std::nullopt, "relative liabilities and totals have inconsistent shapes");
  }
  Eigen::MatrixXd liabilities(n, n + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    liabilities.row(i).head(n) = pi.row(i) * p_bar(i);
    liabilities(i, n) = (1.0 - pi.row(i).sum()) * p_bar(i);
  }
  return build(liabilities, alpha_x, alpha_L, std::move(gamma));
}

Eigen::VectorXd FinancialNetwork::interbank_assets() const { return pi_.transpose() * p_bar_; }

FinancialNetwork FinancialNetwork::with_recovery(double alpha_x, double alpha_L) const {
  check_recovery(alpha_x, "alpha_x");
  check_recovery(alpha_L, "alpha_L");
  FinancialNetwork copy = *this;
  copy.alpha_x_ = alpha_x;
  copy.alpha_L_ = alpha_L;
  return copy;
}

FinancialNetwork FinancialNetwork::with_total_liabilities(const Eigen::VectorXd& p_bar) const {
  const auto nn = static_cast<Eigen::Index>(n_);
  if (p_bar.size() != nn) throw NetworkError(std::nullopt, "total liabilities vector has wrong length");
  Eigen::MatrixXd liabilities(nn, nn + 1);
  for (Eigen::Index i = 0; i < nn; ++i) {
    liabilities.row(i).head(nn) = pi_.row(i) * p_bar(i);
    liabilities(i, nn) = pi_soc_(i) * p_bar(i);
  }
  return build(liabilities, alpha_x_, alpha_L_, gamma_);
}

}  // namespace netval
