#include "netval/clearing.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "netval/error.hpp"

namespace netval {

namespace {

// Below this reciprocal condition number the default-set system is treated
// as singular. It cannot be for a valid network.
constexpr double kMinRcond = 1e-14;

Eigen::VectorXd diagonal_factor(const DefaultSet& defaults, double alpha) {
  Eigen::VectorXd d(static_cast<Eigen::Index>(defaults.size()));
  for (std::size_t i = 0; i < defaults.size(); ++i) d(static_cast<Eigen::Index>(i)) = defaults[i] ? alpha : 1.0;
  return d;
}

// I - (I - (1-alpha_L) diag z) [Pi^T diag z + Gamma^T diag s], where s marks
// the banks whose equity is passed on (s = 1 - z in the closed form).
Eigen::MatrixXd default_system(const FinancialNetwork& net, const Eigen::MatrixXd& pi_t, const DefaultSet& z,
                               const DefaultSet& s) {
  const auto n = static_cast<Eigen::Index>(net.size());
  const Eigen::VectorXd b = diagonal_factor(z, net.alpha_L());
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
  const auto& gamma = net.cross_ownership();
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto k = static_cast<std::size_t>(j);
    if (z[k]) {
      m.col(j) -= b.cwiseProduct(pi_t.col(j));
    } else if (gamma && s[k]) {
      m.col(j) -= b.cwiseProduct(gamma->row(j).transpose());
    }
  }
  return m;
}

DefaultSet complement(const DefaultSet& z) {
  DefaultSet out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = !z[i];
  return out;
}

void check_conditioning(const Eigen::PartialPivLU<Eigen::MatrixXd>& lu) {
  const double rc = lu.rcond();
  if (!(rc > kMinRcond)) {
    throw Error(ErrorKind::internal,
                fmt::format("default-set system is numerically singular (rcond = {})", rc));
  }
}

}  // namespace

double solvency_tolerance(double total_liability) noexcept { return 1e-12 * std::max(1.0, total_liability); }

Eigen::VectorXd psi_star(const FinancialNetwork& net, const Eigen::VectorXd& x, const Eigen::VectorXd& wealth) {
  const auto n = static_cast<Eigen::Index>(net.size());
  const Eigen::VectorXd& p_bar = net.total_liabilities();
  const Eigen::VectorXd shortfall = (-wealth.array()).max(0.0).matrix();
  const Eigen::VectorXd inflow = net.relative_liabilities().transpose() * (p_bar - shortfall);
  Eigen::VectorXd held_equity = Eigen::VectorXd::Zero(n);
  if (const auto& gamma = net.cross_ownership()) {
    held_equity = gamma->transpose() * wealth.cwiseMax(0.0);
  }
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool solvent = wealth(i) >= 0.0;
    const double ax = solvent ? 1.0 : net.alpha_x();
    const double al = solvent ? 1.0 : net.alpha_L();
    out(i) = ax * x(i) + al * (inflow(i) + held_equity(i)) - p_bar(i);
  }
  return out;
}

WealthLinearization linearize(const FinancialNetwork& net, const DefaultSet& defaults) {
  if (defaults.size() != net.size()) throw Error(ErrorKind::invalid_input, "default set has wrong length");
  const Eigen::MatrixXd pi_t = net.relative_liabilities().transpose();
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(default_system(net, pi_t, defaults, complement(defaults)));
  check_conditioning(lu);

  const Eigen::VectorXd a = diagonal_factor(defaults, net.alpha_x());
  const Eigen::VectorXd b = diagonal_factor(defaults, net.alpha_L());
  const Eigen::VectorXd& p_bar = net.total_liabilities();
  const Eigen::VectorXd rhs = p_bar - b.cwiseProduct(pi_t * p_bar);

  WealthLinearization out;
  out.slope = lu.solve(Eigen::MatrixXd(a.asDiagonal()));
  out.offset = lu.solve(rhs);
  if (!out.slope.allFinite() || !out.offset.allFinite()) {
    throw Error(ErrorKind::internal, "default-set linear solve produced non-finite values");
  }
  return out;
}

Eigen::MatrixXd delta_matrix(const FinancialNetwork& net, const DefaultSet& defaults) {
  return linearize(net, defaults).slope;
}

Eigen::VectorXd delta_vector(const FinancialNetwork& net, const DefaultSet& defaults) {
  return linearize(net, defaults).offset;
}

ClearingEngine::ClearingEngine(const FinancialNetwork& net)
    : net_(net),
      pi_t_(net.relative_liabilities().transpose()),
      interbank_assets_(net.interbank_assets()),
      tolerance_(static_cast<Eigen::Index>(net.size())),
      lu_(static_cast<Eigen::Index>(net.size())) {
  const auto n = static_cast<Eigen::Index>(net.size());
  for (Eigen::Index i = 0; i < n; ++i) tolerance_(i) = solvency_tolerance(net.total_liabilities()(i));
  result_.defaults.assign(net.size(), false);
  holders_.assign(net.size(), false);
}

// system * V = (I - (1-alpha_x) diag z) x + (I - (1-alpha_L) diag z) Pi^T p_bar - p_bar
void ClearingEngine::assemble(const DefaultSet& z, const DefaultSet& s, const Eigen::VectorXd& x) {
  system_ = default_system(net_, pi_t_, z, s);
  const Eigen::VectorXd& p_bar = net_.total_liabilities();
  const auto n = static_cast<Eigen::Index>(net_.size());
  rhs_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool d = z[static_cast<std::size_t>(i)];
    const double ax = d ? net_.alpha_x() : 1.0;
    const double al = d ? net_.alpha_L() : 1.0;
    rhs_(i) = ax * x(i) + al * interbank_assets_(i) - p_bar(i);
  }
}

const ClearingResult& ClearingEngine::solve(const Eigen::VectorXd& x) {
  const auto n = static_cast<Eigen::Index>(net_.size());
  if (x.size() != n) throw Error(ErrorKind::invalid_input, "endowment vector has wrong length");
  const Eigen::VectorXd& p_bar = net_.total_liabilities();
  auto& r = result_;
  auto& z = r.defaults;
  std::fill(z.begin(), z.end(), false);

  r.wealth = x + interbank_assets_ - p_bar;
  if (net_.cross_ownership()) solve_regime(x);

  r.iterations = 0;
  for (;;) {
    ++r.iterations;
    bool grew = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      if (!z[k] && r.wealth(i) < -tolerance_(i)) {
        z[k] = true;
        grew = true;
      }
    }
    if (!grew) break;
    solve_regime(x);
  }

  r.payments.resize(n);
  r.equity.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = r.wealth(i);
    r.payments(i) = std::clamp(p_bar(i) + std::min(v, 0.0), 0.0, p_bar(i));
    r.equity(i) = std::max(v, 0.0);
  }
  r.societal_payment = net_.societal_share().dot(r.payments);
  return r;
}

// Wealths for the current default set with only positive equity passed on
// through cross-holdings. Without cross-holdings this is one linear solve;
// with them the set of equity holders grows from empty until it is stable.
void ClearingEngine::solve_regime(const Eigen::VectorXd& x) {
  auto& z = result_.defaults;
  const auto n = static_cast<Eigen::Index>(net_.size());
  std::fill(holders_.begin(), holders_.end(), false);
  for (;;) {
    assemble(z, holders_, x);
    lu_.compute(system_);
    check_conditioning(lu_);
    result_.wealth = lu_.solve(rhs_);
    if (!net_.cross_ownership()) return;
    bool grew = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      if (!z[k] && !holders_[k] && result_.wealth(i) > 0.0) {
        holders_[k] = true;
        grew = true;
      }
    }
    if (!grew) return;
  }
}

ClearingResult greatest_clearing(const FinancialNetwork& net, const Eigen::VectorXd& x) {
  ClearingEngine engine(net);
  return engine.solve(x);
}

}  // namespace netval
