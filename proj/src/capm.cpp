#include "netval/capm.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "netval/error.hpp"
#include "netval/special.hpp"

namespace netval {

namespace {

void check_vector(const Eigen::VectorXd& v, std::size_t n, const char* name, bool nonnegative) {
  if (static_cast<std::size_t>(v.size()) != n) {
    throw Error(ErrorKind::invalid_input, fmt::format("capm: {} has length {}, expected {}", name, v.size(), n));
  }
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v(i)) || (nonnegative && v(i) < 0.0)) {
      throw Error(ErrorKind::invalid_input, fmt::format("capm: {} of bank {} must be finite and >= 0", name, i + 1));
    }
  }
}

double log_prefactor(double z, const CapmParams& p) { return (1.0 - z / p.sigma_M) * (p.r + 0.5 * z * p.sigma_M) * p.T; }

}  // namespace

CapmParams& CapmParams::complete(std::size_t n) {
  const auto ni = static_cast<Eigen::Index>(n);
  if (sigma.size() == 0 && beta.size() == ni && gamma.size() == ni) {
    sigma = (beta.array().square() * sigma_M * sigma_M + gamma.array().square()).sqrt().matrix();
  }
  if (cash.size() == 0) cash = Eigen::VectorXd::Zero(ni);
  validate(n);
  return *this;
}

void CapmParams::validate(std::size_t n) const {
  if (!(std::isfinite(r) && std::isfinite(T) && T > 0.0)) throw Error(ErrorKind::invalid_input, "capm: T must be > 0");
  if (!(std::isfinite(sigma_M) && sigma_M > 0.0)) throw Error(ErrorKind::invalid_input, "capm: sigma_M must be > 0");
  if (!(std::isfinite(q0) && q0 > 0.0)) throw Error(ErrorKind::invalid_input, "capm: q0 must be > 0");
  if (!std::isfinite(mu_M)) throw Error(ErrorKind::invalid_input, "capm: mu_M must be finite");
  check_vector(beta, n, "beta", true);
  check_vector(gamma, n, "gamma", true);
  check_vector(sigma, n, "sigma", true);
  check_vector(s, n, "s", true);
  check_vector(cash, n, "cash", true);
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    const double implied = std::sqrt(beta(k) * beta(k) * sigma_M * sigma_M + gamma(k) * gamma(k));
    if (std::abs(sigma(k) - implied) > 1e-12 * std::max(1.0, implied)) {
      throw Error(ErrorKind::invalid_input,
                  fmt::format("capm: sigma of bank {} is {} but beta and gamma imply {} (market correlation "
                              "outside [0,1])",
                              i + 1, sigma(k), implied));
    }
  }
}

bool CapmParams::homogeneous() const {
  if (beta.size() == 0) return true;
  return (beta.array() == beta(0)).all() && (gamma.array() == gamma(0)).all();
}

const char* to_string(Bound b) noexcept { return b == Bound::lower ? "lower" : "upper"; }

Eigen::VectorXd bound_exponents(const CapmParams& params, Bound which) {
  return which == Bound::lower ? params.sigma : Eigen::VectorXd(params.beta * params.sigma_M);
}

Eigen::VectorXd hat_eta(const Eigen::VectorXd& z, double qT, const CapmParams& params) {
  if (!(params.sigma_M > 0.0)) throw Error(ErrorKind::invalid_input, "hat_eta: sigma_M must be > 0");
  if (!(qT > 0.0)) throw Error(ErrorKind::invalid_input, "hat_eta: qT must be > 0");
  Eigen::VectorXd out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    out(i) = std::exp(log_prefactor(z(i), params) + z(i) / params.sigma_M * std::log(qT));
  }
  return out;
}

FactorModel capm_factor_model(const CapmParams& params, const Eigen::VectorXd& z) {
  std::vector<EndowmentMap> maps;
  const double growth = std::exp(params.r * params.T);
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    maps.push_back(EndowmentMap::power(params.s(i) * params.q0, log_prefactor(z(i), params), z(i) / params.sigma_M,
                                       params.cash(i) * growth));
  }
  const double mu = (params.r - 0.5 * params.sigma_M * params.sigma_M) * params.T;
  return FactorModel(std::move(maps), FactorDistribution::lognormal(mu, params.sigma_M * std::sqrt(params.T)));
}

SolvencyThresholds homogeneous_thresholds(const FinancialNetwork& net, const CapmParams& params, double z) {
  if (!(z > 0.0)) throw Error(ErrorKind::invalid_input, "homogeneous thresholds need z > 0");
  if (!params.cash.isZero(0.0)) throw Error(ErrorKind::invalid_input, "homogeneous thresholds need zero cash");
  const auto n = static_cast<Eigen::Index>(net.size());
  const Eigen::VectorXd market = Eigen::VectorXd::Constant(n, params.sigma_M);
  SolvencyThresholds th = solvency_thresholds(net, capm_factor_model(params, market));
  const double ratio = params.sigma_M / z;
  const double scale = (1.0 - ratio) * (params.r + 0.5 * z * params.sigma_M) * params.T;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double q = th.q_star(i);
    if (q > 0.0 && std::isfinite(q)) th.q_star(i) = std::exp(scale + ratio * std::log(q));
  }
  return th;
}

DebtPriceResult debt_price_from_thresholds(const FinancialNetwork& net, const CapmParams& params,
                                           const Eigen::VectorXd& z, SolvencyThresholds th) {
  const std::size_t n = net.size();
  const auto ni = static_cast<Eigen::Index>(n);
  const double vol = params.sigma_M * std::sqrt(params.T);
  const double discount = std::exp(-params.r * params.T);

  // d^1 for every bank and d^2 at sorted threshold k, with log(1/inf) = -inf
  // and log(1/0) = +inf giving the sentinel limits.
  auto d1 = [&](double q, double zi) {
    return (std::log(1.0 / q) + (params.r - 0.5 * (params.sigma_M - 2.0 * zi) * params.sigma_M) * params.T) / vol;
  };
  auto d2 = [&](double q) {
    return (std::log(1.0 / q) + (params.r - 0.5 * params.sigma_M * params.sigma_M) * params.T) / vol;
  };

  std::vector<Eigen::VectorXd> contribution(n + 1, Eigen::VectorXd::Zero(ni));
  Eigen::VectorXd pe(ni);
  for (std::size_t k = 0; k <= n; ++k) {
    const double hi = th.sorted(k);
    const double lo = th.sorted(k + 1);
    if (!(lo < hi)) continue;
    // Phi(-d_k) - Phi(-d_{k+1})
    const double prob = normal_interval(-d2(lo), -d2(hi));
    for (Eigen::Index j = 0; j < ni; ++j) {
      const double risky = params.s(j) * params.q0 * normal_interval(-d1(lo, z(j)), -d1(hi, z(j)));
      pe(j) = risky + params.cash(j) * prob;
    }
    contribution[k] = th.ladder[k].slope * pe - discount * th.ladder[k].offset * prob;
  }

  DebtPriceResult out;
  out.price = Eigen::VectorXd::Constant(ni, discount);
  out.market_cap = Eigen::VectorXd::Zero(ni);
  out.rate.resize(ni);
  const Eigen::VectorXd& p_bar = net.total_liabilities();
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const std::size_t m = th.position[i] + 1;
    for (std::size_t k = 0; k <= n; ++k) {
      if (k < m) {
        out.market_cap(r) += contribution[k](r);
      } else {
        out.price(r) += contribution[k](r) / p_bar(r);
      }
    }
    out.price(r) = std::clamp(out.price(r), 0.0, discount);
    out.market_cap(r) = std::max(out.market_cap(r), 0.0);
    out.rate(r) = effective_rate(out.price(r) * p_bar(r), p_bar(r), params.T);
  }
  out.thresholds = std::move(th);
  return out;
}

DebtPriceResult debt_price_bound(const FinancialNetwork& net, const CapmParams& params, Bound which, bool force) {
  params.validate(net.size());
  const bool guarantee = net.full_recovery();
  if (!guarantee && !force) {
    throw Error(ErrorKind::model,
                fmt::format("debt price bounds need full recovery (alpha_x = {}, alpha_L = {}); pass force to "
                            "compute the closed form without a bound guarantee",
                            net.alpha_x(), net.alpha_L()));
  }
  const Eigen::VectorXd z = bound_exponents(params, which);
  SolvencyThresholds th;
  if (params.homogeneous() && params.cash.isZero(0.0) && z.size() > 0 && z(0) > 0.0) {
    th = homogeneous_thresholds(net, params, z(0));
  } else {
    th = solvency_thresholds(net, capm_factor_model(params, z));
  }
  auto out = debt_price_from_thresholds(net, params, z, std::move(th));
  out.bound_guarantee = guarantee;
  return out;
}

Eigen::VectorXd market_cap(const FinancialNetwork& net, const CapmParams& params, Bound which, bool force) {
  return debt_price_bound(net, params, which, force).market_cap;
}

double effective_rate(double discounted_price, double p_bar, double T) {
  if (!(T > 0.0) || !(p_bar > 0.0) || !(discounted_price >= 0.0)) {
    throw Error(ErrorKind::invalid_input, "effective rate needs T > 0, p_bar > 0 and price >= 0");
  }
  if (discounted_price == 0.0) return kInfinity;
  return (std::log(p_bar) - std::log(discounted_price)) / T;
}

BaselineResult merton_baseline(const FinancialNetwork& net, const CapmParams& params, BaselineMode mode) {
  params.validate(net.size());
  const std::size_t n = net.size();
  const auto ni = static_cast<Eigen::Index>(n);
  const Eigen::VectorXd interbank = net.interbank_assets();
  const double discount = std::exp(-params.r * params.T);

  BaselineResult out;
  out.price.resize(ni);
  out.rate.resize(ni);
  out.market_cap.resize(ni);
  for (Eigen::Index i = 0; i < ni; ++i) {
    const double p_bar = net.total_liabilities()(i);
    Eigen::MatrixXd single(1, 2);
    single << 0.0, p_bar;
    const auto alone = FinancialNetwork::build(single, net.alpha_x(), net.alpha_L());

    CapmParams one;
    one.r = params.r;
    one.T = params.T;
    one.sigma_M = params.sigma_M;
    one.mu_M = params.mu_M;
    one.q0 = params.q0;
    one.beta = params.beta.segment(i, 1);
    one.gamma = params.gamma.segment(i, 1);
    one.sigma = params.sigma.segment(i, 1);
    one.s = params.s.segment(i, 1);
    one.cash = params.cash.segment(i, 1);
    if (mode == BaselineMode::riskfree_interbank) {
      one.cash(0) += interbank(i) * discount;
    } else {
      one.s(0) += interbank(i) * discount / params.q0;
    }
    // A lone firm's price depends only on its own marginal law.
    const auto r = debt_price_from_thresholds(alone, one, one.sigma,
                                              solvency_thresholds(alone, capm_factor_model(one, one.sigma)));
    out.price(i) = r.price(0);
    out.rate(i) = r.rate(0);
    out.market_cap(i) = r.market_cap(0);
  }
  return out;
}

}  // namespace netval
