#include "netval/bounds.hpp"

#include <cmath>

#include <fmt/format.h>

#include "netval/clearing.hpp"
#include "netval/comonotonic.hpp"
#include "netval/error.hpp"
#include "netval/special.hpp"

namespace netval {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_full_recovery(const FinancialNetwork& net) {
  if (!net.full_recovery()) {
    throw Error(ErrorKind::model,
                fmt::format("payment bounds need full recovery (alpha_x = alpha_L = 1, got {} and {}); with "
                            "bankruptcy costs the comonotonic value is not a lower bound (see the two-scenario "
                            "counterexample fixture)",
                            net.alpha_x(), net.alpha_L()));
  }
}

BoundValues from_expected(const ExpectedClearing& e) { return {e.wealth, e.payment}; }

}  // namespace

MarginalSet::MarginalSet(std::vector<Marginal> marginals) : marginals_(std::move(marginals)) {
  for (std::size_t i = 0; i < marginals_.size(); ++i) {
    const auto bad = [i](const char* what) {
      return Error(ErrorKind::invalid_input, fmt::format("marginal of bank {}: {}", i + 1, what));
    };
    std::visit(overloaded{
                   [&](const PointMassMarginal& m) {
                     if (!std::isfinite(m.value) || m.value < 0.0) throw bad("point mass must be finite and >= 0");
                   },
                   [&](const FiniteSupportMarginal& m) {
                     // Delegates validation (support >= 0, probabilities summing to one).
                     try {
                       (void)EndowmentMap::step_quantile(m.values, m.probabilities);
                     } catch (const Error& e) {
                       throw bad(e.what());
                     }
                   },
                   [&](const LogNormalMarginal& m) {
                     if (!std::isfinite(m.mu) || !std::isfinite(m.sigma) || m.sigma < 0.0) {
                       throw bad("lognormal needs finite mu and sigma >= 0");
                     }
                   },
               },
               marginals_[i]);
  }
}

Eigen::VectorXd MarginalSet::mean() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
  for (std::size_t i = 0; i < size(); ++i) {
    out(static_cast<Eigen::Index>(i)) =
        std::visit(overloaded{
                       [](const PointMassMarginal& m) { return m.value; },
                       [](const FiniteSupportMarginal& m) {
                         double s = 0.0;
                         for (std::size_t k = 0; k < m.values.size(); ++k) s += m.values[k] * m.probabilities[k];
                         return s;
                       },
                       [](const LogNormalMarginal& m) { return std::exp(m.mu + 0.5 * m.sigma * m.sigma); },
                   },
                   marginals_[i]);
  }
  return out;
}

double MarginalSet::quantile(std::size_t i, double u) const {
  return std::visit(overloaded{
                        [](const PointMassMarginal& m) { return m.value; },
                        [u](const FiniteSupportMarginal& m) {
                          return EndowmentMap::step_quantile(m.values, m.probabilities)(u);
                        },
                        [u](const LogNormalMarginal& m) {
                          if (m.sigma == 0.0) return std::exp(m.mu);
                          return std::exp(m.mu + m.sigma * normal_quantile(u));
                        },
                    },
                    marginals_.at(i));
}

FactorModel MarginalSet::comonotonic_model() const {
  std::vector<EndowmentMap> maps;
  for (const auto& marginal : marginals_) {
    maps.push_back(std::visit(overloaded{
                                  [](const PointMassMarginal& m) { return EndowmentMap::step_quantile({m.value}, {1.0}); },
                                  [](const FiniteSupportMarginal& m) {
                                    return EndowmentMap::step_quantile(m.values, m.probabilities);
                                  },
                                  [](const LogNormalMarginal& m) { return EndowmentMap::lognormal_quantile(m.mu, m.sigma); },
                              },
                              marginal));
  }
  return FactorModel(std::move(maps), FactorDistribution::uniform());
}

BoundValues comonotonic_lower(const FinancialNetwork& net, const MarginalSet& marginals) {
  require_full_recovery(net);
  if (marginals.size() != net.size()) throw Error(ErrorKind::invalid_input, "one marginal per bank is required");
  return from_expected(expected_values(net, marginals.comonotonic_model()));
}

BoundValues jensen_upper(const FinancialNetwork& net, const Eigen::VectorXd& mean_x) {
  require_full_recovery(net);
  const auto r = greatest_clearing(net, mean_x);
  return {r.wealth, r.payments};
}

BoundValues conditional_upper(const FinancialNetwork& net, const FactorModel& conditional) {
  require_full_recovery(net);
  return from_expected(expected_values(net, conditional));
}

}  // namespace netval
