#include <doctest.h>

#include <cmath>
#include <random>

#include "netval/bounds.hpp"
#include "netval/capm.hpp"
#include "netval/clearing.hpp"
#include "netval/comonotonic.hpp"
#include "netval/error.hpp"
#include "netval/simulation.hpp"
#include "test_support.hpp"

using namespace netval;
using netval::testing::counterexample;
using netval::testing::random_network;
using netval::testing::vec;

namespace {

struct TwoPoint {
  Eigen::VectorXd a, b;  // each with probability 1/2
};

Eigen::VectorXd expected_payment(const FinancialNetwork& net, const TwoPoint& x) {
  return 0.5 * (greatest_clearing(net, x.a).payments + greatest_clearing(net, x.b).payments);
}

// Equity of banks 1..n followed by the amount received by society.
Eigen::VectorXd extended_equity(const FinancialNetwork& net, const Eigen::VectorXd& x) {
  const auto r = greatest_clearing(net, x);
  Eigen::VectorXd out(r.equity.size() + 1);
  out << r.equity, r.societal_payment;
  return out;
}

MarginalSet two_point_marginals(const TwoPoint& x) {
  std::vector<Marginal> m;
  for (Eigen::Index i = 0; i < x.a.size(); ++i) m.push_back(FiniteSupportMarginal{{x.a(i), x.b(i)}, {0.5, 0.5}});
  return MarginalSet(m);
}

const TwoPoint kCountermonotone{vec({0, 2}), vec({1, 0})};

}  // namespace

TEST_CASE("counterexample payments and full-recovery bounds") {
  const auto net = counterexample();
  const auto marg = two_point_marginals(kCountermonotone);
  const auto lower = comonotonic_lower(net, marg);
  CHECK(std::abs(lower.payment(0) - 1.0) <= 1e-12);
  CHECK(std::abs(lower.payment(1) - 1.5) <= 1e-12);

  const Eigen::VectorXd mean = marg.mean();
  CHECK(std::abs(mean(0) - 0.5) <= 1e-15);
  CHECK(std::abs(mean(1) - 1.0) <= 1e-15);
  const auto upper = jensen_upper(net, mean);
  CHECK(std::abs(upper.payment(0) - 1.0) <= 1e-12);
  CHECK(std::abs(upper.payment(1) - 1.5) <= 1e-12);

  const Eigen::VectorXd ep = expected_payment(net, kCountermonotone);
  CHECK(std::abs(ep(0) - 1.0) <= 1e-12);
  CHECK(std::abs(ep(1) - 1.5) <= 1e-12);
}

TEST_CASE("counterexample bound failure under bankruptcy costs") {
  for (const double a : {0.5, 0.25, 0.9}) {
    const auto net = counterexample(a, a);
    const double den = 6.0 - a * a;
    const Eigen::VectorXd ep = expected_payment(net, kCountermonotone);
    CHECK(std::abs(ep(0) - a * (2 * a + 3) / den) <= 1e-12);
    CHECK(std::abs(ep(1) - 3 * a * (a + 4) / (2 * den)) <= 1e-12);

    // E[p(Z)] is unchanged by the recovery rates: Z is either 0 or the full-payment point.
    const TwoPoint z{vec({0, 0}), vec({1, 2})};
    const Eigen::VectorXd epz = expected_payment(net, z);
    CHECK(std::abs(epz(0) - 1.0) <= 1e-12);
    CHECK(std::abs(epz(1) - 1.5) <= 1e-12);
    CHECK(ep(0) < epz(0));
    CHECK(ep(1) < epz(1));
    const Eigen::VectorXd pm = greatest_clearing(net, vec({0.5, 1.0})).payments;
    CHECK(pm(0) < epz(0));
    CHECK(pm(1) < epz(1));

    try {
      comonotonic_lower(net, two_point_marginals(kCountermonotone));
      FAIL("lower bound accepted with bankruptcy costs");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::model);
      CHECK(std::string(e.what()).find("counterexample") != std::string::npos);
    }
    CHECK_THROWS_AS(jensen_upper(net, vec({0.5, 1.0})), Error);
  }
}

TEST_CASE("counterexample equity is not comparable") {
  const double eps = 0.1;
  const auto net = counterexample();
  const TwoPoint x{vec({1 + eps, 2}), vec({2, 1 + eps})};
  const TwoPoint z{vec({1 + eps, 1 + eps}), vec({2, 2})};
  const Eigen::VectorXd ex = 0.5 * (extended_equity(net, x.a) + extended_equity(net, x.b));
  const Eigen::VectorXd ez = 0.5 * (extended_equity(net, z.a) + extended_equity(net, z.b));
  CHECK(std::abs(ex(0) - (1 + 2 * eps) / 3) <= 1e-12);
  CHECK(std::abs(ex(1)) <= 1e-12);
  CHECK(std::abs(ex(2) - (8 + eps) / 3) <= 1e-12);
  CHECK(std::abs(ez(0) - 0.5) <= 1e-12);
  CHECK(std::abs(ez(1)) <= 1e-12);
  CHECK(std::abs(ez(2) - (2.5 + eps)) <= 1e-12);
  CHECK(ex(0) < ez(0));
  CHECK(ex(2) > ez(2));

  // The comonotonic coupling of X's marginals is Z.
  const auto model = two_point_marginals(x).comonotonic_model();
  const auto ev = expected_values(net, model);
  CHECK((ev.equity - ez.head(2)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(std::abs(net.societal_share().dot(ev.payment) - ez(2)) <= 1e-12);
}

TEST_CASE("point masses collapse all bounds") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const auto net = random_network(rng, 4);
    const Eigen::VectorXd x = netval::testing::random_endowment(rng, net, 1.3);
    std::vector<Marginal> m;
    for (Eigen::Index i = 0; i < 4; ++i) m.push_back(PointMassMarginal{x(i)});
    const auto lo = comonotonic_lower(net, MarginalSet(m));
    const auto hi = jensen_upper(net, x);
    const auto r = greatest_clearing(net, x);
    CHECK((lo.payment - r.payments).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((hi.payment - r.payments).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((lo.wealth - r.wealth).cwiseAbs().maxCoeff() <= 1e-10);
  }
  const auto net = random_network(rng, 3);
  const Eigen::VectorXd rich = 2.0 * net.total_liabilities();
  CHECK((jensen_upper(net, rich).payment - net.total_liabilities()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("marginal quantiles") {
  const MarginalSet m({PointMassMarginal{2.0}, FiniteSupportMarginal{{3.0, 1.0}, {0.25, 0.75}},
                       LogNormalMarginal{0.1, 0.4}});
  CHECK(m.quantile(0, 0.3) == 2.0);
  CHECK(m.quantile(1, 0.75) == 1.0);
  CHECK(m.quantile(1, 0.76) == 3.0);
  CHECK(m.quantile(2, 0.5) == doctest::Approx(std::exp(0.1)).epsilon(1e-14));
  CHECK(m.mean()(1) == doctest::Approx(1.5));
  CHECK(m.mean()(2) == doctest::Approx(std::exp(0.1 + 0.08)).epsilon(1e-14));
  CHECK_THROWS_AS(MarginalSet({FiniteSupportMarginal{{-1.0}, {1.0}}}), Error);
  CHECK_THROWS_AS(MarginalSet({LogNormalMarginal{0.0, -1.0}}), Error);
}

TEST_CASE("conditional bound with a constant map is Jensen") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 30; ++t) {
    const auto net = random_network(rng, 4);
    const Eigen::VectorXd x = netval::testing::random_endowment(rng, net);
    std::vector<EndowmentMap> maps;
    for (Eigen::Index i = 0; i < 4; ++i) maps.push_back(EndowmentMap::affine(x(i), 0.0));
    const auto cond = conditional_upper(net, FactorModel(maps, FactorDistribution::lognormal(0.0, 1.0)));
    const auto jen = jensen_upper(net, x);
    CHECK((cond.payment - jen.payment).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((cond.wealth - jen.wealth).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("conditional bound matches the CAPM upper price") {
  const auto net = netval::testing::two_bank();
  for (const double beta : {0.0, 0.3, 0.7, 1.0}) {
    CapmParams p;
    p.r = 0.03;
    p.T = 2.0;
    p.sigma_M = 0.8;
    p.beta = vec({beta, 0.5 * beta + 0.2});
    p.sigma = vec({1.0, 0.9});
    p.gamma = (p.sigma.array().square() - (p.beta.array() * p.sigma_M).square()).sqrt().matrix();
    p.s = vec({9.0, 8.0});
    p.complete(2);
    const auto z = bound_exponents(p, Bound::upper);
    const auto cond = conditional_upper(net, capm_factor_model(p, z));
    const auto price = debt_price_bound(net, p, Bound::upper);
    const Eigen::VectorXd from_cond =
        std::exp(-p.r * p.T) * cond.payment.cwiseQuotient(net.total_liabilities());
    CHECK((from_cond - price.price).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("beta to one closes the gap") {
  const auto net = netval::testing::two_bank();
  double previous_gap = kInfinity;
  for (const double beta : {0.0, 0.25, 0.5, 0.75, 0.9, 0.99, 1.0}) {
    CapmParams p;
    p.sigma_M = 1.0;
    p.beta = vec({beta, beta});
    p.gamma = vec({std::sqrt(1 - beta * beta), std::sqrt(1 - beta * beta)});
    p.s = vec({3.0, 4.0});
    p.complete(2);
    const auto lo = debt_price_bound(net, p, Bound::lower).price;
    const auto hi = debt_price_bound(net, p, Bound::upper).price;
    const double gap = (hi - lo).maxCoeff();
    CHECK((hi - lo).minCoeff() >= -1e-12);
    CHECK(gap <= previous_gap + 1e-12);
    previous_gap = gap;
  }
  CHECK(previous_gap <= 1e-9);
}

TEST_CASE("sandwich on random networks") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int components = 0, failures = 0;
  for (int t = 0; t < 25; ++t) {
    const auto n = static_cast<std::size_t>(2 + t % 4);
    const auto ni = static_cast<Eigen::Index>(n);
    const auto net = random_network(rng, n);
    GaussianCopulaLognormalSpec spec;
    spec.mu.resize(ni);
    spec.sigma.resize(ni);
    for (Eigen::Index i = 0; i < ni; ++i) {
      spec.sigma(i) = 0.2 + 0.8 * u(rng);
      spec.mu(i) = std::log((0.3 + u(rng)) * net.total_liabilities()(i)) - 0.5 * spec.sigma(i) * spec.sigma(i);
    }
    const double rho = 0.9 * u(rng);
    spec.correlation = Eigen::MatrixXd::Constant(ni, ni, rho);
    spec.correlation.diagonal().setOnes();

    std::vector<Marginal> m;
    for (Eigen::Index i = 0; i < ni; ++i) m.push_back(LogNormalMarginal{spec.mu(i), spec.sigma(i)});
    const MarginalSet marg(m);
    const auto lo = comonotonic_lower(net, marg);
    const auto hi = jensen_upper(net, marg.mean());
    const auto mc = mc_expectations(net, simulate(spec, 100000, 1000 + static_cast<std::uint64_t>(t)));
    for (Eigen::Index i = 0; i < ni; ++i) {
      ++components;
      const double se = mc.payment.se(i);
      if (mc.payment.mean(i) < lo.payment(i) - 3 * se || mc.payment.mean(i) > hi.payment(i) + 3 * se) ++failures;
      CHECK(lo.payment(i) <= hi.payment(i) + 1e-12);
    }
    // Total equity is largest under the comonotonic coupling.
    const double comonotone_equity = expected_values(net, marg.comonotonic_model()).equity.sum();
    CHECK(mc.sector_equity <= comonotone_equity + 3 * mc.sector_equity_se);
  }
  INFO("failures " << failures << " of " << components);
  CHECK(failures <= components / 100);
}

TEST_CASE("CAPM chain: lower, Monte Carlo, conditional, Jensen") {
  const auto net = netval::testing::two_bank();
  CapmParams p;
  p.r = 0.01;
  p.sigma_M = 0.5;
  p.beta = vec({1.2, 0.6});
  p.sigma = vec({0.8, 0.7});
  p.gamma = (p.sigma.array().square() - (p.beta.array() * p.sigma_M).square()).sqrt().matrix();
  p.s = vec({8.0, 7.0});
  p.complete(2);
  const auto lo = debt_price_bound(net, p, Bound::lower).price;
  const auto hi = debt_price_bound(net, p, Bound::upper).price;
  const auto batch = simulate(CapmSpec{p, Measure::risk_neutral, {}}, 400000, 99);
  const auto mc = mc_expectations(net, batch);
  const double disc = std::exp(-p.r * p.T);
  const Eigen::VectorXd mean_x = p.s * p.q0 * std::exp(p.r * p.T);
  const Eigen::VectorXd jensen = disc * jensen_upper(net, mean_x).payment.cwiseQuotient(net.total_liabilities());
  for (Eigen::Index i = 0; i < 2; ++i) {
    const double price = disc * mc.payment.mean(i) / net.total_liabilities()(i);
    const double se = disc * mc.payment.se(i) / net.total_liabilities()(i);
    CHECK(lo(i) <= price + 3 * se);
    CHECK(price <= hi(i) + 3 * se);
    CHECK(hi(i) <= jensen(i) + 1e-12);
  }
}
