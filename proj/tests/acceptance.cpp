// Acceptance checks 1-8. Prints one PASS/FAIL line per criterion and exits
// nonzero when any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "netval/bounds.hpp"
#include "netval/calibration.hpp"
#include "netval/capm.hpp"
#include "netval/clearing.hpp"
#include "netval/comonotonic.hpp"
#include "netval/error.hpp"
#include "netval/io.hpp"
#include "netval/regions.hpp"
#include "netval/simulation.hpp"
#include "netval/statics.hpp"
#include "test_support.hpp"

using namespace netval;
using netval::testing::counterexample;
using netval::testing::two_bank;
using netval::testing::random_network;
using netval::testing::vec;

namespace {

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void require(bool condition, const std::string& what) {
    if (!condition) {
      if (!ok) detail << "; ";
      detail << what;
      ok = false;
    }
  }
};

double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

Eigen::VectorXd pay(const FinancialNetwork& net, const Eigen::VectorXd& x) { return greatest_clearing(net, x).payments; }

std::map<std::string, double> index_rows(const std::vector<StaticsRow>& rows) {
  std::map<std::string, double> out;
  for (const auto& r : rows) out[r.param + "|" + r.bank + "|" + r.metric] = r.value;
  return out;
}

CapmParams two_bank_capm() {
  CapmParams p;
  p.sigma_M = 1.0;
  p.beta = vec({1, 1});
  p.gamma = vec({0, 0});
  p.s = vec({3, 4});
  p.complete(2);
  return p;
}

void criterion1(Check& c) {
  for (const double a : {1.0, 0.5}) {
    const auto net = counterexample(a, a);
    const double den = 6.0 - a * a;
    const Eigen::VectorXd p02 = pay(net, vec({0, 2})), p10 = pay(net, vec({1, 0}));
    const Eigen::VectorXd p12 = pay(net, vec({1, 2})), p00 = pay(net, vec({0, 0}));
    const double tol = 1e-12;
    c.require(max_abs(p02 - vec({4 * a * a / den, 12 * a / den})) <= tol, "p(0,2)");
    c.require(max_abs(p10 - vec({6 * a / den, 3 * a * a / den})) <= tol, "p(1,0)");
    c.require(max_abs(p12 - vec({2, 3})) <= tol, "p(1,2)");
    c.require(max_abs(p00) <= tol, "p(0,0)");
    const Eigen::VectorXd epx = 0.5 * (p02 + p10), epz = 0.5 * (p00 + p12);
    c.require(max_abs(epx - vec({a * (2 * a + 3) / den, 3 * a * (a + 4) / (2 * den)})) <= tol, "E[p(X)]");
    c.require(max_abs(epz - vec({1, 1.5})) <= tol, "E[p(Z)]");
    const Eigen::VectorXd pex = pay(net, vec({0.5, 1.0}));
    if (a == 1.0) {
      c.require(max_abs(pex - epx) <= tol && max_abs(epx - epz) <= tol, "equality at full recovery");
    } else {
      c.require((epz - epx).minCoeff() > 0.0, "lower bound should fail");
      bool refused = false;
      try {
        comonotonic_lower(net, MarginalSet({FiniteSupportMarginal{{0, 1}, {0.5, 0.5}},
                                            FiniteSupportMarginal{{0, 2}, {0.5, 0.5}}}));
      } catch (const Error& e) {
        refused = e.kind() == ErrorKind::model;
      }
      c.require(refused, "bound refused under bankruptcy costs");
    }
  }
  c.detail << "alpha in {1, 0.5}";
}

void criterion2(Check& c) {
  const double eps = 0.1;
  const auto net = counterexample();
  auto ext = [&](const Eigen::VectorXd& x) {
    const auto r = greatest_clearing(net, x);
    return vec({r.equity(0), r.equity(1), r.societal_payment});
  };
  const Eigen::VectorXd ex = 0.5 * (ext(vec({1 + eps, 2})) + ext(vec({2, 1 + eps})));
  const Eigen::VectorXd ez = 0.5 * (ext(vec({1 + eps, 1 + eps})) + ext(vec({2, 2})));
  c.require(max_abs(ex - vec({(1 + 2 * eps) / 3, 0, (8 + eps) / 3})) <= 1e-12, "E[E(X)]");
  c.require(max_abs(ez - vec({0.5, 0, 2.5 + eps})) <= 1e-12, "E[E(Z)]");
  c.require(ex(0) < ez(0) && ex(2) > ez(2), "opposite directions");
  c.detail << std::setprecision(6) << "E[E(X)]=(" << ex(0) << ", " << ex(1) << ", " << ex(2) << ") E[E(Z)]=("
           << ez(0) << ", " << ez(1) << ", " << ez(2) << ")";
}

Eigen::MatrixXd random_correlation(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd a(n, n + 1);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = g(rng);
  }
  Eigen::MatrixXd c = a * a.transpose();
  const Eigen::VectorXd d = c.diagonal().cwiseSqrt().cwiseInverse();
  c = d.asDiagonal() * c * d.asDiagonal();
  c.diagonal().setOnes();
  return c;
}

void criterion3(Check& c) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int components = 0, failures = 0;
  for (int t = 0; t < 200; ++t) {
    const auto n = static_cast<Eigen::Index>(1 + t % 5);
    const auto net = random_network(rng, static_cast<std::size_t>(n));
    GaussianCopulaLognormalSpec spec;
    spec.mu.resize(n);
    spec.sigma.resize(n);
    std::vector<Marginal> m;
    for (Eigen::Index i = 0; i < n; ++i) {
      spec.sigma(i) = 0.1 + 0.9 * u(rng);
      spec.mu(i) = std::log((0.2 + 1.2 * u(rng)) * net.total_liabilities()(i)) - 0.5 * spec.sigma(i) * spec.sigma(i);
      m.push_back(LogNormalMarginal{spec.mu(i), spec.sigma(i)});
    }
    spec.correlation = random_correlation(rng, n);
    const MarginalSet marg(m);
    const auto lo = comonotonic_lower(net, marg);
    const auto hi = jensen_upper(net, marg.mean());
    const auto mc = mc_expectations(net, simulate(spec, 100000, 5000 + static_cast<std::uint64_t>(t)));
    for (Eigen::Index i = 0; i < n; ++i) {
      ++components;
      const double se = mc.payment.se(i);
      if (mc.payment.mean(i) < lo.payment(i) - 3 * se || mc.payment.mean(i) > hi.payment(i) + 3 * se) ++failures;
    }
  }
  c.require(failures <= components / 100, "failure rate above 1%");
  c.detail << failures << " of " << components << " components outside the sandwich";
}

// Bisection on the solvency of the frictionless Picard fixed point.
double threshold_oracle(const FinancialNetwork& net, const Eigen::VectorXd& slope, std::size_t bank) {
  auto solvent = [&](double q) {
    return netval::testing::picard_greatest(net, q * slope)(static_cast<Eigen::Index>(bank)) >= 0.0;
  };
  double lo = 0.0, hi = 1.0;
  while (!solvent(hi)) hi *= 2.0;
  for (int k = 0; k < 200 && hi - lo > 1e-14; ++k) {
    const double mid = 0.5 * (lo + hi);
    (solvent(mid) ? hi : lo) = mid;
  }
  return hi;
}

void criterion4(Check& c) {
  const auto net = two_bank();
  const auto model = factor_model_from_json(read_json_file(netval::testing::data_path("two_bank_factor_model.json")));
  const auto th = solvency_thresholds(net, model);
  // Bank 1 is solvent iff 3q + 3 >= 10 with bank 2 paying in full; bank 2
  // iff 4q + 0.7(3q + 3) >= 6 with bank 1 in default.
  c.require(std::abs(th.q_star(0) - 7.0 / 3.0) <= 1e-9, "q*_1 algebra");
  c.require(std::abs(th.q_star(1) - 39.0 / 61.0) <= 1e-9, "q*_2 algebra");
  for (std::size_t i = 0; i < 2; ++i) {
    c.require(std::abs(th.q_star(static_cast<Eigen::Index>(i)) - threshold_oracle(net, vec({3, 4}), i)) <= 1e-9,
              "q* bisection");
  }
  const auto ev = expected_values(net, model, th);
  const auto mc = mc_expectations(net, simulate(ComonotonicFactorSpec{model}, 1000000, 424242));
  double worst = 0.0;
  auto compare = [&](const Eigen::VectorXd& analytic, const Estimate& est, const char* what) {
    for (Eigen::Index i = 0; i < analytic.size(); ++i) {
      const double gap = std::abs(analytic(i) - est.mean(i));
      if (est.se(i) > 0.0) worst = std::max(worst, gap / est.se(i));
      c.require(gap <= 3 * est.se(i) + 1e-12, what);
    }
  };
  compare(ev.default_probability, mc.default_probability, "pd");
  compare(ev.payment, mc.payment, "Ep");
  compare(ev.equity, mc.equity, "EE");
  compare(ev.wealth, mc.wealth, "EV");
  c.detail << std::setprecision(3) << "q*=(" << std::setprecision(12) << th.q_star(0) << ", " << th.q_star(1)
           << "), worst MC gap " << std::setprecision(3) << worst << " SE";
}

void criterion5(Check& c) {
  const std::vector<double> grid = {0.0, 0.25, 0.5, 0.75, 1.0};
  auto rows = index_rows(sweep_beta(two_bank(), two_bank_capm(), grid));
  auto at = [&](double beta, int bank, const std::string& metric) {
    return rows.at(format_number(beta) + "|" + std::to_string(bank) + "|" + metric);
  };
  for (int bank = 1; bank <= 2; ++bank) {
    for (const double b : grid) {
      c.require(std::abs(at(b, bank, "price_lower") - at(0.0, bank, "price_lower")) <= 1e-12, "lower varies");
      c.require(std::abs(at(b, bank, "price_jensen") - at(0.0, bank, "price_jensen")) <= 1e-12, "Jensen varies");
    }
    c.require(std::abs(at(1.0, bank, "price_upper") - at(1.0, bank, "price_lower")) <= 1e-9, "upper(1) != lower");
  }
  for (std::size_t k = 1; k < grid.size(); ++k) {
    c.require(at(grid[k], 1, "qstar_upper") < at(grid[k - 1], 1, "qstar_upper"), "q1 not decreasing");
    c.require(at(grid[k], 2, "qstar_upper") > at(grid[k - 1], 2, "qstar_upper"), "q2 not increasing");
  }
  c.detail << std::setprecision(6) << "lower=(" << at(0, 1, "price_lower") << ", " << at(0, 2, "price_lower")
           << ") upper(0)=(" << at(0, 1, "price_upper") << ", " << at(0, 2, "price_upper") << ")";
}

void criterion6(Check& c) {
  const auto net = two_bank();
  const auto params = two_bank_capm();
  std::vector<double> maturities;
  for (int k = 1; k <= 20; ++k) maturities.push_back(0.25 * k);
  const auto mat = sweep_maturity(net, params, maturities);
  const auto m = index_rows(mat);
  for (const double t : maturities) {
    for (const char* bank : {"1", "2"}) {
      const std::string key = format_number(t) + "|" + bank + "|";
      c.require(m.at(key + "rate") >= m.at(key + "rate_riskfree"), "rate below riskfree baseline");
    }
  }

  std::vector<double> d1, d2;
  for (int k = 1; k <= 8; ++k) d1.push_back(0.25 * k);
  for (int k = 1; k <= 8; ++k) d2.push_back(0.1 * k);
  auto rate2 = [&](RatioRoute route) {
    const auto rows = index_rows(sweep_ratio(net, params, route, d1, d2));
    std::map<std::pair<std::size_t, std::size_t>, double> out;
    for (std::size_t a = 0; a < d1.size(); ++a) {
      for (std::size_t b = 0; b < d2.size(); ++b) {
        const auto key = "d1=" + format_number(d1[a]) + ";d2=" + format_number(d2[b]) + "|2|rate";
        if (const auto it = rows.find(key); it != rows.end()) out[{a, b}] = it->second;
      }
    }
    return out;
  };
  // Pairs of feasible points adjacent in d1 at the same d2.
  auto decreases = [&](const std::map<std::pair<std::size_t, std::size_t>, double>& r, int& pairs) {
    int count = 0;
    pairs = 0;
    for (const auto& [key, v] : r) {
      const auto next = r.find({key.first + 1, key.second});
      if (next == r.end()) continue;
      ++pairs;
      if (next->second < v - 1e-12) ++count;
    }
    return count;
  };
  int asset_pairs = 0, liability_pairs = 0;
  const int asset_breaks = decreases(rate2(RatioRoute::assets), asset_pairs);
  const int liability_breaks = decreases(rate2(RatioRoute::liabilities), liability_pairs);
  c.require(asset_pairs > 0 && asset_breaks == 0, "asset route not monotone in d1");
  c.require(liability_breaks > 0, "liability route monotone");
  c.detail << "asset route " << asset_breaks << "/" << asset_pairs << " decreasing pairs, liability route "
           << liability_breaks << "/" << liability_pairs;
}

void criterion7(Check& c) {
  const auto sheets = parse_balance_sheets_csv(read_file(netval::testing::data_path("eba_synthetic_87.csv")));
  const auto cal = calibrated_network(sheets, 0.3, 42);
  CapmParams p;
  p.sigma_M = 0.2;
  p.beta = Eigen::VectorXd::Ones(87);
  p.gamma = Eigen::VectorXd::Zero(87);
  p.s = cal.s;
  p.complete(87);

  const auto start = std::chrono::steady_clock::now();
  const auto model = capm_factor_model(p, bound_exponents(p, Bound::lower));
  const auto ev = expected_values(cal.network, model);
  const auto price = debt_price_bound(cal.network, p, Bound::lower);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  c.require(seconds < 1.0, "87-bank pricing too slow");
  c.require(ev.payment.allFinite() && price.price.allFinite(), "non-finite output");

  std::vector<double> grid;
  for (int k = 0; k <= 10; ++k) grid.push_back(0.1 * k);
  const auto rows = index_rows(sweep_alpha(cal.network, p, grid));
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const auto prev = format_number(grid[k - 1]) + "|median|", cur = format_number(grid[k]) + "|median|";
    c.require(rows.at(cur + "rate") <= rows.at(prev + "rate") + 1e-12, "median rate increases");
    c.require(rows.at(cur + "market_cap") >= rows.at(prev + "market_cap") - 1e-12, "median market cap decreases");
  }
  c.detail << std::setprecision(3) << "pricing " << seconds * 1e3 << " ms, median rate " << rows.at("0|median|rate")
           << " -> " << rows.at("1|median|rate");
}

void criterion8(Check& c) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int cases = 0;
  for (int t = 0; t < 2000; ++t, ++cases) {
    const double a = (t % 6) / 5.0;
    const auto n = static_cast<std::size_t>(1 + t % 8);
    const auto net = random_network(rng, n, a, a, t % 4 == 0);
    const Eigen::VectorXd x = netval::testing::random_endowment(rng, net, 1.2);
    Eigen::VectorXd y = x;
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += u(rng) * (i % 2);
    const auto rx = greatest_clearing(net, x), ry = greatest_clearing(net, y);
    c.require(rx.iterations <= n + 1, "FDA iterations");
    c.require((ry.wealth - rx.wealth).minCoeff() >= -1e-10, "monotonicity");
    c.require(max_abs(rx.wealth - netval::testing::picard_greatest(net, x)) <= 1e-8 * (1.0 + max_abs(rx.wealth)),
              "Picard oracle");
  }
  for (int t = 0; t < 2000; ++t, ++cases) {
    const auto net = random_network(rng, static_cast<std::size_t>(2 + t % 6));
    const Eigen::VectorXd x = netval::testing::random_endowment(rng, net);
    const Eigen::VectorXd y = netval::testing::random_endowment(rng, net);
    const Eigen::VectorXd px = pay(net, x), py = pay(net, y);
    c.require((pay(net, 0.5 * (x + y)) - 0.5 * (px + py)).minCoeff() >= -1e-10, "concavity");
    c.require((px + py - pay(net, x.cwiseMin(y)) - pay(net, x.cwiseMax(y))).minCoeff() >= -1e-10, "submodularity");
    const auto r = greatest_clearing(net, x);
    c.require(std::abs(r.equity.sum() + r.societal_payment - x.sum()) <= 1e-10 * (1.0 + x.sum()), "conservation");
  }

  int points = 0, disagreements = 0;
  for (int t = 0; t < 20; ++t) {
    const double a = t % 2 ? 0.5 : 1.0;
    const auto net = random_network(rng, 2 + static_cast<std::size_t>(t % 4), a, a);
    const auto partition = enumerate_regions(net);
    const Eigen::VectorXd scale = 1.5 * net.total_liabilities();
    for (int k = 0; k < 5000; ++k, ++points) {
      Eigen::VectorXd x(scale.size());
      for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = u(rng) * scale(i);
      if (classify(partition, x) != greatest_clearing(net, x).defaults) ++disagreements;
    }
  }
  c.require(disagreements == 0, "region classification disagrees");

  const auto lossy = counterexample(0.5, 0.5);
  const auto partition = enumerate_regions(lossy);
  std::uniform_real_distribution<double> w(0.0, 3.0);
  bool nonconvex = false;
  for (int k = 0; k < 200000 && !nonconvex; ++k) {
    const Eigen::VectorXd x = vec({w(rng), w(rng)}), y = vec({w(rng), w(rng)});
    const auto zx = greatest_clearing(lossy, x).defaults;
    if (zx != greatest_clearing(lossy, y).defaults) continue;
    nonconvex = greatest_clearing(lossy, 0.5 * (x + y)).defaults != zx && classify(partition, 0.5 * (x + y)) != zx;
  }
  c.require(nonconvex, "no non-convex region found");
  c.detail << cases << " clearing cases, " << points << " region points, " << disagreements << " disagreements";
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_seconds;
    std::function<void(Check&)> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "counterexample payment fixtures", 1.0, criterion1},
      {2, "equity non-comparability", 1.0, criterion2},
      {3, "sandwich on random networks", 120.0, criterion3},
      {4, "comonotonic expectations vs Monte Carlo", 30.0, criterion4},
      {5, "beta sweep", 5.0, criterion5},
      {6, "maturity and debt-firm ratio statics", 60.0, criterion6},
      {7, "87-bank scale check", 60.0, criterion7},
      {8, "invariant suites", 300.0, criterion8},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check c;
    const auto start = std::chrono::steady_clock::now();
    try {
      cr.run(c);
    } catch (const std::exception& e) {
      c.require(false, std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    c.require(seconds < cr.limit_seconds, "over time limit");
    if (!c.ok) ++failed;
    std::cout << "criterion " << cr.id << " " << (c.ok ? "PASS" : "FAIL") << " [" << cr.name << "] "
              << std::fixed << std::setprecision(2) << seconds << " s: " << std::defaultfloat << c.detail.str()
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
