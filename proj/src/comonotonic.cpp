#include "netval/comonotonic.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include <fmt/format.h>

#include "netval/error.hpp"

namespace netval {

namespace {

constexpr int kMaxBisection = 400;
constexpr double kRelTol = 1e-15;
constexpr double kHuge = 1e300;

bool all_affine(const FactorModel& model) {
  return std::all_of(model.maps().begin(), model.maps().end(),
                     [](const EndowmentMap& f) { return std::holds_alternative<AffineMap>(f.kind()); });
}

// Skips zero coefficients so unbounded quantile maps at u = 1 stay finite
// where they carry no weight.
double row_dot(const Eigen::MatrixXd& m, Eigen::Index r, const Eigen::VectorXd& x) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (m(r, j) != 0.0) s += m(r, j) * x(j);
  }
  return s;
}

struct Choice {
  std::size_t bank;
  double sup;
};

// Lowest-index argmax of the closed-form suprema.
Choice pick(const std::vector<std::size_t>& candidates, const std::vector<double>& sups) {
  Choice best{candidates.front(), sups.front()};
  for (std::size_t c = 1; c < candidates.size(); ++c) {
    if (sups[c] > best.sup) best = {candidates[c], sups[c]};
  }
  return best;
}

class ThresholdSearch {
 public:
  ThresholdSearch(const FinancialNetwork& net, const FactorModel& model) : net_(net), model_(model) {}

  // argmax over candidates of sup{q >= 0 : e_i' Delta f(q) < delta_i}^+,
  // clamped to `cap`.
  Choice next(const WealthLinearization& lin, const std::vector<std::size_t>& candidates, bool initial,
              double cap) const {
    if (all_affine(model_)) return affine(lin, candidates, cap);
    if (initial && !net_.cross_ownership()) {
      if (auto c = inverted(lin, candidates, cap)) return *c;
    }
    return bisect(lin, candidates, cap);
  }

 private:
  Choice affine(const WealthLinearization& lin, const std::vector<std::size_t>& candidates, double cap) const {
    const auto n = static_cast<Eigen::Index>(model_.size());
    Eigen::VectorXd a(n), b(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto& m = std::get<AffineMap>(model_.maps()[static_cast<std::size_t>(j)].kind());
      a(j) = m.intercept;
      b(j) = m.slope;
    }
    std::vector<double> sups;
    for (const auto i : candidates) {
      const auto r = static_cast<Eigen::Index>(i);
      const double c = lin.slope.row(r).dot(a) - lin.offset(r);
      const double d = lin.slope.row(r).dot(b);
      double s = 0.0;
      if (d > 0.0) {
        s = std::max(0.0, -c / d);
      } else if (c < 0.0) {
        s = kInfinity;
      }
      sups.push_back(std::min(s, cap));
    }
    return pick(candidates, sups);
  }

  std::optional<Choice> inverted(const WealthLinearization& lin, const std::vector<std::size_t>& candidates,
                                 double cap) const {
    std::vector<double> sups;
    for (const auto i : candidates) {
      const auto inv = model_.maps()[i].inverse(lin.offset(static_cast<Eigen::Index>(i)));
      if (!inv) return std::nullopt;
      sups.push_back(std::min(*inv, cap));
    }
    return pick(candidates, sups);
  }

  // Joint bisection on h(q) = min_i g_i(q), whose negative set is [0, max_i sup_i).
  Choice bisect(const WealthLinearization& lin, const std::vector<std::size_t>& candidates, double cap) const {
    std::vector<double> g(candidates.size());
    auto eval = [&](double q) {
      const Eigen::VectorXd x = model_.endowments(q);
      double h = kInfinity;
      for (std::size_t c = 0; c < candidates.size(); ++c) {
        const auto r = static_cast<Eigen::Index>(candidates[c]);
        g[c] = row_dot(lin.slope, r, x) - lin.offset(r);
        h = std::min(h, g[c]);
      }
      if (std::isnan(h)) throw Error(ErrorKind::model, fmt::format("endowment map is not finite at q = {}", q));
      return h;
    };
    auto first_negative = [&]() {
      for (std::size_t c = 0; c < candidates.size(); ++c) {
        if (g[c] < 0.0) return candidates[c];
      }
      return candidates.front();
    };

    double h_lo = eval(0.0);
    if (h_lo >= 0.0) return {candidates.front(), 0.0};

    double hi = std::min(cap, model_.domain_max());
    if (std::isinf(hi)) {
      hi = 1.0;
      while (eval(hi) < 0.0) {
        if (hi > kHuge) return {first_negative(), cap};
        hi *= 2.0;
      }
    }
    double h_hi = eval(hi);
    if (h_hi < 0.0) return {first_negative(), hi};

    double lo = 0.0;
    for (int it = 0; it < kMaxBisection && hi - lo > kRelTol * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      const double h = eval(mid);
      const double slack = 1e-12 * std::max({1.0, std::abs(h_lo), std::abs(h_hi)});
      if (h < h_lo - slack || h > h_hi + slack) {
        throw Error(ErrorKind::model, fmt::format("endowment maps are not nondecreasing near q = {}", mid));
      }
      if (h < 0.0) {
        lo = mid;
        h_lo = h;
      } else {
        hi = mid;
        h_hi = h;
      }
    }
    eval(lo);
    const std::size_t bank = first_negative();
    double sup = hi;
    for (const double j : model_.jumps()) {
      if (j >= lo - 4.0 * (hi - lo) && j <= hi + 4.0 * (hi - lo)) sup = j;
    }
    return {bank, std::min(sup, cap)};
  }

  const FinancialNetwork& net_;
  const FactorModel& model_;
};

}  // namespace

double SolvencyThresholds::sorted(std::size_t k) const {
  if (k == 0) return kInfinity;
  if (k > order.size()) return 0.0;
  return q_star(static_cast<Eigen::Index>(order[k - 1]));
}

DefaultSet SolvencyThresholds::regime(std::size_t k) const {
  DefaultSet z(order.size(), false);
  for (std::size_t j = 0; j < k && j < order.size(); ++j) z[order[j]] = true;
  return z;
}

SolvencyThresholds solvency_thresholds(const FinancialNetwork& net, const FactorModel& model) {
  const std::size_t n = net.size();
  if (model.size() != n) {
    throw Error(ErrorKind::invalid_input,
                fmt::format("factor model has {} maps but the network has {} banks", model.size(), n));
  }
  SolvencyThresholds out;
  out.q_star = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  out.position.assign(n, 0);

  ThresholdSearch search(net, model);
  DefaultSet z(n, false);
  double prev = kInfinity;
  for (std::size_t k = 0; k < n; ++k) {
    out.ladder.push_back(linearize(net, z));
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < n; ++i) {
      if (!z[i]) candidates.push_back(i);
    }
    const Choice c = search.next(out.ladder.back(), candidates, k == 0, prev);
    prev = std::min(prev, c.sup);
    out.q_star(static_cast<Eigen::Index>(c.bank)) = prev;
    out.position[c.bank] = k;
    out.order.push_back(c.bank);
    z[c.bank] = true;
  }
  out.ladder.push_back(linearize(net, z));
  return out;
}

ExpectedClearing expected_values(const FinancialNetwork& net, const FactorModel& model) {
  return expected_values(net, model, solvency_thresholds(net, model));
}

ExpectedClearing expected_values(const FinancialNetwork& net, const FactorModel& model,
                                 const SolvencyThresholds& th) {
  const std::size_t n = net.size();
  const auto ni = static_cast<Eigen::Index>(n);
  std::vector<Eigen::VectorXd> contribution(n + 1, Eigen::VectorXd::Zero(ni));
  std::vector<double> prob(n + 1, 0.0);

  Eigen::VectorXd pe(ni);
  for (std::size_t k = 0; k <= n; ++k) {
    const double a = th.sorted(k + 1);
    const double b = th.sorted(k);
    if (!(a < b)) continue;
    double p = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const auto m = partial_expectation(model.distribution(), model.maps()[j], a, b);
      p = m.probability;
      pe(static_cast<Eigen::Index>(j)) = m.partial_expectation;
    }
    if (p == 0.0 && pe.isZero(0.0)) continue;
    prob[k] = p;
    contribution[k] = th.ladder[k].slope * pe - th.ladder[k].offset * p;
  }

  ExpectedClearing out;
  out.default_probability = Eigen::VectorXd::Zero(ni);
  out.wealth = Eigen::VectorXd::Zero(ni);
  out.payment = net.total_liabilities();
  out.equity = Eigen::VectorXd::Zero(ni);
  for (std::size_t k = 0; k <= n; ++k) out.wealth += contribution[k];
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const std::size_t m = th.position[i] + 1;
    for (std::size_t k = 0; k <= n; ++k) {
      if (k < m) {
        out.equity(r) += contribution[k](r);
      } else {
        out.payment(r) += contribution[k](r);
        out.default_probability(r) += prob[k];
      }
    }
  }
  return out;
}

}  // namespace netval
