#include "netval/factor_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

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

double safe_log(double q) { return q <= 0.0 ? -kInfinity : std::log(q); }

std::vector<double> pchip_slopes(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t m = x.size();
  std::vector<double> slopes(m, 0.0);
  if (m < 2) return slopes;
  std::vector<double> h(m - 1), secant(m - 1);
  for (std::size_t k = 0; k + 1 < m; ++k) {
    h[k] = x[k + 1] - x[k];
    secant[k] = (y[k + 1] - y[k]) / h[k];
  }
  slopes.front() = secant.front();
  slopes.back() = secant.back();
  for (std::size_t k = 1; k + 1 < m; ++k) {
    if (secant[k - 1] * secant[k] <= 0.0) continue;
    const double w1 = 2.0 * h[k] + h[k - 1];
    const double w2 = h[k] + 2.0 * h[k - 1];
    slopes[k] = (w1 + w2) / (w1 / secant[k - 1] + w2 / secant[k]);
  }
  return slopes;
}

double eval_tabulated(const TabulatedMap& t, double q) {
  if (q <= t.knots.front()) return t.values.front();
  if (q >= t.knots.back()) return t.values.back();
  const auto it = std::upper_bound(t.knots.begin(), t.knots.end(), q);
  const auto k = static_cast<std::size_t>(it - t.knots.begin()) - 1;
  const double h = t.knots[k + 1] - t.knots[k];
  const double s = (q - t.knots[k]) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * t.values[k] + (s3 - 2 * s2 + s) * h * t.slopes[k] +
         (-2 * s3 + 3 * s2) * t.values[k + 1] + (s3 - s2) * h * t.slopes[k + 1];
}

double eval_step(const StepQuantileMap& m, double u) {
  // inf{x : F(x) >= u}
  const auto it = std::lower_bound(m.cumulative.begin(), m.cumulative.end(), u);
  const auto k = std::min(static_cast<std::size_t>(it - m.cumulative.begin()), m.values.size() - 1);
  return m.values[k];
}

// E[q^beta 1{a <= q < b}] for ln q ~ N(mu, sigma^2), sigma > 0.
double lognormal_power_moment(double mu, double sigma, double beta, double a, double b) {
  const double la = (safe_log(a) - mu) / sigma - beta * sigma;
  const double lb = (safe_log(b) - mu) / sigma - beta * sigma;
  const double p = normal_interval(la, lb);
  if (p == 0.0) return 0.0;
  return std::exp(beta * mu + 0.5 * beta * beta * sigma * sigma) * p;
}

IntervalMoments discrete_moments(const std::vector<double>& points, const std::vector<double>* weights,
                                 const EndowmentMap& f, double a, double b) {
  IntervalMoments out;
  const double w_equal = 1.0 / static_cast<double>(points.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    const double q = points[k];
    if (q < a || !(q < b)) continue;
    const double w = weights ? (*weights)[k] : w_equal;
    out.probability += w;
    out.partial_expectation += w * f(q);
  }
  return out;
}

}  // namespace

// --- EndowmentMap -----------------------------------------------------------

EndowmentMap EndowmentMap::affine(double intercept, double slope) {
  if (!(std::isfinite(intercept) && std::isfinite(slope)) || intercept < 0.0 || slope < 0.0) {
    throw Error(ErrorKind::invalid_input, "affine map needs finite intercept >= 0 and slope >= 0");
  }
  return EndowmentMap(AffineMap{intercept, slope});
}

EndowmentMap EndowmentMap::power(double scale, double log_factor, double exponent, double shift) {
  if (!(std::isfinite(scale) && std::isfinite(log_factor) && std::isfinite(exponent) && std::isfinite(shift)) ||
      scale < 0.0 || exponent < 0.0 || shift < 0.0) {
    throw Error(ErrorKind::invalid_input, "power map needs finite scale >= 0, exponent >= 0 and shift >= 0");
  }
  return EndowmentMap(PowerMap{scale, log_factor, exponent, shift});
}

EndowmentMap EndowmentMap::tabulated(std::vector<double> knots, std::vector<double> values) {
  if (knots.empty() || knots.size() != values.size()) {
    throw Error(ErrorKind::invalid_input, "tabulated map needs matching, non-empty knots and values");
  }
  for (std::size_t k = 0; k < knots.size(); ++k) {
    if (!std::isfinite(knots[k]) || !std::isfinite(values[k]) || values[k] < 0.0) {
      throw Error(ErrorKind::invalid_input, "tabulated map entries must be finite with nonnegative values");
    }
    if (k > 0 && !(knots[k] > knots[k - 1])) {
      throw Error(ErrorKind::invalid_input, "tabulated map knots must be strictly increasing");
    }
    if (k > 0 && values[k] < values[k - 1]) {
      throw Error(ErrorKind::model, "tabulated map values must be nondecreasing");
    }
  }
  if (knots.front() < 0.0) throw Error(ErrorKind::invalid_input, "tabulated map knots must be >= 0");
  auto slopes = pchip_slopes(knots, values);
  return EndowmentMap(TabulatedMap{std::move(knots), std::move(values), std::move(slopes)});
}

EndowmentMap EndowmentMap::lognormal_quantile(double mu, double sigma) {
  if (!(std::isfinite(mu) && std::isfinite(sigma)) || sigma < 0.0) {
    throw Error(ErrorKind::invalid_input, "lognormal quantile map needs finite mu and sigma >= 0");
  }
  return EndowmentMap(LognormalQuantileMap{mu, sigma});
}

EndowmentMap EndowmentMap::step_quantile(std::vector<double> values, std::vector<double> probabilities) {
  if (values.empty() || values.size() != probabilities.size()) {
    throw Error(ErrorKind::invalid_input, "finite-support marginal needs matching, non-empty values and probabilities");
  }
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t l, std::size_t r) { return values[l] < values[r]; });
  StepQuantileMap m;
  double total = 0.0;
  for (const auto k : idx) {
    if (!std::isfinite(values[k]) || values[k] < 0.0 || !(probabilities[k] >= 0.0)) {
      throw Error(ErrorKind::invalid_input, "finite-support marginal needs values >= 0 and probabilities >= 0");
    }
    if (probabilities[k] == 0.0) continue;
    total += probabilities[k];
    if (!m.values.empty() && m.values.back() == values[k]) {
      m.cumulative.back() = total;
    } else {
      m.values.push_back(values[k]);
      m.cumulative.push_back(total);
    }
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw Error(ErrorKind::invalid_input, fmt::format("finite-support probabilities sum to {}, not 1", total));
  }
  m.cumulative.back() = 1.0;
  return EndowmentMap(std::move(m));
}

double EndowmentMap::operator()(double q) const {
  return std::visit(
      overloaded{
          [q](const AffineMap& m) { return m.intercept + m.slope * q; },
          [q](const PowerMap& m) {
            if (m.scale == 0.0) return m.shift;
            if (m.exponent == 0.0) return m.shift + m.scale * std::exp(m.log_factor);
            if (q <= 0.0) return m.shift;
            return m.shift + m.scale * std::exp(m.log_factor + m.exponent * std::log(q));
          },
          [q](const TabulatedMap& m) { return eval_tabulated(m, q); },
          [q](const LognormalQuantileMap& m) {
            if (q <= 0.0) return 0.0;
            if (q >= 1.0) return m.sigma > 0.0 ? kInfinity : std::exp(m.mu);
            return std::exp(m.mu + m.sigma * normal_quantile(q));
          },
          [q](const StepQuantileMap& m) { return eval_step(m, std::clamp(q, 0.0, 1.0)); },
      },
      kind_);
}

double EndowmentMap::domain_max() const {
  if (std::holds_alternative<LognormalQuantileMap>(kind_) || std::holds_alternative<StepQuantileMap>(kind_)) {
    return 1.0;
  }
  return kInfinity;
}

std::optional<double> EndowmentMap::inverse(double y) const {
  if (const auto* m = std::get_if<AffineMap>(&kind_)) {
    if (!(m->slope > 0.0)) return std::nullopt;
    return std::max(0.0, (y - m->intercept) / m->slope);
  }
  if (const auto* m = std::get_if<PowerMap>(&kind_)) {
    if (!(m->scale > 0.0 && m->exponent > 0.0)) return std::nullopt;
    if (y <= m->shift) return 0.0;
    return std::exp((std::log(y - m->shift) - std::log(m->scale) - m->log_factor) / m->exponent);
  }
  return std::nullopt;
}

std::vector<double> EndowmentMap::jumps() const {
  std::vector<double> out;
  if (const auto* m = std::get_if<StepQuantileMap>(&kind_)) {
    out.assign(m->cumulative.begin(), m->cumulative.end() - 1);
  }
  return out;
}

// --- FactorDistribution -----------------------------------------------------

FactorDistribution FactorDistribution::lognormal(double mu, double sigma) {
  if (!(std::isfinite(mu) && std::isfinite(sigma)) || sigma < 0.0) {
    throw Error(ErrorKind::invalid_input, "lognormal factor needs finite mu and sigma >= 0");
  }
  return FactorDistribution(LogNormalLaw{mu, sigma});
}

FactorDistribution FactorDistribution::point_masses(std::vector<double> points, std::vector<double> weights) {
  if (points.empty() || points.size() != weights.size()) {
    throw Error(ErrorKind::invalid_input, "point-mass factor needs matching, non-empty points and weights");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (!std::isfinite(points[k]) || points[k] < 0.0 || !(weights[k] >= 0.0)) {
      throw Error(ErrorKind::invalid_input, "point-mass factor needs points >= 0 and weights >= 0");
    }
    total += weights[k];
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw Error(ErrorKind::invalid_input, fmt::format("point-mass weights sum to {}, not 1", total));
  }
  return FactorDistribution(PointMassLaw{std::move(points), std::move(weights)});
}

FactorDistribution FactorDistribution::empirical(std::vector<double> samples) {
  if (samples.empty()) throw Error(ErrorKind::invalid_input, "empirical factor needs at least one sample");
  for (const double s : samples) {
    if (!std::isfinite(s) || s < 0.0) throw Error(ErrorKind::invalid_input, "empirical factor samples must be >= 0");
  }
  std::sort(samples.begin(), samples.end());
  return FactorDistribution(EmpiricalLaw{std::move(samples)});
}

FactorDistribution FactorDistribution::uniform() { return FactorDistribution(UniformLaw{}); }

double FactorDistribution::probability(double a, double b) const {
  if (!(a < b)) return 0.0;
  return std::visit(
      overloaded{
          [&](const LogNormalLaw& d) {
            if (d.sigma == 0.0) {
              const double q = std::exp(d.mu);
              return (q >= a && q < b) ? 1.0 : 0.0;
            }
            return normal_interval((safe_log(a) - d.mu) / d.sigma, (safe_log(b) - d.mu) / d.sigma);
          },
          [&](const PointMassLaw& d) {
            double p = 0.0;
            for (std::size_t k = 0; k < d.points.size(); ++k) {
              if (d.points[k] >= a && d.points[k] < b) p += d.weights[k];
            }
            return p;
          },
          [&](const EmpiricalLaw& d) {
            const auto lo = std::lower_bound(d.samples.begin(), d.samples.end(), a);
            const auto hi = std::lower_bound(d.samples.begin(), d.samples.end(), b);
            return static_cast<double>(hi - lo) / static_cast<double>(d.samples.size());
          },
          [&](const UniformLaw&) { return std::max(0.0, std::min(b, 1.0) - std::max(a, 0.0)); },
      },
      kind_);
}

double FactorDistribution::quantile(double u) const {
  return std::visit(
      overloaded{
          [u](const LogNormalLaw& d) {
            if (d.sigma == 0.0) return std::exp(d.mu);
            return std::exp(d.mu + d.sigma * normal_quantile(u));
          },
          [u](const PointMassLaw& d) {
            std::vector<std::size_t> idx(d.points.size());
            std::iota(idx.begin(), idx.end(), std::size_t{0});
            std::sort(idx.begin(), idx.end(), [&](std::size_t l, std::size_t r) { return d.points[l] < d.points[r]; });
            double c = 0.0;
            for (const auto k : idx) {
              c += d.weights[k];
              if (c >= u && d.weights[k] > 0.0) return d.points[k];
            }
            return d.points[idx.back()];
          },
          [u](const EmpiricalLaw& d) {
            const auto m = d.samples.size();
            auto k = static_cast<std::size_t>(std::ceil(u * static_cast<double>(m)));
            k = std::clamp<std::size_t>(k, 1, m);
            return d.samples[k - 1];
          },
          [u](const UniformLaw&) { return u; },
      },
      kind_);
}

double FactorDistribution::support_max() const {
  return std::visit(overloaded{
                        [](const LogNormalLaw& d) { return d.sigma == 0.0 ? std::exp(d.mu) : kInfinity; },
                        [](const PointMassLaw& d) {
                          double m = 0.0;
                          for (std::size_t k = 0; k < d.points.size(); ++k) {
                            if (d.weights[k] > 0.0) m = std::max(m, d.points[k]);
                          }
                          return m;
                        },
                        [](const EmpiricalLaw& d) { return d.samples.back(); },
                        [](const UniformLaw&) { return 1.0; },
                    },
                    kind_);
}

// --- partial expectations ---------------------------------------------------

IntervalMoments partial_expectation(const FactorDistribution& dist, const EndowmentMap& f, double a, double b) {
  if (!(a >= 0.0) || std::isnan(b)) throw Error(ErrorKind::invalid_input, "interval must satisfy 0 <= a");
  if (a > b) throw Error(ErrorKind::invalid_input, fmt::format("empty interval: a = {} > b = {}", a, b));
  if (a == b) return {};

  const auto& law = dist.kind();
  if (const auto* d = std::get_if<PointMassLaw>(&law)) return discrete_moments(d->points, &d->weights, f, a, b);
  if (const auto* d = std::get_if<EmpiricalLaw>(&law)) return discrete_moments(d->samples, nullptr, f, a, b);

  if (const auto* d = std::get_if<LogNormalLaw>(&law)) {
    if (d->sigma == 0.0) {
      const double q = std::exp(d->mu);
      return discrete_moments({q}, nullptr, f, a, b);
    }
    if (f.domain_max() < kInfinity) {
      throw Error(ErrorKind::model, "quantile maps require a factor supported on [0,1]");
    }
    IntervalMoments out;
    out.probability = dist.probability(a, b);
    if (const auto* m = std::get_if<AffineMap>(&f.kind())) {
      out.partial_expectation =
          m->intercept * out.probability + m->slope * lognormal_power_moment(d->mu, d->sigma, 1.0, a, b);
      return out;
    }
    if (const auto* m = std::get_if<PowerMap>(&f.kind())) {
      const double scaled = m->scale == 0.0 ? 0.0
                                            : m->scale * std::exp(m->log_factor) *
                                                  lognormal_power_moment(d->mu, d->sigma, m->exponent, a, b);
      out.partial_expectation = m->shift * out.probability + scaled;
      return out;
    }
    // Quadrature in the standardized log variable w, q = exp(mu + sigma w).
    constexpr double kTail = 40.0;
    const double wa = std::max(-kTail, (safe_log(a) - d->mu) / d->sigma);
    const double wb = std::min(kTail, (safe_log(b) - d->mu) / d->sigma);
    if (wa < wb) {
      const double mu = d->mu;
      const double sigma = d->sigma;
      out.partial_expectation = integrate(
          [&](double w) { return f(std::exp(mu + sigma * w)) * std::exp(-0.5 * w * w) / std::sqrt(2.0 * M_PI); },
          wa, wb);
    }
    return out;
  }

  // Uniform factor on [0,1].
  IntervalMoments out;
  const double lo = std::max(a, 0.0);
  const double hi = std::min(b, 1.0);
  if (!(lo < hi)) return out;
  out.probability = hi - lo;
  if (const auto* m = std::get_if<LognormalQuantileMap>(&f.kind())) {
    if (m->sigma == 0.0) {
      out.partial_expectation = std::exp(m->mu) * out.probability;
    } else {
      out.partial_expectation = std::exp(m->mu + 0.5 * m->sigma * m->sigma) *
                                normal_interval(normal_quantile(lo) - m->sigma, normal_quantile(hi) - m->sigma);
    }
    return out;
  }
  if (const auto* m = std::get_if<StepQuantileMap>(&f.kind())) {
    double prev = 0.0;
    for (std::size_t k = 0; k < m->values.size(); ++k) {
      const double overlap = std::max(0.0, std::min(hi, m->cumulative[k]) - std::max(lo, prev));
      out.partial_expectation += m->values[k] * overlap;
      prev = m->cumulative[k];
    }
    return out;
  }
  out.partial_expectation = integrate([&](double u) { return f(u); }, lo, hi);
  return out;
}

// --- FactorModel ------------------------------------------------------------

namespace {

void check_monotone(const EndowmentMap& f, std::size_t bank, double domain) {
  std::vector<double> grid;
  if (std::isfinite(domain)) {
    constexpr int kPoints = 1001;
    for (int k = 0; k < kPoints; ++k) grid.push_back(domain * k / (kPoints - 1));
  } else {
    grid.push_back(0.0);
    for (double e = -8.0; e <= 8.0; e += 0.01) grid.push_back(std::pow(10.0, e));
  }
  double prev = -kInfinity;
  for (const double q : grid) {
    const double v = f(q);
    if (std::isnan(v) || v < 0.0) {
      throw Error(ErrorKind::model, fmt::format("endowment map of bank {} is negative or NaN at q = {}", bank + 1, q));
    }
    if (v < prev - 1e-12 * std::max(1.0, std::abs(prev))) {
      throw Error(ErrorKind::model, fmt::format("endowment map of bank {} decreases near q = {}", bank + 1, q));
    }
    prev = v;
  }
}

}  // namespace

FactorModel::FactorModel(std::vector<EndowmentMap> maps, FactorDistribution dist)
    : maps_(std::move(maps)), dist_(std::move(dist)) {
  if (maps_.empty()) throw Error(ErrorKind::invalid_input, "factor model needs at least one endowment map");
  for (const auto& f : maps_) domain_max_ = std::min(domain_max_, f.domain_max());
  if (dist_.support_max() > domain_max_) {
    throw Error(ErrorKind::model, "factor support exceeds the domain of the quantile endowment maps");
  }
  for (std::size_t i = 0; i < maps_.size(); ++i) {
    check_monotone(maps_[i], i, domain_max_);
    const auto j = maps_[i].jumps();
    jumps_.insert(jumps_.end(), j.begin(), j.end());
  }
  std::sort(jumps_.begin(), jumps_.end());
  jumps_.erase(std::unique(jumps_.begin(), jumps_.end()), jumps_.end());
}

Eigen::VectorXd FactorModel::endowments(double q) const {
  Eigen::VectorXd x(static_cast<Eigen::Index>(maps_.size()));
  for (std::size_t i = 0; i < maps_.size(); ++i) x(static_cast<Eigen::Index>(i)) = maps_[i](q);
  return x;
}

}  // namespace netval
