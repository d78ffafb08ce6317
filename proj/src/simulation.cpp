#include "netval/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "netval/clearing.hpp"
#include "netval/error.hpp"

namespace netval {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr std::size_t kChunk = 4096;

std::uint64_t mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& c, std::size_t n, const char* what) {
  const auto ni = static_cast<Eigen::Index>(n);
  if (c.size() == 0) return Eigen::MatrixXd::Identity(ni, ni);
  if (c.rows() != ni || c.cols() != ni) {
    throw Error(ErrorKind::invalid_input, fmt::format("{} must be {}x{}", what, n, n));
  }
  if (!c.isApprox(c.transpose(), 1e-12) || (c.diagonal().array() - 1.0).abs().maxCoeff() > 1e-12) {
    throw Error(ErrorKind::invalid_input, fmt::format("{} must be symmetric with unit diagonal", what));
  }
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::invalid_input, fmt::format("{} is not positive definite", what));
  }
  return llt.matrixL();
}

// Chunk-level running moments, merged in chunk order.
struct Moments {
  double count = 0.0;
  Eigen::VectorXd mean;
  Eigen::VectorXd m2;
  Eigen::VectorXd scratch;

  explicit Moments(Eigen::Index dim = 0)
      : mean(Eigen::VectorXd::Zero(dim)), m2(Eigen::VectorXd::Zero(dim)), scratch(dim) {}

  void add(const Eigen::VectorXd& g) {
    count += 1.0;
    scratch = g - mean;
    mean += scratch / count;
    m2.array() += scratch.array() * (g - mean).array();
  }
  void merge(const Moments& o) {
    if (o.count == 0.0) return;
    const double total = count + o.count;
    const Eigen::VectorXd d = o.mean - mean;
    mean += d * (o.count / total);
    m2 += o.m2 + d.cwiseProduct(d) * (count * o.count / total);
    count = total;
  }
};

}  // namespace

const char* spec_name(const SimulationSpec& spec) noexcept {
  return std::visit(overloaded{
                        [](const ComonotonicFactorSpec&) { return "comonotonic_factor"; },
                        [](const CapmSpec&) { return "capm"; },
                        [](const GaussianCopulaLognormalSpec&) { return "gaussian_copula_lognormal"; },
                        [](const FiniteSupportSpec&) { return "finite_support"; },
                    },
                    spec);
}

PathRng::PathRng(std::uint64_t seed, std::uint64_t path) noexcept
    : state_(mix(seed + 0x9e3779b97f4a7c15ULL * (path + 1)) ^ mix(path)) {}

PathRng::result_type PathRng::operator()() noexcept {
  state_ += 0x9e3779b97f4a7c15ULL;
  return mix(state_);
}

double PathRng::uniform() noexcept {
  // 53 random bits, shifted to the open interval.
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

void parallel_chunks(std::size_t count, std::size_t chunk, unsigned threads,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& body) {
  const std::size_t chunks = (count + chunk - 1) / chunk;
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, chunks));
  auto run = [&](std::size_t c) { body(c, c * chunk, std::min(count, (c + 1) * chunk)); };
  if (threads <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) run(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t c = next++; c < chunks; c = next++) run(c);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

ScenarioBatch simulate(const SimulationSpec& spec, std::size_t n_paths, std::uint64_t seed) {
  ScenarioBatch batch;
  batch.generator = spec_name(spec);
  batch.seed = seed;

  if (const auto* fs = std::get_if<FiniteSupportSpec>(&spec)) {
    const auto k = fs->scenarios.rows();
    if (k == 0 || fs->probabilities.size() != k) {
      throw Error(ErrorKind::invalid_input, "finite-support spec needs one probability per scenario");
    }
    if ((fs->probabilities.array() < 0.0).any() || std::abs(fs->probabilities.sum() - 1.0) > 1e-12) {
      throw Error(ErrorKind::invalid_input, "finite-support probabilities must be >= 0 and sum to 1");
    }
    if ((fs->scenarios.array() < 0.0).any() || !fs->scenarios.allFinite()) {
      throw Error(ErrorKind::invalid_input, "finite-support scenarios must be finite and >= 0");
    }
    if (fs->exact) {
      batch.endowments = fs->scenarios;
      batch.weights = fs->probabilities;
      batch.exact = true;
      return batch;
    }
    std::vector<double> cumulative(static_cast<std::size_t>(k));
    std::partial_sum(fs->probabilities.begin(), fs->probabilities.end(), cumulative.begin());
    batch.endowments.resize(static_cast<Eigen::Index>(n_paths), fs->scenarios.cols());
    for (std::size_t p = 0; p < n_paths; ++p) {
      PathRng rng(seed, p);
      const double u = rng.uniform() * cumulative.back();
      const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
      const auto row = std::min<Eigen::Index>(it - cumulative.begin(), k - 1);
      batch.endowments.row(static_cast<Eigen::Index>(p)) = fs->scenarios.row(row);
    }
    return batch;
  }

  if (n_paths == 0) throw Error(ErrorKind::invalid_input, "simulation needs at least one path");
  const auto paths = static_cast<Eigen::Index>(n_paths);

  std::visit(
      overloaded{
          [&](const ComonotonicFactorSpec& s) {
            const auto n = static_cast<Eigen::Index>(s.model.size());
            batch.endowments.resize(paths, n);
            batch.factor.resize(paths);
            parallel_chunks(n_paths, kChunk, 0, [&](std::size_t, std::size_t b, std::size_t e) {
              for (std::size_t p = b; p < e; ++p) {
                PathRng rng(seed, p);
                const double q = s.model.distribution().quantile(rng.uniform());
                const auto row = static_cast<Eigen::Index>(p);
                batch.factor(row) = q;
                batch.endowments.row(row) = s.model.endowments(q).transpose();
              }
            });
          },
          [&](const CapmSpec& s) {
            const auto& c = s.params;
            const std::size_t n = static_cast<std::size_t>(c.s.size());
            c.validate(n);
            const auto ni = static_cast<Eigen::Index>(n);
            const Eigen::MatrixXd chol = cholesky_factor(s.idiosyncratic_correlation, n, "idiosyncratic correlation");
            const double root_t = std::sqrt(c.T);
            const double drift_m = s.measure == Measure::physical ? c.mu_M : c.r;
            const double theta = (c.mu_M - c.r) / c.sigma_M;
            const double growth = std::exp(c.r * c.T);
            batch.endowments.resize(paths, ni);
            batch.factor.resize(paths);
            if (s.measure == Measure::physical) batch.weights.resize(paths);
            parallel_chunks(n_paths, kChunk, 0, [&](std::size_t, std::size_t b, std::size_t e) {
              Eigen::VectorXd eps(ni);
              for (std::size_t p = b; p < e; ++p) {
                PathRng rng(seed, p);
                std::normal_distribution<double> normal;
                const double w = normal(rng);
                for (Eigen::Index i = 0; i < ni; ++i) eps(i) = normal(rng);
                const Eigen::VectorXd idio = chol * eps;
                const auto row = static_cast<Eigen::Index>(p);
                batch.factor(row) = std::exp((drift_m - 0.5 * c.sigma_M * c.sigma_M) * c.T + c.sigma_M * root_t * w);
                for (Eigen::Index i = 0; i < ni; ++i) {
                  const double drift = c.r + c.beta(i) * (drift_m - c.r) - 0.5 * c.sigma(i) * c.sigma(i);
                  const double eta =
                      std::exp(drift * c.T + c.beta(i) * c.sigma_M * root_t * w + c.gamma(i) * root_t * idio(i));
                  batch.endowments(row, i) = c.cash(i) * growth + c.s(i) * c.q0 * eta;
                }
                if (s.measure == Measure::physical) {
                  batch.weights(row) = std::exp(-0.5 * theta * theta * c.T - theta * root_t * w);
                }
              }
            });
          },
          [&](const GaussianCopulaLognormalSpec& s) {
            const auto n = s.mu.size();
            if (s.sigma.size() != n || !s.mu.allFinite() || !s.sigma.allFinite() || (s.sigma.array() < 0.0).any()) {
              throw Error(ErrorKind::invalid_input, "gaussian copula spec needs matching finite mu and sigma >= 0");
            }
            const Eigen::MatrixXd chol = cholesky_factor(s.correlation, static_cast<std::size_t>(n), "correlation");
            batch.endowments.resize(paths, n);
            parallel_chunks(n_paths, kChunk, 0, [&](std::size_t, std::size_t b, std::size_t e) {
              Eigen::VectorXd eps(n);
              for (std::size_t p = b; p < e; ++p) {
                PathRng rng(seed, p);
                std::normal_distribution<double> normal;
                for (Eigen::Index i = 0; i < n; ++i) eps(i) = normal(rng);
                const Eigen::VectorXd zeta = chol * eps;
                const auto row = static_cast<Eigen::Index>(p);
                for (Eigen::Index i = 0; i < n; ++i) batch.endowments(row, i) = std::exp(s.mu(i) + s.sigma(i) * zeta(i));
              }
            });
          },
          [&](const FiniteSupportSpec&) {},
      },
      spec);
  return batch;
}

McExpectations mc_expectations(const FinancialNetwork& net, const ScenarioBatch& batch) {
  const std::size_t n = net.size();
  const auto ni = static_cast<Eigen::Index>(n);
  if (batch.paths() == 0) throw Error(ErrorKind::invalid_input, "empty scenario batch");
  if (batch.banks() != n) {
    throw Error(ErrorKind::invalid_input,
                fmt::format("batch has {} banks but the network has {}", batch.banks(), n));
  }
  const bool weighted = batch.weights.size() > 0;
  if (weighted && static_cast<std::size_t>(batch.weights.size()) != batch.paths()) {
    throw Error(ErrorKind::invalid_input, "batch weights do not match the number of paths");
  }

  // pd, V, p, E per bank, then sector equity and societal payment.
  const Eigen::Index dim = 4 * ni + 2;
  const std::size_t chunks = (batch.paths() + kChunk - 1) / kChunk;
  std::vector<Moments> partial(chunks, Moments(dim));
  std::vector<Eigen::VectorXd> exact_sum(chunks, Eigen::VectorXd::Zero(dim));

  parallel_chunks(batch.paths(), kChunk, 0, [&](std::size_t c, std::size_t b, std::size_t e) {
    ClearingEngine engine(net);
    Eigen::VectorXd x(ni), g(dim);
    for (std::size_t p = b; p < e; ++p) {
      const auto row = static_cast<Eigen::Index>(p);
      x = batch.endowments.row(row).transpose();
      const auto& r = engine.solve(x);
      for (Eigen::Index i = 0; i < ni; ++i) g(i) = r.defaults[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
      g.segment(ni, ni) = r.wealth;
      g.segment(2 * ni, ni) = r.payments;
      g.segment(3 * ni, ni) = r.equity;
      g(4 * ni) = r.equity.sum();
      g(4 * ni + 1) = r.societal_payment;
      if (batch.exact) {
        exact_sum[c] += batch.weights(row) * g;
      } else {
        if (weighted) g *= batch.weights(row);
        partial[c].add(g);
      }
    }
  });

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd se = Eigen::VectorXd::Zero(dim);
  if (batch.exact) {
    for (const auto& s : exact_sum) mean += s;
  } else {
    Moments total(dim);
    for (const auto& m : partial) total.merge(m);
    mean = total.mean;
    if (total.count > 1.0) se = (total.m2 / (total.count - 1.0) / total.count).cwiseSqrt();
  }

  McExpectations out;
  out.paths = batch.paths();
  auto take = [&](Estimate& est, Eigen::Index offset) {
    est.mean = mean.segment(offset, ni);
    est.se = se.segment(offset, ni);
  };
  take(out.default_probability, 0);
  take(out.wealth, ni);
  take(out.payment, 2 * ni);
  take(out.equity, 3 * ni);
  out.sector_equity = mean(4 * ni);
  out.sector_equity_se = se(4 * ni);
  out.societal_payment = mean(4 * ni + 1);
  out.societal_payment_se = se(4 * ni + 1);
  return out;
}

}  // namespace netval
