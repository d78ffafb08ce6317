#include <doctest.h>

#include <cmath>
#include <random>

#include "netval/calibration.hpp"
#include "netval/error.hpp"
#include "netval/io.hpp"
#include "test_support.hpp"

using namespace netval;
using netval::testing::two_bank;
using netval::testing::vec;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::internal;
}

double rel_margin_error(const Eigen::MatrixXd& m, const Eigen::VectorXd& rows, const Eigen::VectorXd& cols) {
  const double r = ((m.rowwise().sum() - rows).array().abs() / rows.array().max(1e-300)).maxCoeff();
  const double c = ((m.colwise().sum().transpose() - cols).array().abs() / cols.array().max(1e-300)).maxCoeff();
  return std::max(r, c);
}

}  // namespace

TEST_CASE("stylized balance sheet") {
  const auto cal = calibrate({{"a", 10, 2, 4}, {"b", 10, 3, 4}});
  CHECK(cal.s == vec({6, 6}));
  CHECK(cal.external == vec({4, 3}));
  CHECK(cal.p_bar == vec({8, 7}));
  CHECK(cal.interbank == vec({4, 4}));

  const auto pure = calibrate({{"x", 5, 1, 0}});
  CHECK(pure.s(0) == 5.0);
  CHECK(pure.external(0) == 4.0);
}

TEST_CASE("net worth equals capital") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<BalanceSheet> sheets;
  for (int i = 0; i < 40; ++i) {
    const double a = 100 * (1 + u(rng));
    sheets.push_back({std::to_string(i), a, 0.08 * a * u(rng), 0.2 * a * u(rng)});
  }
  const auto cal = calibrate(sheets);
  for (Eigen::Index i = 0; i < 40; ++i) {
    const auto& sh = sheets[static_cast<std::size_t>(i)];
    // s + interbank assets - p_bar = capital when interbank assets equal interbank liabilities
    CHECK(std::abs(cal.s(i) + cal.interbank(i) - cal.p_bar(i) - sh.capital) <= 1e-12 * sh.total_assets);
  }
}

TEST_CASE("calibration errors name the bank") {
  try {
    calibrate({{"ok", 10, 2, 4}, {"broken", 10, 7, 4}});
    FAIL("negative external liability accepted");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("broken") != std::string::npos);
  }
  CHECK(kind_of([] { calibrate({{"a", 10, 1, 11}}); }) != ErrorKind::internal);
  CHECK(kind_of([] { calibrate({{"a", -1, 0, 0}}); }) != ErrorKind::internal);
}

TEST_CASE("matrix fill") {
  Mask full = Mask::Constant(2, 2, true);
  full(0, 0) = full(1, 1) = false;
  const auto m = fill_matrix(vec({3, 5}), vec({5, 3}), full, 1);
  CHECK(m(0, 0) == 0.0);
  CHECK(m(1, 1) == 0.0);
  CHECK(m(0, 1) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(m(1, 0) == doctest::Approx(5.0).epsilon(1e-12));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(1.0, 10.0);
  for (int t = 0; t < 30; ++t) {
    const Eigen::Index n = 5 + t % 10;
    Eigen::VectorXd rows(n), cols(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      rows(i) = u(rng);
      cols(i) = u(rng);
    }
    cols *= rows.sum() / cols.sum();
    const auto mask = random_mask(static_cast<std::size_t>(n), 0.7, 10 + static_cast<std::uint64_t>(t));
    for (Eigen::Index i = 0; i < n; ++i) CHECK_FALSE(mask(i, i));
    Eigen::MatrixXd filled;
    try {
      filled = fill_matrix(rows, cols, mask, 5);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::infeasible);
      continue;
    }
    CHECK(rel_margin_error(filled, rows, cols) <= 1e-8);
    CHECK(filled.diagonal().cwiseAbs().maxCoeff() == 0.0);
    CHECK(filled.minCoeff() >= 0.0);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (!mask(i, j)) CHECK(filled(i, j) == 0.0);
    CHECK(fill_matrix(rows, cols, mask, 5) == filled);
  }

  CHECK(kind_of([&] { fill_matrix(vec({3, 5}), vec({5, 4}), full, 1); }) == ErrorKind::infeasible);
  // A cyclic mask pins each column sum to one row sum.
  Mask cycle = Mask::Constant(3, 3, false);
  cycle(0, 1) = cycle(1, 2) = cycle(2, 0) = true;
  CHECK(fill_matrix(vec({1, 2, 3}), vec({3, 1, 2}), cycle, 1)(2, 0) == doctest::Approx(3.0));
  CHECK(kind_of([&] { fill_matrix(vec({1, 2, 3}), vec({2, 2, 2}), cycle, 1); }) == ErrorKind::infeasible);
}

TEST_CASE("ratio constructions") {
  const auto net = two_bank();
  const Eigen::VectorXd s = vec({3, 4}), cash = vec({0, 0});
  const Eigen::VectorXd d = current_ratio(net, s, 1.0, cash);
  CHECK(d(0) == doctest::Approx(10.0 / 6.0).epsilon(1e-15));
  CHECK(d(1) == doctest::Approx(6.0 / 11.0).epsilon(1e-15));
  CHECK((ratio_via_assets(net, d, 1.0, cash) - s).cwiseAbs().maxCoeff() <= 1e-10);
  const auto back = ratio_via_liabilities(net, s, d, 1.0, cash);
  CHECK((back.liabilities() - net.liabilities()).cwiseAbs().maxCoeff() <= 1e-10);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.1, 0.9);
  for (int t = 0; t < 50; ++t) {
    const auto r = netval::testing::random_network(rng, 4);
    const Eigen::VectorXd target = vec({u(rng), u(rng), u(rng), u(rng)});
    const Eigen::VectorXd c = vec({0.1, 0, 0.2, 0});
    const auto via_l = ratio_via_liabilities(r, s.replicate(2, 1), target, 1.5, c);
    CHECK((current_ratio(via_l, s.replicate(2, 1), 1.5, c) - target).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((via_l.relative_liabilities() - r.relative_liabilities()).cwiseAbs().maxCoeff() <= 1e-12);
    const Eigen::VectorXd cap = r.total_liabilities().cwiseQuotient(r.interbank_assets() + c);
    if ((target.array() < cap.array()).all()) {
      const Eigen::VectorXd new_s = ratio_via_assets(r, target, 1.5, c);
      CHECK((current_ratio(r, new_s, 1.5, c) - target).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
  // Interbank assets of bank 2 already cover more than p_bar / d.
  CHECK(kind_of([&] { ratio_via_assets(net, vec({0.5, 2.0}), 1.0, cash); }) == ErrorKind::infeasible);
  CHECK(kind_of([&] { ratio_via_liabilities(net, s, vec({4.0, 4.0}), 1.0, cash); }) == ErrorKind::infeasible);
}

TEST_CASE("synthetic 87-bank fixture") {
  const auto sheets = parse_balance_sheets_csv(read_file(netval::testing::data_path("eba_synthetic_87.csv")));
  REQUIRE(sheets.size() == 87);
  const auto cal = calibrated_network(sheets, 0.5, 7);
  CHECK(cal.network.size() == 87);
  CHECK(cal.ids.size() == 87);
  const auto c = calibrate(sheets);
  CHECK((cal.network.total_liabilities() - c.p_bar).cwiseAbs().maxCoeff() <= 1e-8 * c.p_bar.maxCoeff());
  const Eigen::VectorXd ib = cal.network.interbank_assets();
  CHECK(((ib - c.interbank).array().abs() / c.interbank.array()).maxCoeff() <= 1e-8);
  CHECK((cal.s - c.s).cwiseAbs().maxCoeff() == 0.0);
  const auto again = calibrated_network(sheets, 0.5, 7);
  CHECK(again.network.liabilities() == cal.network.liabilities());
}
