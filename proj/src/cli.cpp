#include "netval/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <cstdint>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "netval/bounds.hpp"
#include "netval/calibration.hpp"
#include "netval/capm.hpp"
#include "netval/clearing.hpp"
#include "netval/comonotonic.hpp"
#include "netval/error.hpp"
#include "netval/io.hpp"
#include "netval/simulation.hpp"
#include "netval/statics.hpp"

namespace netval {

namespace {

constexpr std::uint64_t kDefaultSeed = 42;

using Cell = std::variant<double, std::int64_t, std::string, std::monostate>;

struct Table {
  std::string command;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  json meta = json::object();
};

Cell bank(std::size_t i) { return static_cast<std::int64_t>(i + 1); }

void emit_csv(std::ostream& os, const Table& t) {
  for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << t.columns[c];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) os << ',';
      std::visit([&os](const auto& v) {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, double>) {
          os << format_number(v);
        } else if constexpr (std::is_same_v<V, std::int64_t> || std::is_same_v<V, std::string>) {
          os << v;
        }
      }, row[c]);
    }
    os << '\n';
  }
}

void emit_json(std::ostream& os, const Table& t) {
  json rows = json::array();
  for (const auto& row : t.rows) {
    json r = json::object();
    for (std::size_t c = 0; c < row.size(); ++c) {
      std::visit([&](const auto& v) {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, double>) {
          // JSON has no infinities; they are written as strings.
          r[t.columns[c]] = std::isfinite(v) ? json(v) : json(format_number(v));
        } else if constexpr (std::is_same_v<V, std::int64_t> || std::is_same_v<V, std::string>) {
          r[t.columns[c]] = v;
        } else {
          r[t.columns[c]] = nullptr;
        }
      }, row[c]);
    }
    rows.push_back(std::move(r));
  }
  json doc = {{"schema_version", kSchemaVersion}, {"command", t.command}, {"columns", t.columns}, {"rows", rows}};
  if (!t.meta.empty()) doc["meta"] = t.meta;
  os << doc.dump(2) << '\n';
}

struct Common {
  std::string output;
  std::string format = "csv";
};

class Output {
 public:
  Output(const Common& common, std::ostream& fallback) : format_(common.format) {
    if (!common.output.empty()) {
      file_.open(common.output, std::ios::binary);
      if (!file_) throw Error(ErrorKind::not_found, fmt::format("cannot write '{}'", common.output));
      stream_ = &file_;
    } else {
      stream_ = &fallback;
    }
  }
  std::ostream& stream() { return *stream_; }
  void table(const Table& t) {
    if (format_ == "json") {
      emit_json(*stream_, t);
    } else {
      emit_csv(*stream_, t);
    }
  }

 private:
  std::string format_;
  std::ofstream file_;
  std::ostream* stream_;
};

std::vector<double> parse_grid(const std::string& spec) {
  const auto colon = std::count(spec.begin(), spec.end(), ':');
  if (colon == 2) {
    const auto a = spec.find(':');
    const auto b = spec.find(':', a + 1);
    const double start = std::stod(spec.substr(0, a));
    const double stop = std::stod(spec.substr(a + 1, b - a - 1));
    const double step = std::stod(spec.substr(b + 1));
    if (!(step > 0.0) || stop < start) throw Error(ErrorKind::invalid_input, fmt::format("bad grid '{}'", spec));
    const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    std::vector<double> out;
    for (long k = 0; k <= count; ++k) {
      // Strip accumulated round-off so labels read 0.3, not 0.30000000000000004.
      out.push_back(std::stod(fmt::format("{:.12g}", start + static_cast<double>(k) * step)));
    }
    return out;
  }
  const auto v = parse_vector(spec);
  return {v.data(), v.data() + v.size()};
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("NETVAL_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw Error(ErrorKind::invalid_input, fmt::format("NETVAL_SEED='{}' is not an unsigned integer", env));
    }
  }
  return kDefaultSeed;
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_input:
    case ErrorKind::model:
      return kExitInvalid;
    case ErrorKind::schema:
      return kExitSchema;
    case ErrorKind::not_found:
      return kExitNotFound;
    case ErrorKind::infeasible:
      return kExitInfeasible;
    case ErrorKind::internal:
      break;
  }
  return kExitInternal;
}

void report(std::ostream& err, const std::string& kind, const std::string& message, int code) {
  err << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << '\n';
}

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("-o,--output", common.output, "Write the result to this file instead of stdout");
  cmd->add_option("--format", common.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
}

// --- subcommands ------------------------------------------------------------

struct Args {
  Common common;
  std::string network, model, marginals, conditional, capm, sweep, grid = "0:1:0.25", grid2, route = "assets";
  std::string which = "both", baseline = "none", x, sheets, spec, batch, matrix_out, capm_out;
  bool force = false;
  std::uint64_t seed = 0;
  std::size_t paths = 100000;
  double density = 0.3, alpha_x = 1.0, alpha_L = 1.0, sigma = 0.2, r = 0.0, T = 1.0;
};

void cmd_clear(const Args& a, Output& out) {
  const auto net = read_network_csv(a.network);
  const auto x = parse_vector(a.x);
  if ((x.array() < 0.0).any()) throw Error(ErrorKind::invalid_input, "endowments must be >= 0");
  const auto r = greatest_clearing(net, x);
  Table t{"clear", {"bank", "wealth", "payment", "equity", "default"}, {}, {}};
  for (std::size_t i = 0; i < net.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    t.rows.push_back({bank(i), r.wealth(k), r.payments(k), r.equity(k), Cell{std::int64_t{r.defaults[i] ? 1 : 0}}});
  }
  t.meta = {{"iterations", r.iterations}, {"societal_payment", r.societal_payment}};
  out.table(t);
}

void cmd_qstar(const Args& a, Output& out) {
  const auto net = read_network_csv(a.network);
  const auto model = factor_model_from_json(read_json_file(a.model));
  const auto th = solvency_thresholds(net, model);
  Table t{"q-star", {"bank", "q_star", "rank"}, {}, {}};
  for (std::size_t i = 0; i < net.size(); ++i) {
    t.rows.push_back({bank(i), th.q_star(static_cast<Eigen::Index>(i)), Cell{static_cast<std::int64_t>(th.position[i] + 1)}});
  }
  out.table(t);
}

void cmd_expect(const Args& a, Output& out) {
  const auto net = read_network_csv(a.network);
  const auto model = factor_model_from_json(read_json_file(a.model));
  const auto e = expected_values(net, model);
  Table t{"expect", {"bank", "pd", "EV", "Ep", "EE"}, {}, {}};
  for (std::size_t i = 0; i < net.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    t.rows.push_back({bank(i), e.default_probability(k), e.wealth(k), e.payment(k), e.equity(k)});
  }
  out.table(t);
}

void cmd_bounds(const Args& a, Output& out) {
  const auto net = read_network_csv(a.network);
  const auto marg = marginals_from_json(read_json_file(a.marginals));
  const auto lower = comonotonic_lower(net, marg);
  const auto jensen = jensen_upper(net, marg.mean());
  std::optional<BoundValues> cond;
  if (!a.conditional.empty()) cond = conditional_upper(net, factor_model_from_json(read_json_file(a.conditional)));
  Table t{"bounds", {"bank", "lower", "conditional_upper", "jensen_upper"}, {}, {}};
  for (std::size_t i = 0; i < net.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    Cell c = cond ? Cell(cond->payment(k)) : Cell(std::monostate{});
    t.rows.push_back({bank(i), lower.payment(k), c, jensen.payment(k)});
  }
  t.meta = {{"quantity", "expected payment"}};
  out.table(t);
}

void cmd_price(const Args& a, Output& out, std::ostream& err) {
  const auto net = read_network_csv(a.network);
  const auto params = capm_from_json(read_json_file(a.capm), net.size());
  Table t{"price", {"bank"}, {}, {}};
  t.rows.resize(net.size());
  for (std::size_t i = 0; i < net.size(); ++i) t.rows[i].push_back(bank(i));
  auto add = [&](const std::string& tag, const Eigen::VectorXd& price, const Eigen::VectorXd& rate,
                 const Eigen::VectorXd& cap) {
    t.columns.insert(t.columns.end(), {"price_" + tag, "rate_" + tag, "market_cap_" + tag});
    for (std::size_t i = 0; i < net.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      t.rows[i].insert(t.rows[i].end(), {price(k), rate(k), cap(k)});
    }
  };
  std::vector<Bound> bounds;
  if (a.which == "lower" || a.which == "both") bounds.push_back(Bound::lower);
  if (a.which == "upper" || a.which == "both") bounds.push_back(Bound::upper);
  bool guarantee = true;
  for (const auto b : bounds) {
    const auto r = debt_price_bound(net, params, b, a.force);
    guarantee = guarantee && r.bound_guarantee;
    add(to_string(b), r.price, r.rate, r.market_cap);
    for (Eigen::Index i = 0; i < r.rate.size(); ++i) {
      if (std::isinf(r.rate(i))) err << fmt::format("warning: bank {} has a zero debt price; rate is +inf\n", i + 1);
    }
  }
  if (!guarantee) err << "warning: bankruptcy costs present; closed form carries no bound guarantee\n";
  if (a.baseline != "none") {
    const auto mode = a.baseline == "riskfree" ? BaselineMode::riskfree_interbank : BaselineMode::risky_interbank;
    const auto r = merton_baseline(net, params, mode);
    add(a.baseline, r.price, r.rate, r.market_cap);
  }
  t.meta = {{"bound_guarantee", guarantee}};
  out.table(t);
}

void cmd_statics(const Args& a, Output& out) {
  const auto net = read_network_csv(a.network);
  const auto params = capm_from_json(read_json_file(a.capm), net.size());
  const auto grid = parse_grid(a.grid);
  std::vector<StaticsRow> rows;
  if (a.sweep == "beta") {
    rows = sweep_beta(net, params, grid);
  } else if (a.sweep == "T") {
    rows = sweep_maturity(net, params, grid);
  } else if (a.sweep == "alpha") {
    rows = sweep_alpha(net, params, grid);
  } else {
    if (a.grid2.empty()) throw Error(ErrorKind::invalid_input, "--sweep ratio needs --grid2 for d2");
    const auto route = a.route == "liabilities" ? RatioRoute::liabilities : RatioRoute::assets;
    rows = sweep_ratio(net, params, route, grid, parse_grid(a.grid2));
  }
  Table t{"statics", {"param", "bank", "metric", "value"}, {}, {{"sweep", a.sweep}}};
  for (const auto& r : rows) t.rows.push_back({r.param, r.bank, r.metric, r.value});
  out.table(t);
}

void cmd_calibrate(const Args& a, Output& out) {
  const auto sheets = parse_balance_sheets_csv(read_file(a.sheets));
  const auto cal = calibrated_network(sheets, a.density, a.seed, a.alpha_x, a.alpha_L);
  write_network_csv(out.stream(), cal.network);
  if (!a.matrix_out.empty()) {
    std::ofstream m(a.matrix_out, std::ios::binary);
    if (!m) throw Error(ErrorKind::not_found, fmt::format("cannot write '{}'", a.matrix_out));
    const auto n = static_cast<Eigen::Index>(sheets.size());
    write_matrix_csv(m, cal.network.liabilities().leftCols(n), cal.ids);
  }
  if (!a.capm_out.empty()) {
    std::ofstream c(a.capm_out, std::ios::binary);
    if (!c) throw Error(ErrorKind::not_found, fmt::format("cannot write '{}'", a.capm_out));
    const auto n = cal.s.size();
    CapmParams p;
    p.r = a.r;
    p.T = a.T;
    p.sigma_M = a.sigma;
    p.mu_M = a.r;
    p.beta = Eigen::VectorXd::Ones(n);
    p.gamma = Eigen::VectorXd::Zero(n);
    p.s = cal.s;
    p.complete(static_cast<std::size_t>(n));
    c << to_json(p).dump(2) << '\n';
  }
}

void cmd_simulate(const Args& a, Output& out) {
  const auto spec = simulation_spec_from_json(read_json_file(a.spec));
  write_batch_csv(out.stream(), simulate(spec, a.paths, a.seed));
}

void cmd_mc(const Args& a, Output& out) {
  const auto net = read_network_csv(a.network);
  ScenarioBatch batch;
  if (!a.batch.empty()) {
    batch = parse_batch_csv(read_file(a.batch));
  } else if (!a.spec.empty()) {
    batch = simulate(simulation_spec_from_json(read_json_file(a.spec)), a.paths, a.seed);
  } else {
    throw Error(ErrorKind::invalid_input, "mc needs --batch or --spec");
  }
  const auto mc = mc_expectations(net, batch);
  Table t{"mc", {"bank", "pd", "pd_se", "EV", "EV_se", "Ep", "Ep_se", "EE", "EE_se"}, {}, {}};
  for (std::size_t i = 0; i < net.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    t.rows.push_back({bank(i), mc.default_probability.mean(k), mc.default_probability.se(k), mc.wealth.mean(k),
                      mc.wealth.se(k), mc.payment.mean(k), mc.payment.se(k), mc.equity.mean(k), mc.equity.se(k)});
  }
  t.meta = {{"paths", mc.paths},
            {"exact", batch.exact},
            {"sector_equity", mc.sector_equity},
            {"sector_equity_se", mc.sector_equity_se},
            {"societal_payment", mc.societal_payment},
            {"societal_payment_se", mc.societal_payment_se}};
  out.table(t);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Args a;
  CLI::App app{"Clearing, comonotonic expectations and debt pricing in interbank networks"};
  app.name("netval");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  try {
    a.seed = default_seed();
  } catch (const Error& e) {
    report(err, to_string(e.kind()), e.what(), kExitInvalid);
    return kExitInvalid;
  }

  auto network_opt = [&](CLI::App* c) { c->add_option("--network", a.network, "Network CSV")->required(); };

  auto* clear = app.add_subcommand("clear", "Greatest clearing wealths for fixed endowments");
  network_opt(clear);
  clear->add_option("--x", a.x, "Endowments, comma separated")->required();
  add_common(clear, a.common);

  auto* qstar = app.add_subcommand("q-star", "Solvency thresholds of a comonotonic factor model");
  network_opt(qstar);
  qstar->add_option("--model", a.model, "Factor model JSON")->required();
  add_common(qstar, a.common);

  auto* expect = app.add_subcommand("expect", "Closed-form expectations under a comonotonic factor model");
  network_opt(expect);
  expect->add_option("--model", a.model, "Factor model JSON")->required();
  add_common(expect, a.common);

  auto* bounds = app.add_subcommand("bounds", "Comonotonic lower, conditional and Jensen upper payment bounds");
  network_opt(bounds);
  bounds->add_option("--marginals", a.marginals, "Marginals JSON")->required();
  bounds->add_option("--conditional", a.conditional, "Factor model JSON of E[X|q]");
  add_common(bounds, a.common);

  auto* price = app.add_subcommand("price", "CAPM debt price bounds, effective rates and market caps");
  network_opt(price);
  price->add_option("--capm", a.capm, "CAPM parameters JSON")->required();
  price->add_option("--which", a.which, "Bound to price")->check(CLI::IsMember({"lower", "upper", "both"}));
  price->add_option("--baseline", a.baseline, "Also price the single-firm baseline")->check(CLI::IsMember({"riskfree", "risky", "none"}));
  price->add_flag("--force", a.force, "Evaluate the closed form under bankruptcy costs (no bound guarantee)");
  add_common(price, a.common);

  auto* statics = app.add_subcommand("statics", "Comparative statics in long format");
  network_opt(statics);
  statics->add_option("--capm", a.capm, "CAPM parameters JSON")->required();
  statics->add_option("--sweep", a.sweep, "Parameter to vary")->required()->check(CLI::IsMember({"beta", "T", "alpha", "ratio"}));
  statics->add_option("--grid", a.grid, "start:stop:step or a comma list (d1 for ratio sweeps)");
  statics->add_option("--grid2", a.grid2, "d2 grid for ratio sweeps");
  statics->add_option("--route", a.route, "How ratio sweeps reach the target")->check(CLI::IsMember({"assets", "liabilities"}));
  add_common(statics, a.common);

  auto* calibrate = app.add_subcommand("calibrate", "Calibrate a network from balance sheets");
  calibrate->add_option("--sheets", a.sheets, "Balance-sheet CSV")->required();
  calibrate->add_option("--seed", a.seed, "Seed of the sparsity mask and fitting start");
  calibrate->add_option("--density", a.density, "Probability of each interbank link");
  calibrate->add_option("--alpha-x", a.alpha_x, "Recovery rate on external assets");
  calibrate->add_option("--alpha-L", a.alpha_L, "Recovery rate on interbank assets");
  calibrate->add_option("--matrix-out", a.matrix_out, "Also write the interbank matrix here");
  calibrate->add_option("--capm-out", a.capm_out, "Also write CAPM parameters (beta 1, gamma 0) here");
  calibrate->add_option("--sigma", a.sigma, "Market volatility for --capm-out");
  calibrate->add_option("--r", a.r, "Risk-free rate for --capm-out");
  calibrate->add_option("--T", a.T, "Maturity for --capm-out");
  add_common(calibrate, a.common);

  auto* simulate_cmd = app.add_subcommand("simulate", "Draw a scenario batch");
  simulate_cmd->add_option("--spec", a.spec, "Simulation spec JSON")->required();
  simulate_cmd->add_option("--paths", a.paths, "Number of paths");
  simulate_cmd->add_option("--seed", a.seed, "Seed (default: $NETVAL_SEED, else 42)");
  add_common(simulate_cmd, a.common);

  auto* mc = app.add_subcommand("mc", "Monte Carlo expectations with standard errors");
  network_opt(mc);
  mc->add_option("--batch", a.batch, "Batch CSV from simulate");
  mc->add_option("--spec", a.spec, "Simulation spec JSON (instead of --batch)");
  mc->add_option("--paths", a.paths, "Number of paths with --spec");
  mc->add_option("--seed", a.seed, "Seed with --spec (default: $NETVAL_SEED, else 42)");
  add_common(mc, a.common);

  try {
    app.parse(argc, argv);
    Output output(a.common, out);
    if (*clear) cmd_clear(a, output);
    if (*qstar) cmd_qstar(a, output);
    if (*expect) cmd_expect(a, output);
    if (*bounds) cmd_bounds(a, output);
    if (*price) cmd_price(a, output, err);
    if (*statics) cmd_statics(a, output);
    if (*calibrate) cmd_calibrate(a, output);
    if (*simulate_cmd) cmd_simulate(a, output);
    if (*mc) cmd_mc(a, output);
    return kExitOk;
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report(err, "usage", e.what(), kExitUsage);
    return kExitUsage;
  } catch (const Error& e) {
    const int code = exit_code(e.kind());
    report(err, to_string(e.kind()), e.what(), code);
    return code;
  } catch (const json::exception& e) {
    report(err, "schema", e.what(), kExitSchema);
    return kExitSchema;
  } catch (const std::invalid_argument& e) {
    report(err, "invalid_input", e.what(), kExitInvalid);
    return kExitInvalid;
  } catch (const std::exception& e) {
    report(err, "internal", e.what(), kExitInternal);
    return kExitInternal;
  }
}

}  // namespace netval
