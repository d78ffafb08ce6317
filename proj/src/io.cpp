#include "netval/io.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "netval/error.hpp"

namespace netval {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Error schema_error(const std::string& msg) { return Error(ErrorKind::schema, msg); }

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// Non-blank lines that are not comments, with their 1-based line numbers.
std::vector<std::pair<std::size_t, std::string>> content_lines(const std::string& text, bool keep_comments = false) {
  std::vector<std::pair<std::size_t, std::string>> out;
  std::istringstream ss(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(ss, line)) {
    ++number;
    const auto t = trim(line);
    if (t.empty() || (!keep_comments && t.front() == '#')) continue;
    out.emplace_back(number, t);
  }
  return out;
}

double parse_double(const std::string& cell, std::size_t line) {
  double v = 0.0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    if (cell == "inf" || cell == "+inf") return kInfinity;
    throw schema_error(fmt::format("line {}: '{}' is not a number", line, cell));
  }
  return v;
}

std::vector<double> parse_row(const std::string& line, std::size_t number, std::size_t expected) {
  const auto cells = split(line);
  if (cells.size() != expected) {
    throw schema_error(fmt::format("line {}: expected {} fields, found {}", number, expected, cells.size()));
  }
  std::vector<double> out;
  for (const auto& c : cells) out.push_back(parse_double(c, number));
  return out;
}

const json& field(const json& j, const char* key, const char* what) {
  if (!j.is_object() || !j.contains(key)) throw schema_error(fmt::format("{}: missing field '{}'", what, key));
  return j.at(key);
}

double number(const json& j, const char* key, const char* what) {
  const auto& v = field(j, key, what);
  if (!v.is_number()) throw schema_error(fmt::format("{}: field '{}' must be a number", what, key));
  return v.get<double>();
}

double number_or(const json& j, const char* key, double fallback, const char* what) {
  if (!j.contains(key)) return fallback;
  return number(j, key, what);
}

std::vector<double> numbers(const json& j, const char* key, const char* what) {
  const auto& v = field(j, key, what);
  if (!v.is_array()) throw schema_error(fmt::format("{}: field '{}' must be an array", what, key));
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw schema_error(fmt::format("{}: field '{}' must hold numbers", what, key));
    out.push_back(e.get<double>());
  }
  return out;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd matrix(const json& j, const char* key, const char* what) {
  const auto& v = field(j, key, what);
  if (!v.is_array()) throw schema_error(fmt::format("{}: field '{}' must be an array of rows", what, key));
  const auto rows = static_cast<Eigen::Index>(v.size());
  Eigen::MatrixXd m;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = v.at(static_cast<std::size_t>(r));
    if (!row.is_array()) throw schema_error(fmt::format("{}: field '{}' must be an array of rows", what, key));
    if (r == 0) m.resize(rows, static_cast<Eigen::Index>(row.size()));
    if (static_cast<Eigen::Index>(row.size()) != m.cols()) {
      throw schema_error(fmt::format("{}: rows of '{}' differ in length", what, key));
    }
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const auto& e = row.at(static_cast<std::size_t>(c));
      if (!e.is_number()) throw schema_error(fmt::format("{}: field '{}' must hold numbers", what, key));
      m(r, c) = e.get<double>();
    }
  }
  return m;
}

std::string type_of(const json& j, const char* what) {
  const auto& t = field(j, "type", what);
  if (!t.is_string()) throw schema_error(fmt::format("{}: field 'type' must be a string", what));
  return t.get<std::string>();
}

std::vector<double> std_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

EndowmentMap map_from_json(const json& j) {
  const char* what = "endowment map";
  const auto type = type_of(j, what);
  if (type == "affine") return EndowmentMap::affine(number_or(j, "intercept", 0.0, what), number(j, "slope", what));
  if (type == "power") {
    return EndowmentMap::power(number(j, "scale", what), number_or(j, "log_factor", 0.0, what),
                               number(j, "exponent", what), number_or(j, "shift", 0.0, what));
  }
  if (type == "tabulated") return EndowmentMap::tabulated(numbers(j, "knots", what), numbers(j, "values", what));
  if (type == "lognormal_quantile") {
    return EndowmentMap::lognormal_quantile(number(j, "mu", what), number(j, "sigma", what));
  }
  if (type == "step_quantile") {
    return EndowmentMap::step_quantile(numbers(j, "values", what), numbers(j, "probabilities", what));
  }
  throw schema_error(fmt::format("unknown endowment map type '{}'", type));
}

json map_to_json(const EndowmentMap& f) {
  return std::visit(overloaded{
                        [](const AffineMap& m) -> json {
                          return {{"type", "affine"}, {"intercept", m.intercept}, {"slope", m.slope}};
                        },
                        [](const PowerMap& m) -> json {
                          return {{"type", "power"},       {"scale", m.scale}, {"log_factor", m.log_factor},
                                  {"exponent", m.exponent}, {"shift", m.shift}};
                        },
                        [](const TabulatedMap& m) -> json {
                          return {{"type", "tabulated"}, {"knots", m.knots}, {"values", m.values}};
                        },
                        [](const LognormalQuantileMap& m) -> json {
                          return {{"type", "lognormal_quantile"}, {"mu", m.mu}, {"sigma", m.sigma}};
                        },
                        [](const StepQuantileMap& m) -> json {
                          std::vector<double> probs;
                          double prev = 0.0;
                          for (const double c : m.cumulative) {
                            probs.push_back(c - prev);
                            prev = c;
                          }
                          return {{"type", "step_quantile"}, {"values", m.values}, {"probabilities", probs}};
                        },
                    },
                    f.kind());
}

FactorDistribution distribution_from_json(const json& j) {
  const char* what = "factor distribution";
  const auto type = type_of(j, what);
  if (type == "lognormal") return FactorDistribution::lognormal(number(j, "mu", what), number(j, "sigma", what));
  if (type == "point_masses") {
    return FactorDistribution::point_masses(numbers(j, "points", what), numbers(j, "weights", what));
  }
  if (type == "empirical") return FactorDistribution::empirical(numbers(j, "samples", what));
  if (type == "uniform") return FactorDistribution::uniform();
  throw schema_error(fmt::format("unknown factor distribution type '{}'", type));
}

json distribution_to_json(const FactorDistribution& d) {
  return std::visit(overloaded{
                        [](const LogNormalLaw& l) -> json {
                          return {{"type", "lognormal"}, {"mu", l.mu}, {"sigma", l.sigma}};
                        },
                        [](const PointMassLaw& l) -> json {
                          return {{"type", "point_masses"}, {"points", l.points}, {"weights", l.weights}};
                        },
                        [](const EmpiricalLaw& l) -> json { return {{"type", "empirical"}, {"samples", l.samples}}; },
                        [](const UniformLaw&) -> json { return {{"type", "uniform"}}; },
                    },
                    d.kind());
}

}  // namespace

std::string format_number(double v) { return fmt::format("{}", v); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::not_found, fmt::format("cannot open '{}'", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json_file(const std::string& path) {
  const auto text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw schema_error(fmt::format("{}: invalid JSON ({})", path, e.what()));
  }
}

void check_schema_version(const json& j, const char* what) {
  if (!j.is_object()) throw schema_error(fmt::format("{}: expected a JSON object", what));
  if (!j.contains("schema_version")) throw schema_error(fmt::format("{}: missing schema_version", what));
  const auto& v = j.at("schema_version");
  if (!v.is_number_integer() || v.get<int>() != kSchemaVersion) {
    throw schema_error(fmt::format("{}: unsupported schema_version (expected {})", what, kSchemaVersion));
  }
}

// --- network ----------------------------------------------------------------

FinancialNetwork parse_network_csv(const std::string& text) {
  const auto lines = content_lines(text);
  if (lines.size() < 2) throw schema_error("network: missing header");
  const auto header = split(lines[0].second);
  if (header != std::vector<std::string>{"n", "alpha_x", "alpha_L"}) {
    throw schema_error(fmt::format("network: line {}: header must be 'n,alpha_x,alpha_L'", lines[0].first));
  }
  const auto meta = parse_row(lines[1].second, lines[1].first, 3);
  if (!(meta[0] >= 1.0) || meta[0] != std::floor(meta[0])) {
    throw schema_error(fmt::format("network: line {}: n must be a positive integer", lines[1].first));
  }
  const auto n = static_cast<std::size_t>(meta[0]);
  if (lines.size() < 2 + n) throw schema_error(fmt::format("network: expected {} liability rows", n));
  const auto ni = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd l(ni, ni + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& [number, line] = lines[2 + i];
    const auto row = parse_row(line, number, n + 1);
    for (std::size_t j = 0; j <= n; ++j) l(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
  }
  std::optional<Eigen::MatrixXd> gamma;
  std::size_t next = 2 + n;
  if (next < lines.size()) {
    if (lines[next].second != "gamma") {
      throw schema_error(fmt::format("network: line {}: unexpected content (expected 'gamma')", lines[next].first));
    }
    if (lines.size() != next + 1 + n) throw schema_error(fmt::format("network: gamma section needs {} rows", n));
    gamma = Eigen::MatrixXd(ni, ni);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& [number, line] = lines[next + 1 + i];
      const auto row = parse_row(line, number, n);
      for (std::size_t j = 0; j < n; ++j) (*gamma)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
    }
  }
  return FinancialNetwork::build(l, meta[1], meta[2], gamma);
}

FinancialNetwork read_network_csv(const std::string& path) { return parse_network_csv(read_file(path)); }

void write_network_csv(std::ostream& os, const FinancialNetwork& net) {
  const auto& l = net.liabilities();
  os << "n,alpha_x,alpha_L\n" << net.size() << ',' << format_number(net.alpha_x()) << ','
     << format_number(net.alpha_L()) << '\n';
  auto rows = [&os](const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << format_number(m(i, j));
      os << '\n';
    }
  };
  rows(l);
  if (net.cross_ownership()) {
    os << "gamma\n";
    rows(*net.cross_ownership());
  }
}

// --- balance sheets ---------------------------------------------------------

std::vector<BalanceSheet> parse_balance_sheets_csv(const std::string& text) {
  const auto lines = content_lines(text);
  if (lines.empty()) throw schema_error("balance sheets: empty file");
  const std::vector<std::string> expected{"bank_id", "total_assets", "capital", "interbank_liabilities"};
  if (split(lines[0].second) != expected) {
    throw schema_error("balance sheets: header must be 'bank_id,total_assets,capital,interbank_liabilities'");
  }
  std::vector<BalanceSheet> out;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto& [number, line] = lines[k];
    const auto cells = split(line);
    if (cells.size() != 4) throw schema_error(fmt::format("line {}: expected 4 fields, found {}", number, cells.size()));
    if (cells[0].empty()) throw schema_error(fmt::format("line {}: empty bank_id", number));
    out.push_back({cells[0], parse_double(cells[1], number), parse_double(cells[2], number),
                   parse_double(cells[3], number)});
  }
  return out;
}

void write_balance_sheets_csv(std::ostream& os, const std::vector<BalanceSheet>& sheets) {
  os << "bank_id,total_assets,capital,interbank_liabilities\n";
  for (const auto& b : sheets) {
    os << b.id << ',' << format_number(b.total_assets) << ',' << format_number(b.capital) << ','
       << format_number(b.interbank_liabilities) << '\n';
  }
}

// --- dense matrices ---------------------------------------------------------

void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m, const std::vector<std::string>& ids) {
  for (std::size_t j = 0; j < ids.size(); ++j) os << (j ? "," : "") << ids[j];
  os << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << format_number(m(i, j));
    os << '\n';
  }
}

Eigen::MatrixXd parse_matrix_csv(const std::string& text, std::vector<std::string>* ids) {
  const auto lines = content_lines(text);
  if (lines.empty()) throw schema_error("matrix: empty file");
  const auto header = split(lines[0].second);
  const auto cols = header.size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(lines.size() - 1), static_cast<Eigen::Index>(cols));
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto row = parse_row(lines[k].second, lines[k].first, cols);
    for (std::size_t j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(j)) = row[j];
  }
  if (ids) *ids = header;
  return m;
}

Eigen::VectorXd parse_vector(const std::string& text) {
  const auto cells = split(text);
  std::vector<double> v;
  for (const auto& c : cells) v.push_back(parse_double(c, 1));
  if (v.empty()) throw schema_error("empty vector");
  return to_vector(v);
}

// --- scenario batches -------------------------------------------------------

void write_batch_csv(std::ostream& os, const ScenarioBatch& batch) {
  os << "# generator=" << batch.generator << " seed=" << batch.seed << " exact=" << (batch.exact ? 1 : 0) << '\n';
  os << "path,weight,factor";
  for (std::size_t i = 0; i < batch.banks(); ++i) os << ",x" << i + 1;
  os << '\n';
  for (Eigen::Index p = 0; p < batch.endowments.rows(); ++p) {
    os << p << ',';
    if (batch.weights.size() > 0) os << format_number(batch.weights(p));
    os << ',';
    if (batch.factor.size() > 0) os << format_number(batch.factor(p));
    for (Eigen::Index i = 0; i < batch.endowments.cols(); ++i) os << ',' << format_number(batch.endowments(p, i));
    os << '\n';
  }
}

ScenarioBatch parse_batch_csv(const std::string& text) {
  const auto lines = content_lines(text, true);
  ScenarioBatch batch;
  std::size_t k = 0;
  if (k < lines.size() && lines[k].second.front() == '#') {
    std::istringstream meta(lines[k].second.substr(1));
    std::string token;
    while (meta >> token) {
      const auto eq = token.find('=');
      if (eq == std::string::npos) continue;
      const auto key = token.substr(0, eq);
      const auto value = token.substr(eq + 1);
      if (key == "generator") batch.generator = value;
      if (key == "seed") batch.seed = std::stoull(value);
      if (key == "exact") batch.exact = value == "1";
    }
    ++k;
  }
  if (k >= lines.size()) throw schema_error("batch: missing header");
  const auto header = split(lines[k].second);
  if (header.size() < 4 || header[0] != "path" || header[1] != "weight" || header[2] != "factor") {
    throw schema_error("batch: header must start with 'path,weight,factor' followed by x1..xn");
  }
  const std::size_t n = header.size() - 3;
  const std::size_t paths = lines.size() - k - 1;
  batch.endowments.resize(static_cast<Eigen::Index>(paths), static_cast<Eigen::Index>(n));
  std::vector<double> weights, factor;
  for (std::size_t p = 0; p < paths; ++p) {
    const auto& [number, line] = lines[k + 1 + p];
    const auto cells = split(line);
    if (cells.size() != n + 3) throw schema_error(fmt::format("line {}: expected {} fields", number, n + 3));
    if (!cells[1].empty()) weights.push_back(parse_double(cells[1], number));
    if (!cells[2].empty()) factor.push_back(parse_double(cells[2], number));
    for (std::size_t i = 0; i < n; ++i) {
      batch.endowments(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(i)) = parse_double(cells[3 + i], number);
    }
  }
  if (!weights.empty()) {
    if (weights.size() != paths) throw schema_error("batch: weight column is partially filled");
    batch.weights = to_vector(weights);
  }
  if (!factor.empty()) {
    if (factor.size() != paths) throw schema_error("batch: factor column is partially filled");
    batch.factor = to_vector(factor);
  }
  if (batch.exact && batch.weights.size() == 0) throw schema_error("batch: exact batches need weights");
  return batch;
}

// --- JSON models ------------------------------------------------------------

FactorModel factor_model_from_json(const json& j) {
  check_schema_version(j, "factor model");
  const auto& maps_json = field(j, "maps", "factor model");
  if (!maps_json.is_array()) throw schema_error("factor model: 'maps' must be an array");
  std::vector<EndowmentMap> maps;
  for (const auto& m : maps_json) maps.push_back(map_from_json(m));
  return FactorModel(std::move(maps), distribution_from_json(field(j, "factor", "factor model")));
}

json to_json(const FactorModel& model) {
  json maps = json::array();
  for (const auto& f : model.maps()) maps.push_back(map_to_json(f));
  return {{"schema_version", kSchemaVersion}, {"factor", distribution_to_json(model.distribution())}, {"maps", maps}};
}

MarginalSet marginals_from_json(const json& j) {
  check_schema_version(j, "marginals");
  const auto& list = field(j, "marginals", "marginals");
  if (!list.is_array()) throw schema_error("marginals: 'marginals' must be an array");
  std::vector<Marginal> out;
  const char* what = "marginal";
  for (const auto& m : list) {
    const auto type = type_of(m, what);
    if (type == "point_mass") {
      out.emplace_back(PointMassMarginal{number(m, "value", what)});
    } else if (type == "finite_support") {
      out.emplace_back(FiniteSupportMarginal{numbers(m, "values", what), numbers(m, "probabilities", what)});
    } else if (type == "lognormal") {
      out.emplace_back(LogNormalMarginal{number(m, "mu", what), number(m, "sigma", what)});
    } else {
      throw schema_error(fmt::format("unknown marginal type '{}'", type));
    }
  }
  return MarginalSet(std::move(out));
}

json to_json(const MarginalSet& marginals) {
  json list = json::array();
  for (const auto& m : marginals.marginals()) {
    list.push_back(std::visit(overloaded{
                                  [](const PointMassMarginal& p) -> json {
                                    return {{"type", "point_mass"}, {"value", p.value}};
                                  },
                                  [](const FiniteSupportMarginal& f) -> json {
                                    return {{"type", "finite_support"},
                                            {"values", f.values},
                                            {"probabilities", f.probabilities}};
                                  },
                                  [](const LogNormalMarginal& l) -> json {
                                    return {{"type", "lognormal"}, {"mu", l.mu}, {"sigma", l.sigma}};
                                  },
                              },
                              m));
  }
  return {{"schema_version", kSchemaVersion}, {"marginals", list}};
}

CapmParams capm_from_json(const json& j, std::size_t n) {
  check_schema_version(j, "capm");
  const char* what = "capm";
  CapmParams p;
  p.r = number_or(j, "r", 0.0, what);
  p.T = number(j, "T", what);
  p.sigma_M = number(j, "sigma_M", what);
  p.mu_M = number_or(j, "mu_M", p.r, what);
  p.q0 = number_or(j, "q0", 1.0, what);
  p.beta = to_vector(numbers(j, "beta", what));
  p.gamma = to_vector(numbers(j, "gamma", what));
  p.s = to_vector(numbers(j, "s", what));
  if (j.contains("sigma")) p.sigma = to_vector(numbers(j, "sigma", what));
  if (j.contains("cash")) p.cash = to_vector(numbers(j, "cash", what));
  p.complete(n);
  return p;
}

json to_json(const CapmParams& p) {
  return {{"schema_version", kSchemaVersion},
          {"r", p.r},
          {"T", p.T},
          {"sigma_M", p.sigma_M},
          {"mu_M", p.mu_M},
          {"q0", p.q0},
          {"beta", std_vector(p.beta)},
          {"gamma", std_vector(p.gamma)},
          {"sigma", std_vector(p.sigma)},
          {"s", std_vector(p.s)},
          {"cash", std_vector(p.cash)}};
}

SimulationSpec simulation_spec_from_json(const json& j) {
  check_schema_version(j, "simulation spec");
  const char* what = "simulation spec";
  const auto type = type_of(j, what);
  if (type == "comonotonic_factor") {
    json model = field(j, "model", what);
    if (!model.contains("schema_version")) model["schema_version"] = kSchemaVersion;
    return ComonotonicFactorSpec{factor_model_from_json(model)};
  }
  if (type == "capm") {
    json params = field(j, "params", what);
    if (!params.contains("schema_version")) params["schema_version"] = kSchemaVersion;
    const auto n = field(params, "s", what).size();
    CapmSpec spec{capm_from_json(params, n), Measure::risk_neutral, {}};
    if (j.contains("measure")) {
      const auto m = j.at("measure").get<std::string>();
      if (m == "physical") {
        spec.measure = Measure::physical;
      } else if (m != "risk_neutral") {
        throw schema_error(fmt::format("unknown measure '{}'", m));
      }
    }
    if (j.contains("idiosyncratic_correlation")) spec.idiosyncratic_correlation = matrix(j, "idiosyncratic_correlation", what);
    return spec;
  }
  if (type == "gaussian_copula_lognormal") {
    return GaussianCopulaLognormalSpec{to_vector(numbers(j, "mu", what)), to_vector(numbers(j, "sigma", what)),
                                       matrix(j, "correlation", what)};
  }
  if (type == "finite_support") {
    FiniteSupportSpec spec;
    spec.scenarios = matrix(j, "scenarios", what);
    spec.probabilities = to_vector(numbers(j, "probabilities", what));
    if (j.contains("exact")) spec.exact = j.at("exact").get<bool>();
    return spec;
  }
  throw schema_error(fmt::format("unknown simulation spec type '{}'", type));
}

}  // namespace netval
