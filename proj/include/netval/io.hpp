#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "netval/bounds.hpp"
#include "netval/calibration.hpp"
#include "netval/capm.hpp"
#include "netval/factor_model.hpp"
#include "netval/network.hpp"
#include "netval/simulation.hpp"

namespace netval {

inline constexpr int kSchemaVersion = 1;

using json = nlohmann::json;

/// Reads a whole file; throws Error(not_found) when it cannot be opened.
std::string read_file(const std::string& path);
json read_json_file(const std::string& path);

// Network CSV:
//   n,alpha_x,alpha_L
//   <n>,<alpha_x>,<alpha_L>
//   n rows of n+1 liabilities (last column: society)
//   optional line "gamma" followed by n rows of n cross-ownership shares
FinancialNetwork parse_network_csv(const std::string& text);
FinancialNetwork read_network_csv(const std::string& path);
void write_network_csv(std::ostream& os, const FinancialNetwork& net);

// bank_id,total_assets,capital,interbank_liabilities
std::vector<BalanceSheet> parse_balance_sheets_csv(const std::string& text);
void write_balance_sheets_csv(std::ostream& os, const std::vector<BalanceSheet>& sheets);

/// Dense matrix with a header row of bank ids.
void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m, const std::vector<std::string>& ids);
Eigen::MatrixXd parse_matrix_csv(const std::string& text, std::vector<std::string>* ids = nullptr);

/// Comma-separated numbers, e.g. "3,4".
Eigen::VectorXd parse_vector(const std::string& text);

// Batch CSV: "# generator=<name> seed=<seed> exact=<0|1>", then
// path,weight,factor,x1..xn (weight and factor may be empty).
void write_batch_csv(std::ostream& os, const ScenarioBatch& batch);
ScenarioBatch parse_batch_csv(const std::string& text);

FactorModel factor_model_from_json(const json& j);
json to_json(const FactorModel& model);

MarginalSet marginals_from_json(const json& j);
json to_json(const MarginalSet& marginals);

/// Fills sigma/cash defaults for n banks.
CapmParams capm_from_json(const json& j, std::size_t n);
json to_json(const CapmParams& params);

SimulationSpec simulation_spec_from_json(const json& j);

/// Requires "schema_version": 1.
void check_schema_version(const json& j, const char* what);

std::string format_number(double v);

}  // namespace netval
