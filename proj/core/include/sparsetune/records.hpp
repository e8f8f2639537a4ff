#pragma once

// Persisted forms of configs, cells and estimates.
//
// Experiment configs are JSON with a "schema_version" field. Cells go to CSV
// with the fixed header below, one row per (delta, rho) in grid order.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sparsetune/transition.hpp"

namespace sparsetune {

using Json = nlohmann::json;

inline constexpr std::string_view kCellCsvHeader =
    "delta,rho,n,N,k,M,S,mean_iterations,algo,policy,kappa,suite_matrix,suite_coeff,seed";

Json to_json(const ThresholdPolicy& policy);
Json to_json(const SolverConfig& cfg);
Json to_json(const SolverSpec& spec);
Json to_json(const ProblemSuite& suite);
Json to_json(const ExperimentGrid& grid);
Json to_json(const TransitionEstimate& est);

// Parsers append one message per bad field to `problems` (prefixed by
// `where`) and return a best-effort value; callers throw if any were added.
ThresholdPolicy policy_from_json(const Json& j, const std::string& where, std::vector<std::string>& problems);
SolverConfig solver_config_from_json(const Json& j, const std::string& where, std::vector<std::string>& problems);
SolverSpec solver_spec_from_json(const Json& j, const std::string& where, std::vector<std::string>& problems);
ProblemSuite suite_from_json(const Json& j, const std::string& where, std::vector<std::string>& problems);
ExperimentGrid grid_from_json(const Json& j, std::vector<std::string>& problems);

/// Throws ConfigError listing every problem.
ExperimentGrid grid_from_json(const Json& j);
SolverConfig solver_config_from_json(const Json& j);

/// Stable 64-bit hash of the canonical serialization, as 16 hex digits.
std::string fingerprint(const ExperimentGrid& grid);
std::string hex64(std::uint64_t v);

std::string format_real(double v);
std::string to_csv_row(const TransitionCell& cell);
/// `line` is used for error messages.
TransitionCell parse_csv_row(std::string_view row, const std::string& source, std::size_t line);

/// Reads a cell CSV. An unterminated final line (interrupted write) is
/// ignored when `tolerate_partial_tail` is set, and reported otherwise.
std::vector<TransitionCell> read_cells_csv(const std::filesystem::path& path, bool tolerate_partial_tail = false);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace sparsetune
