#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "lbreg/bench.hpp"
#include "lbreg/linop.hpp"
#include "lbreg/problems.hpp"
#include "lbreg/solver.hpp"

namespace lbreg::io {

using nlohmann::json;

// Output documents carry this version in a top-level "schema" field.
inline constexpr int kSchemaVersion = 1;

// Non-finite numbers are written as null.
json number(double value);

json history_json(const std::vector<IterationRecord>& history);
std::string history_csv(const std::vector<IterationRecord>& history);

template <typename Scalar>
json solve_result_json(const SolveResultT<Scalar>& result, std::optional<double> rel_err = {}) {
  json j;
  j["schema"] = kSchemaVersion;
  j["iterations"] = result.iterations;
  j["steps"] = result.steps;
  j["kicks"] = result.kicks_applied;
  j["stop_reason"] = to_string(result.stop_reason);
  if (rel_err) j["rel_err"] = number(*rel_err);
  j["delta"] = number(result.delta);
  j["wall_time"] = number(result.wall_time);
  j["history"] = history_json(result.history);
  return j;
}

json trial_json(const TrialRecord& record);
json stats_json(const AggregateStats& stats);
json table_json(const std::string& name, const std::vector<ConfigResult>& results);
// One row per configuration; the SNR column is included for noisy tables.
std::string table_csv(const std::vector<ConfigResult>& results, bool with_snr);

json dynrange_json(const DynRangeReport& report);
// k, rel_residual, rel_error; the data behind the residual/error decay plots.
std::string dynrange_history_csv(const DynRangeReport& report);

json sinusoid_json(const SinusoidReport& report);
std::string sinusoid_csv(const SinusoidReport& report);

json problem_config_json(const ProblemConfig& config);
ProblemConfig problem_config_from_json(const json& j);

// {kind, n, rows} for partial transforms; dense operators are stored as CSV.
json operator_spec_json(const LinearOperator& op);
LinearOperator operator_from_spec(const json& j);

void write_matrix_csv(const std::filesystem::path& path, const RealMatrix& matrix);
RealMatrix read_matrix_csv(const std::filesystem::path& path);
RealVector read_vector_csv(const std::filesystem::path& path);
void write_vector_csv(const std::filesystem::path& path, const RealVector& vector);

// Loads a dense CSV matrix or a JSON operator spec, chosen by extension.
LinearOperator load_operator(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace lbreg::io
