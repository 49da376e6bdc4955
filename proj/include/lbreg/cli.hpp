#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "lbreg/types.hpp"

namespace lbreg::cli {

// Everything a subcommand needs. Unset optionals take the subcommand's
// default; a JSON config file and command-line flags both fill this, flags
// last.
struct RunConfig {
  std::string command;

  std::optional<std::string> matrix;  // "gaussian" | "dct"
  std::optional<Index> n;
  std::optional<Index> m;
  std::optional<Index> kappa;
  std::optional<std::string> signal;            // "uniform" | "dynrange"
  std::optional<std::string> gaussian_scaling;  // "orth" | "unit" | "raw"

  std::optional<double> mu;
  std::optional<double> delta;  // empty: automatic
  std::optional<std::string> stop;  // "rel" | "std" | "none"
  std::optional<double> tol;
  std::optional<double> sigma;
  std::optional<double> snr;
  std::optional<bool> kick;
  std::optional<double> kick_tol;
  std::optional<std::size_t> max_iters;

  std::optional<std::size_t> trials;
  std::optional<Seed> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> preset;
  std::optional<std::vector<double>> fractions;
  std::optional<std::size_t> instances;
  std::optional<bool> subsequence;

  std::optional<std::filesystem::path> operator_file;
  std::optional<std::filesystem::path> rhs_file;

  std::optional<std::filesystem::path> out_dir;
  std::optional<std::set<std::string>> formats;
};

// Reads the keys of a config file into `config`; unknown keys and wrongly
// typed values throw.
void apply_config_json(const nlohmann::json& j, RunConfig& config);

// Overwrites the fields set in `overrides`.
void merge(RunConfig& base, const RunConfig& overrides);

// Rejects inconsistent settings; throws std::invalid_argument.
void validate(const RunConfig& config);

// Output directory: the configured one, else $LBREG_OUT_DIR, else "lbreg_out".
std::filesystem::path output_dir(const RunConfig& config);

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

}  // namespace lbreg::cli
