#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lbreg/problems.hpp"
#include "lbreg/solver.hpp"

namespace lbreg {

struct TrialRecord {
  std::string config_id;
  Seed seed = 0;
  std::size_t iterations = 0;
  std::size_t steps = 0;
  double rel_error = 0.0;  // ||u - u_bar|| / ||u_bar||
  double wall_time = 0.0;
  double snr_db = 0.0;  // +inf for noise-free runs
  StopReason stop_reason = StopReason::MaxIters;
  std::size_t kicks = 0;
  std::size_t monotonicity_violations = 0;
};

struct MetricStats {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single value
  double max = 0.0;
};

// Throws on empty input.
MetricStats aggregate(std::span<const double> values);

struct AggregateStats {
  std::size_t trials = 0;
  MetricStats iterations;
  MetricStats rel_error;
  MetricStats wall_time;
  MetricStats snr_db;
  std::size_t converged = 0;  // trials not stopped by MaxIters
};

AggregateStats aggregate(std::span<const TrialRecord> records);

struct ConfigResult {
  Preset preset;
  std::vector<TrialRecord> trials;
  AggregateStats stats;
};

struct Table1Options {
  std::size_t trials = 10;
  double mu = 1.0;
  double tol = 1e-5;
  Seed seed0 = 1;
  bool kick_enabled = true;
  double kick_tol = kFastKickTol;
  std::size_t max_iters = 20000;
  GaussianScaling scaling = GaussianScaling::OrthonormalRows;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct Table2Options {
  std::size_t trials = 10;
  double mu = 1.0;
  double target_snr_db = 25.0;
  Seed seed0 = 1;
  bool kick_enabled = true;
  double kick_tol = kFastKickTol;
  std::size_t max_iters = 1000;
  GaussianScaling scaling = GaussianScaling::OrthonormalRows;
  unsigned threads = 0;
};

// Seed of trial `trial` of a configuration; keyed by name so that a preset
// gets the same instances whether it runs alone or in a batch.
Seed trial_seed(Seed seed0, const std::string& config_id, std::size_t trial);

// Runs fn(0..count-1) on up to `threads` workers. Results must be written by
// index; the schedule does not affect them.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

std::vector<ConfigResult> run_table1(std::span<const Preset> presets, const Table1Options& options);
std::vector<ConfigResult> run_table2(std::span<const Preset> presets, const Table2Options& options);

struct DynRangeOptions {
  Index n = 4000;
  Index m = 1327;
  Index kappa = 80;
  double mu = 1e10;
  double tol = 1e-11;
  std::size_t max_iters = 1000;
  std::optional<double> target_snr_db;  // noise-free when empty
  Seed seed = 1;
  bool kick_enabled = true;
  double kick_tol = kFastKickTol;
  bool signed_values = true;
};

struct DecadeError {
  int decade = 0;  // entries with |u_bar_i| in [10^decade, 10^(decade+1))
  std::size_t count = 0;
  double rel_error = 0.0;
};

struct DynRangeReport {
  TrialRecord record;
  std::vector<IterationRecord> history;
  std::vector<double> error_history;  // ||u^k - u_bar|| / ||u_bar|| per iteration
  std::vector<DecadeError> decades;
  RealVector u_bar;
  RealVector u;
  double dynamic_range = 0.0;  // max / min nonzero magnitude of u_bar
  double sigma = 0.0;
};

DynRangeReport run_dynrange(const DynRangeOptions& options);

// Smallest decade such that it and every larger populated decade have
// relative error at most `threshold`; empty if the top decade fails.
std::optional<int> well_recovered_from(const std::vector<DecadeError>& decades, double threshold);

struct SinusoidOptions {
  Index n = 2000;
  std::vector<double> fractions{0.4};
  // Exactly one noise specification is used: sigma if set, else the target SNR.
  std::optional<double> sigma;
  double target_snr_db = -5.0;
  std::size_t trials = 10;
  Seed seed0 = 1;
  double mu = 1.0;
  std::size_t max_iters = 1000;
  Index spikes = 4;
  bool kick_enabled = true;
  double kick_tol = kFastKickTol;
  unsigned threads = 0;
};

struct SinusoidTrial {
  double fraction = 0.0;
  Seed seed = 0;
  SinusoidParams params;
  double sigma = 0.0;
  double snr_db = 0.0;
  std::size_t iterations = 0;
  StopReason stop_reason = StopReason::MaxIters;
  std::size_t kicks = 0;
  std::size_t monotonicity_violations = 0;
  bool frequencies_match = false;
  double magnitude_error = 0.0;  // relative, over the true spikes
  double physical_error = 0.0;   // ||u* - u_bar|| / ||u_bar||
  double wall_time = 0.0;
};

struct SinusoidFractionSummary {
  double fraction = 0.0;
  std::size_t trials = 0;
  std::size_t matches = 0;
  double match_rate = 0.0;
  MetricStats snr_db;
  MetricStats magnitude_error;
  MetricStats physical_error;
};

struct SinusoidReport {
  std::vector<SinusoidTrial> trials;
  std::vector<SinusoidFractionSummary> summaries;
};

SinusoidTrial run_sinusoid_trial(const SinusoidInstance& instance, const SinusoidOptions& options);
SinusoidReport run_sinusoid(const SinusoidOptions& options);

// Solver against the brute-force oracle on small dense instances with a
// Gaussian matrix and a random right-hand side.
struct OracleSuiteOptions {
  std::size_t instances = 50;
  Seed seed = 1;
  Index max_n = 8;
  Index max_m = 5;
  std::vector<double> mus{1.0, 10.0};
  double tol = 1e-10;
  std::size_t max_iters = 100000;
  double kick_tol = kExactKickTol;
};

struct OracleCase {
  Seed seed = 0;
  Index m = 0;
  Index n = 0;
  double mu = 0.0;
  double delta = 0.0;
  std::size_t iterations = 0;
  StopReason stop_reason = StopReason::MaxIters;
  double deviation = 0.0;  // ||u_solver - u_oracle|| / max(||u_oracle||, tiny)
  std::size_t kkt_accepted = 0;
  std::size_t monotonicity_violations = 0;
};

struct OracleSuiteReport {
  std::vector<OracleCase> cases;
  double max_deviation = 0.0;
  std::size_t monotonicity_violations = 0;
};

OracleSuiteReport run_oracle_suite(const OracleSuiteOptions& options);

// Kicked versus plain runs from the same instance: every kicked state must
// appear in the plain trajectory.
struct KickCheckOptions {
  std::size_t instances = 10;
  Seed seed = 1;
  Index n = 200;
  Index m = 50;
  Index kappa = 10;
  double mu = 50.0;
  double tol = 1e-5;
  double rel_tol = 1e-9;
  // Kicks must land at exact stagnation for the replay to match.
  double kick_tol = kExactKickTol;
  std::size_t max_iters = 100000;
};

struct KickCheckCase {
  Seed seed = 0;
  std::size_t kicked_iterations = 0;
  std::size_t kicked_steps = 0;
  std::size_t kicks = 0;
  // First plain iteration meeting the same stopping rule; 0 if never met.
  std::size_t plain_iterations = 0;
  std::size_t states = 0;
  std::size_t matched = 0;
  bool subsequence = false;
  std::size_t monotonicity_violations = 0;
};

struct KickCheckReport {
  std::vector<KickCheckCase> cases;
};

KickCheckReport run_kick_check(const KickCheckOptions& options);

}  // namespace lbreg
