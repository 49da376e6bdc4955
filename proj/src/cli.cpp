#include "lbreg/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <map>

#include "CLI11.hpp"

#include "lbreg/bench.hpp"
#include "lbreg/io.hpp"
#include "lbreg/linop.hpp"
#include "lbreg/problems.hpp"
#include "lbreg/solver.hpp"

namespace lbreg::cli {

namespace {

using nlohmann::json;

const std::vector<std::string> kCommands = {"solve",    "table1",   "table2",
                                            "dynrange", "sinusoid", "verify"};

// Config keys accepted by each subcommand, beyond the universal ones.
const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> table = {
      {"solve",
       {"matrix", "n", "m", "kappa", "signal", "gaussian_scaling", "mu", "delta", "stop", "tol",
        "sigma", "snr", "kick", "kick_tol", "max_iters", "operator", "rhs"}},
      {"table1", {"preset", "trials", "threads", "mu", "tol", "kick", "kick_tol", "max_iters",
                  "gaussian_scaling"}},
      {"table2", {"preset", "trials", "threads", "mu", "snr", "kick", "kick_tol", "max_iters",
                  "gaussian_scaling"}},
      {"dynrange", {"n", "m", "kappa", "mu", "tol", "snr", "kick", "kick_tol", "max_iters"}},
      {"sinusoid",
       {"n", "fractions", "sigma", "snr", "trials", "threads", "mu", "kick", "kick_tol",
        "max_iters"}},
      {"verify", {"instances", "subsequence", "tol", "max_iters", "kick_tol"}},
  };
  return table;
}

const std::set<std::string> kUniversalKeys = {"command", "seed", "out", "formats"};

std::set<std::string> set_keys(const RunConfig& c) {
  std::set<std::string> keys;
  auto note = [&](const auto& field, const char* name) {
    if (field) keys.insert(name);
  };
  note(c.matrix, "matrix");
  note(c.n, "n");
  note(c.m, "m");
  note(c.kappa, "kappa");
  note(c.signal, "signal");
  note(c.gaussian_scaling, "gaussian_scaling");
  note(c.mu, "mu");
  note(c.delta, "delta");
  note(c.stop, "stop");
  note(c.tol, "tol");
  note(c.sigma, "sigma");
  note(c.snr, "snr");
  note(c.kick, "kick");
  note(c.kick_tol, "kick_tol");
  note(c.max_iters, "max_iters");
  note(c.trials, "trials");
  note(c.seed, "seed");
  note(c.threads, "threads");
  note(c.preset, "preset");
  note(c.fractions, "fractions");
  note(c.instances, "instances");
  note(c.subsequence, "subsequence");
  note(c.operator_file, "operator");
  note(c.rhs_file, "rhs");
  note(c.out_dir, "out");
  note(c.formats, "formats");
  return keys;
}

template <typename T>
void read_key(const json& j, const char* key, std::optional<T>& field) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument(std::string("config: bad value for '") + key + "'");
  }
}

template <typename T>
void take(std::optional<T>& dst, const std::optional<T>& src) {
  if (src) dst = src;
}

bool wants(const RunConfig& c, const std::string& format) {
  return !c.formats || c.formats->count(format) > 0;
}

void positive(const char* name, double value) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw std::invalid_argument(std::string(name) + " must be positive and finite");
}

SolveParams solver_params(const RunConfig& c, double default_tol, std::size_t default_max) {
  SolveParams p;
  p.mu = c.mu.value_or(1.0);
  p.delta = c.delta;
  p.kick_enabled = c.kick.value_or(true);
  if (c.kick_tol) p.kick_tol = *c.kick_tol;
  p.max_iters = c.max_iters.value_or(default_max);
  p.stopping = RelResidual{c.tol.value_or(default_tol)};
  return p;
}

GaussianScaling scaling_of(const RunConfig& c) {
  const std::string s = c.gaussian_scaling.value_or("orth");
  if (s == "raw") return GaussianScaling::Raw;
  if (s == "unit") return GaussianScaling::UnitSpectral;
  return GaussianScaling::OrthonormalRows;
}

double relative_error(const RealVector& u, const RealVector& ref) {
  const double d = ref.norm();
  return d > 0.0 ? (u - ref).norm() / d : (u - ref).norm();
}

void write_json(const std::filesystem::path& path, const json& j) {
  io::write_text(path, j.dump(2) + "\n");
}

int cmd_solve(const RunConfig& c, const std::filesystem::path& out_dir, std::ostream& out) {
  SolveParams params = solver_params(c, 1e-5, 10000);
  const std::string stop = c.stop.value_or(c.sigma || c.snr ? "std" : "rel");

  std::optional<LinearOperator> op;
  RealVector f;
  std::optional<RealVector> reference;
  json instance;
  double sigma = c.sigma.value_or(0.0);

  if (c.operator_file) {
    op = io::load_operator(*c.operator_file);
    if (op->field() != ScalarField::Real)
      throw std::invalid_argument("solve: only real operators are supported from files");
    f = io::read_vector_csv(*c.rhs_file);
    if (f.size() != op->rows())
      throw std::invalid_argument("solve: rhs length " + std::to_string(f.size()) +
                                  " does not match operator rows " + std::to_string(op->rows()));
    instance = {{"operator", c.operator_file->string()}, {"rhs", c.rhs_file->string()}};
  } else {
    ProblemConfig pc;
    if (c.matrix) pc.kind = matrix_kind_from_string(*c.matrix);
    if (c.n) pc.n = *c.n;
    if (c.m) pc.m = *c.m;
    if (c.kappa) pc.kappa = *c.kappa;
    if (c.signal) pc.mode = signal_mode_from_string(*c.signal);
    pc.scaling = scaling_of(c);
    pc.seed = c.seed.value_or(1);
    validate(pc);
    ProblemInstance inst = gen_instance(pc);
    if (c.snr) sigma = sigma_for_snr(inst.u_bar, pc.m, *c.snr);
    if (sigma > 0.0) inst = add_noise(inst, sigma, derive_seed(pc.seed, 7));
    params.spectral_norm_sq = inst.spectral_norm_sq;
    op = inst.op;
    f = inst.f_obs;
    reference = inst.u_bar;
    instance = io::problem_config_json(pc);
    instance["sigma"] = io::number(sigma);
    instance["snr_db"] = io::number(inst.snr_db);
  }

  if (stop == "std") params.stopping = StdResidual{sigma};
  else if (stop == "none") params.stopping = MaxItersOnly{};

  const SolveResult result = solve(*op, f, params);
  std::optional<double> rel_err;
  if (reference) rel_err = relative_error(result.u_final, *reference);

  if (wants(c, "json")) {
    json j = io::solve_result_json(result, rel_err);
    j["instance"] = instance;
    j["mu"] = params.mu;
    j["monotonicity_violations"] = monotonicity_violations(result);
    j["u"] = std::vector<double>(result.u_final.begin(), result.u_final.end());
    write_json(out_dir / "solve.json", j);
  }
  if (wants(c, "csv")) {
    io::write_text(out_dir / "history.csv", io::history_csv(result.history));
    io::write_vector_csv(out_dir / "solution.csv", result.u_final);
  }
  out << "iterations " << result.iterations << " (steps " << result.steps << ", kicks "
      << result.kicks_applied << "), stop " << to_string(result.stop_reason);
  if (rel_err) out << ", rel_err " << *rel_err;
  out << "\n";
  return 0;
}

void print_table(const std::vector<ConfigResult>& results, std::ostream& out) {
  for (const auto& r : results)
    out << r.preset.name() << ": iter mean " << r.stats.iterations.mean << " max "
        << r.stats.iterations.max << ", rel_err mean " << r.stats.rel_error.mean << ", converged "
        << r.stats.converged << "/" << r.stats.trials << "\n";
}

int cmd_table(const RunConfig& c, const std::filesystem::path& out_dir, std::ostream& out) {
  const std::vector<Preset> presets = select_presets(c.preset.value_or("all"));
  std::vector<ConfigResult> results;
  const bool noisy = c.command == "table2";
  if (!noisy) {
    Table1Options o;
    o.trials = c.trials.value_or(o.trials);
    o.mu = c.mu.value_or(o.mu);
    o.tol = c.tol.value_or(o.tol);
    o.seed0 = c.seed.value_or(o.seed0);
    o.kick_enabled = c.kick.value_or(true);
    o.kick_tol = c.kick_tol.value_or(o.kick_tol);
    o.max_iters = c.max_iters.value_or(o.max_iters);
    o.scaling = scaling_of(c);
    o.threads = c.threads.value_or(0);
    results = run_table1(presets, o);
  } else {
    Table2Options o;
    o.trials = c.trials.value_or(o.trials);
    o.mu = c.mu.value_or(o.mu);
    o.target_snr_db = c.snr.value_or(o.target_snr_db);
    o.seed0 = c.seed.value_or(o.seed0);
    o.kick_enabled = c.kick.value_or(true);
    o.kick_tol = c.kick_tol.value_or(o.kick_tol);
    o.max_iters = c.max_iters.value_or(o.max_iters);
    o.scaling = scaling_of(c);
    o.threads = c.threads.value_or(0);
    results = run_table2(presets, o);
  }
  if (wants(c, "csv"))
    io::write_text(out_dir / (c.command + ".csv"), io::table_csv(results, noisy));
  if (wants(c, "json")) write_json(out_dir / (c.command + ".json"), io::table_json(c.command, results));
  print_table(results, out);
  return 0;
}

int cmd_dynrange(const RunConfig& c, const std::filesystem::path& out_dir, std::ostream& out) {
  DynRangeOptions o;
  o.n = c.n.value_or(o.n);
  o.m = c.m.value_or(o.m);
  o.kappa = c.kappa.value_or(o.kappa);
  o.mu = c.mu.value_or(o.mu);
  o.tol = c.tol.value_or(o.tol);
  o.max_iters = c.max_iters.value_or(o.max_iters);
  o.target_snr_db = c.snr;
  o.seed = c.seed.value_or(o.seed);
  o.kick_enabled = c.kick.value_or(true);
  o.kick_tol = c.kick_tol.value_or(o.kick_tol);
  const DynRangeReport report = run_dynrange(o);
  if (wants(c, "json")) write_json(out_dir / "dynrange.json", io::dynrange_json(report));
  if (wants(c, "csv"))
    io::write_text(out_dir / "dynrange_history.csv", io::dynrange_history_csv(report));
  const double final_residual =
      report.history.empty() ? 1.0 : report.history.back().rel_residual;
  out << "iterations " << report.record.iterations << ", rel_residual " << final_residual
      << ", rel_err " << report.record.rel_error << ", dynamic range " << report.dynamic_range
      << "\n";
  return 0;
}

int cmd_sinusoid(const RunConfig& c, const std::filesystem::path& out_dir, std::ostream& out) {
  SinusoidOptions o;
  o.n = c.n.value_or(o.n);
  if (c.fractions) o.fractions = *c.fractions;
  o.sigma = c.sigma;
  o.target_snr_db = c.snr.value_or(o.target_snr_db);
  o.trials = c.trials.value_or(o.trials);
  o.seed0 = c.seed.value_or(o.seed0);
  o.mu = c.mu.value_or(o.mu);
  o.max_iters = c.max_iters.value_or(o.max_iters);
  o.kick_enabled = c.kick.value_or(true);
  o.kick_tol = c.kick_tol.value_or(o.kick_tol);
  o.threads = c.threads.value_or(0);
  const SinusoidReport report = run_sinusoid(o);
  if (wants(c, "csv")) io::write_text(out_dir / "sinusoid.csv", io::sinusoid_csv(report));
  if (wants(c, "json")) write_json(out_dir / "sinusoid.json", io::sinusoid_json(report));
  for (const auto& s : report.summaries)
    out << "fraction " << s.fraction << ": frequencies recovered " << s.matches << "/" << s.trials
        << ", mean SNR " << s.snr_db.mean << " dB\n";
  return 0;
}

int cmd_verify(const RunConfig& c, const std::filesystem::path& out_dir, std::ostream& out) {
  OracleSuiteOptions o;
  o.instances = c.instances.value_or(o.instances);
  o.seed = c.seed.value_or(o.seed);
  o.tol = c.tol.value_or(o.tol);
  o.max_iters = c.max_iters.value_or(o.max_iters);
  o.kick_tol = c.kick_tol.value_or(o.kick_tol);
  const OracleSuiteReport suite = run_oracle_suite(o);

  json j;
  j["schema"] = io::kSchemaVersion;
  j["experiment"] = "verify";
  j["instances"] = suite.cases.size();
  j["max_deviation"] = io::number(suite.max_deviation);
  j["monotonicity_violations"] = suite.monotonicity_violations;
  json cases = json::array();
  for (const auto& k : suite.cases)
    cases.push_back({{"seed", k.seed},
                     {"m", k.m},
                     {"n", k.n},
                     {"mu", k.mu},
                     {"delta", k.delta},
                     {"iterations", k.iterations},
                     {"stop_reason", to_string(k.stop_reason)},
                     {"deviation", io::number(k.deviation)},
                     {"kkt_accepted", k.kkt_accepted}});
  j["cases"] = cases;
  out << "oracle: " << suite.cases.size() << " instances, max relative deviation "
      << suite.max_deviation << ", monotonicity violations " << suite.monotonicity_violations
      << "\n";

  bool subsequence_ok = true;
  if (c.subsequence.value_or(false)) {
    KickCheckOptions ko;
    ko.seed = o.seed;
    if (c.kick_tol) ko.kick_tol = *c.kick_tol;
    const KickCheckReport kicks = run_kick_check(ko);
    json kc = json::array();
    std::size_t passed = 0;
    for (const auto& k : kicks.cases) {
      passed += k.subsequence;
      kc.push_back({{"seed", k.seed},
                    {"kicked_iterations", k.kicked_iterations},
                    {"kicked_steps", k.kicked_steps},
                    {"kicks", k.kicks},
                    {"plain_iterations", k.plain_iterations},
                    {"states", k.states},
                    {"matched", k.matched},
                    {"subsequence", k.subsequence}});
    }
    subsequence_ok = passed == kicks.cases.size();
    j["subsequence"] = kc;
    out << "subsequence: " << passed << "/" << kicks.cases.size() << " instances pass\n";
  }
  if (wants(c, "json")) write_json(out_dir / "verify.json", j);
  return subsequence_ok ? 0 : 3;
}

void add_solver_options(CLI::App* sub, RunConfig& f, std::optional<std::string>& delta_text,
                        bool& kick_value, CLI::Option*& kick_opt, bool with_delta) {
  sub->add_option("--mu", f.mu, "Regularization weight of the l1 term");
  if (with_delta) sub->add_option("--delta", delta_text, "Step size, a number or 'auto'");
  sub->add_option("--max-iters", f.max_iters, "Iteration cap");
  kick_opt = sub->add_flag("--kick,!--no-kick", kick_value, "Enable or disable kicking");
}

}  // namespace

void apply_config_json(const json& j, RunConfig& c) {
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  static const std::set<std::string> known = [] {
    std::set<std::string> all = kUniversalKeys;
    for (const auto& [cmd, keys] : allowed_keys()) all.insert(keys.begin(), keys.end());
    return all;
  }();
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw std::invalid_argument("config: unknown key '" + key + "'");

  if (j.contains("command")) {
    const auto cmd = j.at("command");
    if (!cmd.is_string()) throw std::invalid_argument("config: 'command' must be a string");
    if (!c.command.empty() && cmd.get<std::string>() != c.command)
      throw std::invalid_argument("config: written for '" + cmd.get<std::string>() +
                                  "', not '" + c.command + "'");
  }
  read_key(j, "matrix", c.matrix);
  read_key(j, "n", c.n);
  read_key(j, "m", c.m);
  read_key(j, "kappa", c.kappa);
  read_key(j, "signal", c.signal);
  read_key(j, "gaussian_scaling", c.gaussian_scaling);
  read_key(j, "mu", c.mu);
  if (j.contains("delta")) {
    const auto& d = j.at("delta");
    if (d.is_string() && d.get<std::string>() == "auto") c.delta.reset();
    else if (d.is_number()) c.delta = d.get<double>();
    else throw std::invalid_argument("config: 'delta' must be a number or \"auto\"");
  }
  read_key(j, "stop", c.stop);
  read_key(j, "tol", c.tol);
  read_key(j, "sigma", c.sigma);
  read_key(j, "snr", c.snr);
  read_key(j, "kick", c.kick);
  read_key(j, "kick_tol", c.kick_tol);
  read_key(j, "max_iters", c.max_iters);
  read_key(j, "trials", c.trials);
  read_key(j, "seed", c.seed);
  read_key(j, "threads", c.threads);
  read_key(j, "preset", c.preset);
  read_key(j, "fractions", c.fractions);
  read_key(j, "instances", c.instances);
  read_key(j, "subsequence", c.subsequence);
  std::optional<std::string> path;
  read_key(j, "operator", path);
  if (path) c.operator_file = *path;
  path.reset();
  read_key(j, "rhs", path);
  if (path) c.rhs_file = *path;
  path.reset();
  read_key(j, "out", path);
  if (path) c.out_dir = *path;
  std::optional<std::vector<std::string>> formats;
  read_key(j, "formats", formats);
  if (formats) c.formats = std::set<std::string>(formats->begin(), formats->end());
}

void merge(RunConfig& b, const RunConfig& o) {
  if (!o.command.empty()) b.command = o.command;
  take(b.matrix, o.matrix);
  take(b.n, o.n);
  take(b.m, o.m);
  take(b.kappa, o.kappa);
  take(b.signal, o.signal);
  take(b.gaussian_scaling, o.gaussian_scaling);
  take(b.mu, o.mu);
  take(b.delta, o.delta);
  take(b.stop, o.stop);
  take(b.tol, o.tol);
  take(b.sigma, o.sigma);
  take(b.snr, o.snr);
  take(b.kick, o.kick);
  take(b.kick_tol, o.kick_tol);
  take(b.max_iters, o.max_iters);
  take(b.trials, o.trials);
  take(b.seed, o.seed);
  take(b.threads, o.threads);
  take(b.preset, o.preset);
  take(b.fractions, o.fractions);
  take(b.instances, o.instances);
  take(b.subsequence, o.subsequence);
  take(b.operator_file, o.operator_file);
  take(b.rhs_file, o.rhs_file);
  take(b.out_dir, o.out_dir);
  take(b.formats, o.formats);
}

void validate(const RunConfig& c) {
  const auto allowed = allowed_keys().find(c.command);
  if (allowed == allowed_keys().end())
    throw std::invalid_argument("unknown command '" + c.command + "'");
  for (const auto& key : set_keys(c))
    if (!kUniversalKeys.count(key) && !allowed->second.count(key))
      throw std::invalid_argument("'" + key + "' does not apply to " + c.command);

  if (c.matrix) matrix_kind_from_string(*c.matrix);
  if (c.signal) signal_mode_from_string(*c.signal);
  if (c.gaussian_scaling && *c.gaussian_scaling != "unit" && *c.gaussian_scaling != "raw" &&
      *c.gaussian_scaling != "orth")
    throw std::invalid_argument("gaussian_scaling must be 'unit', 'raw' or 'orth'");
  if (c.n && *c.n < 1) throw std::invalid_argument("n must be >= 1");
  if (c.m && *c.m < 1) throw std::invalid_argument("m must be >= 1");
  if (c.kappa && *c.kappa < 0) throw std::invalid_argument("kappa must be >= 0");
  if (c.n && c.m && *c.m > *c.n) throw std::invalid_argument("m must not exceed n");
  if (c.n && c.kappa && *c.kappa > *c.n) throw std::invalid_argument("kappa must not exceed n");
  if (c.mu) positive("mu", *c.mu);
  if (c.delta) positive("delta", *c.delta);
  if (c.tol) positive("tol", *c.tol);
  if (c.kick_tol && !(*c.kick_tol >= 0.0)) throw std::invalid_argument("kick_tol must be >= 0");
  if (c.max_iters && *c.max_iters == 0) throw std::invalid_argument("max_iters must be >= 1");
  if (c.trials && *c.trials == 0) throw std::invalid_argument("trials must be >= 1");
  if (c.instances && *c.instances == 0) throw std::invalid_argument("instances must be >= 1");
  if (c.sigma && !(*c.sigma >= 0.0 && std::isfinite(*c.sigma)))
    throw std::invalid_argument("sigma must be >= 0");
  if (c.snr && !std::isfinite(*c.snr)) throw std::invalid_argument("snr must be finite");
  if (c.sigma && c.snr) throw std::invalid_argument("give either sigma or snr, not both");
  if (c.fractions) {
    if (c.fractions->empty()) throw std::invalid_argument("fractions must not be empty");
    for (const double fr : *c.fractions)
      if (!(fr > 0.0 && fr <= 1.0)) throw std::invalid_argument("fractions must lie in (0, 1]");
  }
  if (c.preset) select_presets(*c.preset);
  if (c.formats) {
    if (c.formats->empty()) throw std::invalid_argument("formats must not be empty");
    for (const auto& f : *c.formats)
      if (f != "csv" && f != "json") throw std::invalid_argument("unknown format '" + f + "'");
  }

  if (c.command == "solve") {
    if (c.operator_file.has_value() != c.rhs_file.has_value())
      throw std::invalid_argument("--operator and --rhs must be given together");
    if (c.operator_file) {
      for (const char* key : {"matrix", "n", "m", "kappa", "signal", "gaussian_scaling", "snr"})
        if (set_keys(c).count(key))
          throw std::invalid_argument(std::string("'") + key +
                                      "' conflicts with an operator file");
    }
    if (c.stop) {
      if (*c.stop != "rel" && *c.stop != "std" && *c.stop != "none")
        throw std::invalid_argument("stop must be rel, std or none");
      if (*c.stop == "std" && !c.sigma && !c.snr)
        throw std::invalid_argument("stop=std needs sigma or snr");
      if (*c.stop != "rel" && c.tol)
        throw std::invalid_argument("tol only applies to stop=rel");
    }
  }
  if (c.command == "dynrange" && c.n && c.m && c.kappa && *c.kappa > *c.n)
    throw std::invalid_argument("kappa must not exceed n");
}

std::filesystem::path output_dir(const RunConfig& c) {
  if (c.out_dir) return *c.out_dir;
  if (const char* env = std::getenv("LBREG_OUT_DIR"); env && *env) return env;
  return "lbreg_out";
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse recovery by linearized Bregman iteration with kicking", "lbreg"};
  app.require_subcommand(1);

  RunConfig flags;
  std::optional<std::string> config_path;
  std::optional<std::string> delta_text;
  std::optional<std::string> out_text;
  std::optional<std::vector<std::string>> formats;
  bool kick_value = true;
  bool subsequence = false;
  std::map<std::string, CLI::Option*> kick_opts;
  CLI::Option* subsequence_opt = nullptr;

  for (const auto& name : kCommands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON run configuration; flags override it");
    sub->add_option("--seed", flags.seed, "Base seed for all randomness");
    sub->add_option("--out", out_text, "Output directory (default $LBREG_OUT_DIR or lbreg_out)");
    sub->add_option("--format", formats, "Output formats: csv, json")->delimiter(',');
    CLI::Option* kick_opt = nullptr;

    if (name == "solve") {
      sub->description("Solve one generated instance or a given operator and right-hand side");
      sub->add_option("--matrix", flags.matrix, "gaussian or dct");
      sub->add_option("--n", flags.n, "Signal length");
      sub->add_option("--m", flags.m, "Number of measurements");
      sub->add_option("--kappa", flags.kappa, "Number of nonzeros");
      sub->add_option("--signal", flags.signal, "uniform or dynrange");
      sub->add_option("--scaling", flags.gaussian_scaling, "Gaussian matrix scaling: orth (default), unit or raw");
      add_solver_options(sub, flags, delta_text, kick_value, kick_opt, true);
      sub->add_option("--stop", flags.stop, "Stopping rule: rel, std or none");
      sub->add_option("--tol", flags.tol, "Relative residual tolerance");
      sub->add_option("--sigma", flags.sigma, "Noise standard deviation");
      sub->add_option("--snr", flags.snr, "Target SNR in dB; sets sigma");
      sub->add_option("--kick-tol", flags.kick_tol, "Stagnation threshold for kicking (default 1e-12, exact; 0.1 is much faster)");
      sub->add_option("--operator", flags.operator_file, "Operator file: CSV matrix or JSON spec");
      sub->add_option("--rhs", flags.rhs_file, "Right-hand side CSV");
    } else if (name == "table1" || name == "table2") {
      sub->description(name == "table1" ? "Noise-free recovery benchmark"
                                        : "Noisy recovery benchmark");
      sub->add_option("--preset", flags.preset, "all, a kind, kind-n or a full preset name");
      sub->add_option("--trials", flags.trials, "Trials per configuration");
      sub->add_option("--threads", flags.threads, "Worker threads (0: all cores)");
      sub->add_option("--scaling", flags.gaussian_scaling, "Gaussian matrix scaling: orth (default), unit or raw");
      add_solver_options(sub, flags, delta_text, kick_value, kick_opt, false);
      sub->add_option("--kick-tol", flags.kick_tol, "Stagnation threshold for kicking");
      if (name == "table1")
        sub->add_option("--tol", flags.tol, "Relative residual tolerance");
      else
        sub->add_option("--snr", flags.snr, "Target SNR in dB");
    } else if (name == "dynrange") {
      sub->description("Recovery of a signal spanning many orders of magnitude");
      sub->add_option("--n", flags.n, "Signal length");
      sub->add_option("--m", flags.m, "Number of measurements");
      sub->add_option("--kappa", flags.kappa, "Number of nonzeros");
      sub->add_option("--tol", flags.tol, "Relative residual tolerance");
      sub->add_option("--snr", flags.snr, "Target SNR in dB (noise-free if absent)");
      add_solver_options(sub, flags, delta_text, kick_value, kick_opt, false);
      sub->add_option("--kick-tol", flags.kick_tol, "Stagnation threshold for kicking");
    } else if (name == "sinusoid") {
      sub->description("Frequency recovery of a two-tone signal from random samples");
      sub->add_option("--n", flags.n, "Signal length");
      sub->add_option("--fractions", flags.fractions, "Sample fractions")->delimiter(',');
      sub->add_option("--sigma", flags.sigma, "Noise standard deviation");
      sub->add_option("--snr", flags.snr, "Target SNR in dB");
      sub->add_option("--trials", flags.trials, "Trials per fraction");
      sub->add_option("--threads", flags.threads, "Worker threads (0: all cores)");
      add_solver_options(sub, flags, delta_text, kick_value, kick_opt, false);
      sub->add_option("--kick-tol", flags.kick_tol, "Stagnation threshold for kicking");
    } else if (name == "verify") {
      sub->description("Check the solver against the brute-force oracle");
      sub->add_option("--instances", flags.instances, "Number of random instances");
      sub->add_option("--tol", flags.tol, "Solver relative residual tolerance");
      sub->add_option("--max-iters", flags.max_iters, "Iteration cap");
      sub->add_option("--kick-tol", flags.kick_tol, "Stagnation threshold for kicking in both checks");
      subsequence_opt =
          sub->add_flag("--subsequence", subsequence, "Also check kicked against plain runs");
    }
    if (kick_opt) kick_opts[name] = kick_opt;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    flags.command = app.get_subcommands().front()->get_name();
    if (const auto it = kick_opts.find(flags.command); it != kick_opts.end() && it->second->count())
      flags.kick = kick_value;
    if (subsequence_opt && subsequence_opt->count()) flags.subsequence = subsequence;
    if (delta_text && *delta_text != "auto") {
      std::size_t used = 0;
      double d = 0.0;
      try {
        d = std::stod(*delta_text, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != delta_text->size())
        throw std::invalid_argument("--delta must be a number or 'auto'");
      flags.delta = d;
    }
    if (out_text) flags.out_dir = *out_text;
    if (formats) flags.formats = std::set<std::string>(formats->begin(), formats->end());

    RunConfig config;
    config.command = flags.command;
    if (config_path) apply_config_json(json::parse(io::read_text(*config_path)), config);
    merge(config, flags);
    // An explicit --delta auto overrides a numeric delta from the file.
    if (delta_text && *delta_text == "auto") config.delta.reset();
    validate(config);

    const std::filesystem::path dir = output_dir(config);
    std::filesystem::create_directories(dir);
    if (config.command == "solve") return cmd_solve(config, dir, out);
    if (config.command == "table1" || config.command == "table2") return cmd_table(config, dir, out);
    if (config.command == "dynrange") return cmd_dynrange(config, dir, out);
    if (config.command == "sinusoid") return cmd_sinusoid(config, dir, out);
    return cmd_verify(config, dir, out);
  } catch (const std::exception& e) {
    err << "lbreg: error: " << e.what() << "\n";
    return 1;
  }
}

int run_cli(int argc, const char* const* argv) { return run_cli(argc, argv, std::cout, std::cerr); }

}  // namespace lbreg::cli
