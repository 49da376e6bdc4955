#include "lbreg/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lbreg::io {

namespace {

std::string fmt(double value, int digits = 10) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, value);
  return buf;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  return out;
}

double parse_double(const std::string& text, const std::filesystem::path& path, std::size_t line) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  std::size_t end = used;
  while (end < text.size() && std::isspace(static_cast<unsigned char>(text[end]))) ++end;
  if (used == 0 || end != text.size())
    throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": bad number '" + text +
                             "'");
  return value;
}

json metric_json(const MetricStats& s) {
  return {{"mean", number(s.mean)}, {"std", number(s.std)}, {"max", number(s.max)}};
}

}  // namespace

json number(double value) { return std::isfinite(value) ? json(value) : json(nullptr); }

json history_json(const std::vector<IterationRecord>& history) {
  json arr = json::array();
  for (const auto& r : history)
    arr.push_back({{"k", r.k},
                   {"steps", r.steps},
                   {"rel_residual", number(r.rel_residual)},
                   {"du_inf", number(r.du_inf)},
                   {"kicked", r.kicked}});
  return arr;
}

std::string history_csv(const std::vector<IterationRecord>& history) {
  std::string out = "k,steps,rel_residual,du_inf,du_norm,kicked,pattern_changed\n";
  for (const auto& r : history) {
    out += std::to_string(r.k) + "," + std::to_string(r.steps) + "," + fmt(r.rel_residual) + "," +
           fmt(r.du_inf) + "," + fmt(r.du_norm) + "," + (r.kicked ? "1" : "0") + "," +
           (r.pattern_changed ? "1" : "0") + "\n";
  }
  return out;
}

json trial_json(const TrialRecord& r) {
  return {{"config", r.config_id},
          {"seed", r.seed},
          {"iterations", r.iterations},
          {"steps", r.steps},
          {"rel_error", number(r.rel_error)},
          {"wall_time", number(r.wall_time)},
          {"snr_db", number(r.snr_db)},
          {"stop_reason", to_string(r.stop_reason)},
          {"kicks", r.kicks},
          {"monotonicity_violations", r.monotonicity_violations}};
}

json stats_json(const AggregateStats& s) {
  return {{"trials", s.trials},
          {"converged", s.converged},
          {"iterations", metric_json(s.iterations)},
          {"rel_error", metric_json(s.rel_error)},
          {"wall_time", metric_json(s.wall_time)},
          {"snr_db", metric_json(s.snr_db)}};
}

json table_json(const std::string& name, const std::vector<ConfigResult>& results) {
  json j;
  j["schema"] = kSchemaVersion;
  j["experiment"] = name;
  json configs = json::array();
  for (const auto& c : results) {
    json trials = json::array();
    for (const auto& t : c.trials) trials.push_back(trial_json(t));
    configs.push_back({{"config", c.preset.name()},
                       {"matrix", to_string(c.preset.kind)},
                       {"n", c.preset.n},
                       {"m", c.preset.m},
                       {"kappa", c.preset.kappa},
                       {"stats", stats_json(c.stats)},
                       {"trials", trials}});
  }
  j["configs"] = configs;
  return j;
}

std::string table_csv(const std::vector<ConfigResult>& results, bool with_snr) {
  std::string out;
  if (with_snr) out += "avg_snr,";
  out +=
      "matrix,n,m,kappa,trials,iter_mean,iter_std,iter_max,err_mean,err_std,err_max,"
      "time_mean,time_std,time_max,converged\n";
  for (const auto& c : results) {
    const auto& s = c.stats;
    if (with_snr) out += fmt(s.snr_db.mean, 4) + ",";
    out += to_string(c.preset.kind) + "," + std::to_string(c.preset.n) + "," +
           std::to_string(c.preset.m) + "," + std::to_string(c.preset.kappa) + "," +
           std::to_string(s.trials) + "," + fmt(s.iterations.mean, 6) + "," +
           fmt(s.iterations.std, 4) + "," + fmt(s.iterations.max, 6) + "," +
           fmt(s.rel_error.mean, 3) + "," + fmt(s.rel_error.std, 3) + "," +
           fmt(s.rel_error.max, 3) + "," + fmt(s.wall_time.mean, 3) + "," +
           fmt(s.wall_time.std, 3) + "," + fmt(s.wall_time.max, 3) + "," +
           std::to_string(s.converged) + "\n";
  }
  return out;
}

json dynrange_json(const DynRangeReport& report) {
  json j;
  j["schema"] = kSchemaVersion;
  j["experiment"] = "dynrange";
  j["trial"] = trial_json(report.record);
  j["sigma"] = number(report.sigma);
  j["dynamic_range"] = number(report.dynamic_range);
  json decades = json::array();
  for (const auto& d : report.decades)
    decades.push_back({{"decade", d.decade}, {"count", d.count}, {"rel_error", number(d.rel_error)}});
  j["decades"] = decades;
  if (const auto floor = well_recovered_from(report.decades, 1e-2))
    j["well_recovered_from_decade"] = *floor;
  else
    j["well_recovered_from_decade"] = nullptr;
  return j;
}

std::string dynrange_history_csv(const DynRangeReport& report) {
  std::string out = "k,steps,rel_residual,rel_error,kicked\n";
  for (std::size_t i = 0; i < report.history.size(); ++i) {
    const auto& r = report.history[i];
    const double err = i < report.error_history.size() ? report.error_history[i] : NAN;
    out += std::to_string(r.k) + "," + std::to_string(r.steps) + "," + fmt(r.rel_residual) + "," +
           fmt(err) + "," + (r.kicked ? "1" : "0") + "\n";
  }
  return out;
}

json sinusoid_json(const SinusoidReport& report) {
  json j;
  j["schema"] = kSchemaVersion;
  j["experiment"] = "sinusoid";
  json summaries = json::array();
  for (const auto& s : report.summaries)
    summaries.push_back({{"fraction", s.fraction},
                         {"trials", s.trials},
                         {"matches", s.matches},
                         {"match_rate", s.match_rate},
                         {"snr_db", metric_json(s.snr_db)},
                         {"magnitude_error", metric_json(s.magnitude_error)},
                         {"physical_error", metric_json(s.physical_error)}});
  j["summaries"] = summaries;
  json trials = json::array();
  for (const auto& t : report.trials)
    trials.push_back({{"fraction", t.fraction},
                      {"seed", t.seed},
                      {"a", t.params.a},
                      {"b", t.params.b},
                      {"k1", t.params.k1},
                      {"k2", t.params.k2},
                      {"sigma", number(t.sigma)},
                      {"snr_db", number(t.snr_db)},
                      {"iterations", t.iterations},
                      {"stop_reason", to_string(t.stop_reason)},
                      {"kicks", t.kicks},
                      {"frequencies_match", t.frequencies_match},
                      {"magnitude_error", number(t.magnitude_error)},
                      {"physical_error", number(t.physical_error)},
                      {"wall_time", number(t.wall_time)}});
  j["trials"] = trials;
  return j;
}

std::string sinusoid_csv(const SinusoidReport& report) {
  std::string out =
      "fraction,trials,matches,match_rate,snr_mean,magnitude_error_mean,physical_error_mean\n";
  for (const auto& s : report.summaries)
    out += fmt(s.fraction, 4) + "," + std::to_string(s.trials) + "," + std::to_string(s.matches) +
           "," + fmt(s.match_rate, 4) + "," + fmt(s.snr_db.mean, 5) + "," +
           fmt(s.magnitude_error.mean, 4) + "," + fmt(s.physical_error.mean, 4) + "\n";
  return out;
}

json problem_config_json(const ProblemConfig& c) {
  return {{"matrix", to_string(c.kind)},
          {"n", c.n},
          {"m", c.m},
          {"kappa", c.kappa},
          {"signal", to_string(c.mode)},
          {"dynrange_signed", c.dynrange_signed},
          {"gaussian_scaling", c.scaling == GaussianScaling::Raw               ? "raw"
                               : c.scaling == GaussianScaling::OrthonormalRows ? "orth"
                                                                               : "unit"},
          {"gaussian_gram", c.gaussian_gram},
          {"seed", c.seed}};
}

ProblemConfig problem_config_from_json(const json& j) {
  ProblemConfig c;
  if (j.contains("matrix")) c.kind = matrix_kind_from_string(j.at("matrix").get<std::string>());
  if (j.contains("n")) c.n = j.at("n").get<Index>();
  if (j.contains("m")) c.m = j.at("m").get<Index>();
  if (j.contains("kappa")) c.kappa = j.at("kappa").get<Index>();
  if (j.contains("signal")) c.mode = signal_mode_from_string(j.at("signal").get<std::string>());
  if (j.contains("dynrange_signed")) c.dynrange_signed = j.at("dynrange_signed").get<bool>();
  if (j.contains("gaussian_scaling")) {
    const auto s = j.at("gaussian_scaling").get<std::string>();
    if (s == "raw") c.scaling = GaussianScaling::Raw;
    else if (s == "unit") c.scaling = GaussianScaling::UnitSpectral;
    else if (s == "orth") c.scaling = GaussianScaling::OrthonormalRows;
    else throw std::invalid_argument("gaussian_scaling must be raw, unit or orth");
  }
  if (j.contains("gaussian_gram")) c.gaussian_gram = j.at("gaussian_gram").get<double>();
  if (j.contains("seed")) c.seed = j.at("seed").get<Seed>();
  validate(c);
  return c;
}

json operator_spec_json(const LinearOperator& op) {
  if (op.kind() == OperatorKind::DenseReal)
    throw std::invalid_argument("dense operators are serialized as CSV matrices");
  std::vector<Index> rows(op.row_indices().begin(), op.row_indices().end());
  return {{"kind", to_string(op.kind())}, {"n", op.cols()}, {"rows", rows}};
}

LinearOperator operator_from_spec(const json& j) {
  const OperatorKind kind = operator_kind_from_string(j.at("kind").get<std::string>());
  const auto n = j.at("n").get<Index>();
  auto rows = j.at("rows").get<std::vector<Index>>();
  if (kind == OperatorKind::PartialDct) return make_partial_dct(n, std::move(rows));
  if (kind == OperatorKind::PartialInverseFourier)
    return make_partial_inverse_fourier(n, std::move(rows));
  throw std::invalid_argument("operator spec: dense kind needs a matrix file");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_matrix_csv(const std::filesystem::path& path, const RealMatrix& matrix) {
  std::string out;
  for (Index i = 0; i < matrix.rows(); ++i) {
    for (Index j = 0; j < matrix.cols(); ++j) {
      if (j) out += ",";
      out += fmt(matrix(i, j), 17);
    }
    out += "\n";
  }
  write_text(path, out);
}

RealMatrix read_matrix_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    for (const auto& field : split_fields(line)) row.push_back(parse_double(field, path, lineno));
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": ragged row in matrix file");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path.string() + ": empty matrix file");
  RealMatrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  return m;
}

RealVector read_vector_csv(const std::filesystem::path& path) {
  const RealMatrix m = read_matrix_csv(path);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw std::runtime_error(path.string() + ": expected a single row or column");
}

void write_vector_csv(const std::filesystem::path& path, const RealVector& vector) {
  write_matrix_csv(path, vector);
}

LinearOperator load_operator(const std::filesystem::path& path) {
  if (path.extension() == ".json") return operator_from_spec(json::parse(read_text(path)));
  return LinearOperator::dense(read_matrix_csv(path));
}

}  // namespace lbreg::io
