#include "lbreg/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "lbreg/oracle.hpp"

namespace lbreg {

MetricStats aggregate(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("aggregate: no values");
  MetricStats s;
  const auto count = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / count;
  s.max = *std::max_element(values.begin(), values.end());
  const double lo = *std::min_element(values.begin(), values.end());
  // All-equal inputs (including all +inf for noise-free SNR) have zero spread.
  if (values.size() > 1 && lo != s.max) {
    double acc = 0.0;
    for (const double v : values) acc += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(acc / (count - 1.0));
  }
  return s;
}

AggregateStats aggregate(std::span<const TrialRecord> records) {
  if (records.empty()) throw std::invalid_argument("aggregate: no records");
  std::vector<double> iters, errs, times, snrs;
  AggregateStats stats;
  stats.trials = records.size();
  for (const auto& r : records) {
    iters.push_back(static_cast<double>(r.iterations));
    errs.push_back(r.rel_error);
    times.push_back(r.wall_time);
    snrs.push_back(r.snr_db);
    if (r.stop_reason != StopReason::MaxIters) ++stats.converged;
  }
  stats.iterations = aggregate(iters);
  stats.rel_error = aggregate(errs);
  stats.wall_time = aggregate(times);
  stats.snr_db = aggregate(snrs);
  return stats;
}

Seed trial_seed(Seed seed0, const std::string& config_id, std::size_t trial) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (const unsigned char c : config_id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return derive_seed(seed0, h, trial);
}

void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
}

namespace {

double relative_error(const RealVector& u, const RealVector& u_bar) {
  const double denom = u_bar.norm();
  return denom > 0.0 ? (u - u_bar).norm() / denom : (u - u_bar).norm();
}

TrialRecord run_instance_trial(const Preset& preset, Seed seed, SolveParams params,
                               std::optional<double> target_snr_db, GaussianScaling scaling) {
  ProblemConfig config{.kind = preset.kind,
                       .n = preset.n,
                       .m = preset.m,
                       .kappa = preset.kappa,
                       .mode = SignalMode::Uniform,
                       .scaling = scaling,
                       .seed = seed};
  ProblemInstance inst = gen_instance(config);
  if (target_snr_db) {
    const double sigma = sigma_for_snr(inst.u_bar, preset.m, *target_snr_db);
    inst = add_noise(inst, sigma, derive_seed(seed, 7));
    params.stopping = StdResidual{sigma};
  }
  params.spectral_norm_sq = inst.spectral_norm_sq;
  const SolveResult result = solve(inst.op, inst.f_obs, params);

  TrialRecord rec;
  rec.config_id = preset.name();
  rec.seed = seed;
  rec.iterations = result.iterations;
  rec.steps = result.steps;
  rec.rel_error = relative_error(result.u_final, inst.u_bar);
  rec.wall_time = result.wall_time;
  rec.snr_db = inst.snr_db;
  rec.stop_reason = result.stop_reason;
  rec.kicks = result.kicks_applied;
  rec.monotonicity_violations = monotonicity_violations(result);
  return rec;
}

std::vector<ConfigResult> run_table(std::span<const Preset> presets, std::size_t trials,
                                    Seed seed0, unsigned threads, const SolveParams& params,
                                    std::optional<double> target_snr_db,
                                    GaussianScaling scaling) {
  if (trials == 0) throw std::invalid_argument("trials must be >= 1");
  std::vector<ConfigResult> out;
  for (const auto& p : presets) out.push_back({p, std::vector<TrialRecord>(trials), {}});

  parallel_for(presets.size() * trials, threads, [&](std::size_t job) {
    ConfigResult& cfg = out[job / trials];
    const std::size_t t = job % trials;
    cfg.trials[t] = run_instance_trial(cfg.preset, trial_seed(seed0, cfg.preset.name(), t),
                                       params, target_snr_db, scaling);
  });
  for (auto& cfg : out) cfg.stats = aggregate(cfg.trials);
  return out;
}

}  // namespace

std::vector<ConfigResult> run_table1(std::span<const Preset> presets, const Table1Options& o) {
  SolveParams params;
  params.mu = o.mu;
  params.kick_enabled = o.kick_enabled;
  params.kick_tol = o.kick_tol;
  params.max_iters = o.max_iters;
  params.stopping = RelResidual{o.tol};
  return run_table(presets, o.trials, o.seed0, o.threads, params, std::nullopt, o.scaling);
}

std::vector<ConfigResult> run_table2(std::span<const Preset> presets, const Table2Options& o) {
  SolveParams params;
  params.mu = o.mu;
  params.kick_enabled = o.kick_enabled;
  params.kick_tol = o.kick_tol;
  params.max_iters = o.max_iters;
  return run_table(presets, o.trials, o.seed0, o.threads, params, o.target_snr_db, o.scaling);
}

DynRangeReport run_dynrange(const DynRangeOptions& o) {
  ProblemConfig config{.kind = MatrixKind::Dct,
                       .n = o.n,
                       .m = o.m,
                       .kappa = o.kappa,
                       .mode = SignalMode::DynRange,
                       .dynrange_signed = o.signed_values,
                       .seed = o.seed};
  ProblemInstance inst = gen_instance(config);

  SolveParams params;
  params.mu = o.mu;
  params.kick_enabled = o.kick_enabled;
  params.kick_tol = o.kick_tol;
  params.max_iters = o.max_iters;
  params.stopping = RelResidual{o.tol};
  if (o.target_snr_db) {
    const double sigma = sigma_for_snr(inst.u_bar, o.m, *o.target_snr_db);
    inst = add_noise(inst, sigma, derive_seed(o.seed, 7));
    params.stopping = StdResidual{sigma};
  }

  DynRangeReport report;
  report.u_bar = inst.u_bar;
  report.sigma = inst.sigma;
  const double ubar_norm = inst.u_bar.norm();
  bool initial = true;
  const SolveResult result =
      solve<double>(inst.op, inst.f_obs, params, [&](const SolverState<double>& s) {
        if (initial) {
          initial = false;
          return;
        }
        report.error_history.push_back((s.u - inst.u_bar).norm() / ubar_norm);
      });

  report.u = result.u_final;
  report.history = result.history;
  TrialRecord& rec = report.record;
  rec.config_id = "dynrange-" + std::to_string(o.n) + "-" + std::to_string(o.m);
  rec.seed = o.seed;
  rec.iterations = result.iterations;
  rec.steps = result.steps;
  rec.rel_error = relative_error(result.u_final, inst.u_bar);
  rec.wall_time = result.wall_time;
  rec.snr_db = inst.snr_db;
  rec.stop_reason = result.stop_reason;
  rec.kicks = result.kicks_applied;
  rec.monotonicity_violations = monotonicity_violations(result);

  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  std::map<int, std::pair<double, double>> by_decade;  // decade -> (err^2, ref^2)
  std::map<int, std::size_t> counts;
  for (Index i = 0; i < inst.u_bar.size(); ++i) {
    const double mag = std::abs(inst.u_bar[i]);
    if (mag == 0.0) continue;
    lo = std::min(lo, mag);
    hi = std::max(hi, mag);
    const int decade = static_cast<int>(std::floor(std::log10(mag)));
    const double diff = result.u_final[i] - inst.u_bar[i];
    by_decade[decade].first += diff * diff;
    by_decade[decade].second += mag * mag;
    ++counts[decade];
  }
  report.dynamic_range = hi / lo;
  for (const auto& [decade, acc] : by_decade)
    report.decades.push_back({decade, counts[decade], std::sqrt(acc.first / acc.second)});
  return report;
}

std::optional<int> well_recovered_from(const std::vector<DecadeError>& decades, double threshold) {
  std::optional<int> floor;
  for (auto it = decades.rbegin(); it != decades.rend(); ++it) {
    if (it->rel_error > threshold) break;
    floor = it->decade;
  }
  return floor;
}

SinusoidTrial run_sinusoid_trial(const SinusoidInstance& inst, const SinusoidOptions& o) {
  const LinearOperator op = make_partial_inverse_fourier(inst.n, inst.sample_indices);
  SolveParams params;
  params.mu = o.mu;
  params.delta = 1.0;
  params.kick_enabled = o.kick_enabled;
  params.kick_tol = o.kick_tol;
  params.max_iters = o.max_iters;
  if (inst.sigma > 0.0)
    params.stopping = StdResidual{inst.sigma};
  else
    params.stopping = RelResidual{1e-12};

  const ComplexVector f = inst.f_obs.cast<Complex>();
  const ComplexSolveResult result = solve(op, f, params);

  SinusoidTrial trial;
  trial.seed = inst.seed;
  trial.params = inst.params;
  trial.sigma = inst.sigma;
  trial.snr_db = inst.snr_db;
  trial.iterations = result.iterations;
  trial.stop_reason = result.stop_reason;
  trial.kicks = result.kicks_applied;
  trial.monotonicity_violations = monotonicity_violations(result);
  trial.wall_time = result.wall_time;

  const ComplexVector selected = postselect_top_spikes(result.u_final, o.spikes);
  const ComplexVector truth = dft_unitary(inst.u_bar_time.cast<Complex>());
  const std::vector<Index> true_support = spectrum_support(inst.u_bar_time);

  std::vector<Index> order(static_cast<std::size_t>(selected.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return std::abs(result.u_final[a]) > std::abs(result.u_final[b]);
  });
  std::vector<Index> top(order.begin(),
                         order.begin() + static_cast<std::ptrdiff_t>(true_support.size()));
  std::sort(top.begin(), top.end());
  trial.frequencies_match = !true_support.empty() &&
                            static_cast<Index>(true_support.size()) <= o.spikes &&
                            top == true_support && std::abs(result.u_final[top.back()]) > 0.0;

  double num = 0.0, den = 0.0;
  for (const Index k : true_support) {
    const double d = std::abs(selected[k]) - std::abs(truth[k]);
    num += d * d;
    den += std::norm(truth[k]);
  }
  trial.magnitude_error = den > 0.0 ? std::sqrt(num / den) : 0.0;

  const RealVector u_phys = idft_unitary(selected).real();
  trial.physical_error = relative_error(u_phys, inst.u_bar_time);
  return trial;
}

SinusoidReport run_sinusoid(const SinusoidOptions& o) {
  if (o.trials == 0) throw std::invalid_argument("trials must be >= 1");
  if (o.fractions.empty()) throw std::invalid_argument("at least one sample fraction is required");
  SinusoidReport report;
  report.trials.resize(o.fractions.size() * o.trials);
  parallel_for(report.trials.size(), o.threads, [&](std::size_t job) {
    const double fraction = o.fractions[job / o.trials];
    const std::size_t t = job % o.trials;
    const Seed seed = trial_seed(o.seed0, "sinusoid-" + std::to_string(o.n), t);
    const SinusoidInstance inst =
        o.sigma ? gen_sinusoid_instance(o.n, fraction, *o.sigma, seed)
                : gen_sinusoid_instance_snr(o.n, fraction, o.target_snr_db, seed);
    SinusoidTrial trial = run_sinusoid_trial(inst, o);
    trial.fraction = fraction;
    report.trials[job] = trial;
  });

  for (std::size_t fi = 0; fi < o.fractions.size(); ++fi) {
    SinusoidFractionSummary s;
    s.fraction = o.fractions[fi];
    std::vector<double> snr, mag, phys;
    for (std::size_t t = 0; t < o.trials; ++t) {
      const SinusoidTrial& tr = report.trials[fi * o.trials + t];
      ++s.trials;
      s.matches += tr.frequencies_match;
      snr.push_back(tr.snr_db);
      mag.push_back(tr.magnitude_error);
      phys.push_back(tr.physical_error);
    }
    s.match_rate = static_cast<double>(s.matches) / static_cast<double>(s.trials);
    s.snr_db = aggregate(snr);
    s.magnitude_error = aggregate(mag);
    s.physical_error = aggregate(phys);
    report.summaries.push_back(s);
  }
  return report;
}

}  // namespace lbreg

namespace lbreg {

OracleSuiteReport run_oracle_suite(const OracleSuiteOptions& o) {
  if (o.instances == 0) throw std::invalid_argument("instances must be >= 1");
  if (o.mus.empty()) throw std::invalid_argument("at least one mu is required");
  if (o.max_n < 2 || o.max_n > kOracleMaxColumns || o.max_m < 1)
    throw std::invalid_argument("oracle suite: bad size bounds");

  OracleSuiteReport report;
  for (std::size_t i = 0; i < o.instances; ++i) {
    const Seed seed = derive_seed(o.seed, 0x0ac1e, i);
    std::mt19937_64 rng(seed);
    const Index n = std::uniform_int_distribution<Index>(2, o.max_n)(rng);
    const Index m = std::uniform_int_distribution<Index>(1, std::min(o.max_m, n - 1))(rng);
    const LinearOperator op = make_dense_gaussian(m, n, derive_seed(seed, 1));
    std::normal_distribution<double> normal;
    RealVector f(m);
    for (Index r = 0; r < m; ++r) f[r] = normal(rng);
    const double mu = o.mus[i % o.mus.size()];

    SolveParams params;
    params.mu = mu;
    params.max_iters = o.max_iters;
    params.stopping = RelResidual{o.tol};
    params.kick_tol = o.kick_tol;
    const SolveResult result = solve(op, f, params);
    const RegularizedBpReport ref =
        oracle_regularized_bp_report(op.dense_entries(), f, mu, result.delta);

    OracleCase c;
    c.seed = seed;
    c.m = m;
    c.n = n;
    c.mu = mu;
    c.delta = result.delta;
    c.iterations = result.iterations;
    c.stop_reason = result.stop_reason;
    c.deviation = (result.u_final - ref.u).norm() / std::max(ref.u.norm(), 1e-300);
    c.kkt_accepted = ref.kkt_accepted;
    c.monotonicity_violations = monotonicity_violations(result);
    report.max_deviation = std::max(report.max_deviation, c.deviation);
    report.monotonicity_violations += c.monotonicity_violations;
    report.cases.push_back(c);
  }
  return report;
}

KickCheckReport run_kick_check(const KickCheckOptions& o) {
  if (o.instances == 0) throw std::invalid_argument("instances must be >= 1");
  KickCheckReport report;
  for (std::size_t i = 0; i < o.instances; ++i) {
    const Seed seed = derive_seed(o.seed, 0x41c4, i);
    const ProblemInstance inst = gen_instance(
        {.kind = MatrixKind::Gaussian, .n = o.n, .m = o.m, .kappa = o.kappa, .seed = seed});

    SolveParams params;
    params.mu = o.mu;
    params.max_iters = o.max_iters;
    params.stopping = RelResidual{o.tol};
    params.spectral_norm_sq = inst.spectral_norm_sq;
    params.kick_tol = o.kick_tol;

    std::vector<StateSnapshot> kicked_states;
    const SolveResult kicked = solve<double>(
        inst.op, inst.f_obs, params,
        [&](const SolverState<double>& s) { kicked_states.push_back({s.u, s.v}); });

    KickCheckCase c;
    c.seed = seed;
    c.kicked_iterations = kicked.iterations;
    c.kicked_steps = kicked.steps;
    c.kicks = kicked.kicks_applied;
    c.states = kicked_states.size();
    c.monotonicity_violations = monotonicity_violations(kicked);

    // The plain run must pass through the kicked run's last state at step
    // `kicked.steps`; a little slack absorbs a stop one iteration apart.
    SolveParams plain_params = params;
    plain_params.kick_enabled = false;
    plain_params.stopping = MaxItersOnly{};
    plain_params.max_iters = kicked.steps + 10;
    SubsequenceMatcher matcher(std::move(kicked_states), o.rel_tol);
    const SolveResult plain = solve<double>(
        inst.op, inst.f_obs, plain_params,
        [&](const SolverState<double>& s) { matcher.feed({s.u, s.v}); });
    c.matched = matcher.matched();
    c.subsequence = matcher.complete();
    c.monotonicity_violations += monotonicity_violations(plain);

    if (inst.f_obs.norm() > 0.0) {
      for (const auto& rec : plain.history) {
        if (rec.rel_residual < o.tol) {
          c.plain_iterations = rec.k;
          break;
        }
      }
    }
    report.cases.push_back(c);
  }
  return report;
}

}  // namespace lbreg
