#include "lbreg/problems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace lbreg {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<Index> draw_subset(Index n, Index count, std::mt19937_64& rng) {
  std::vector<Index> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Index{0});
  // Partial Fisher-Yates.
  for (Index i = 0; i < count; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(static_cast<std::size_t>(count));
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

Seed derive_seed(Seed base, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(base) ^ a) ^ (b * 0x2545f4914f6cdd1dULL));
}

std::string to_string(MatrixKind kind) {
  return kind == MatrixKind::Gaussian ? "gaussian" : "dct";
}

MatrixKind matrix_kind_from_string(const std::string& name) {
  if (name == "gaussian") return MatrixKind::Gaussian;
  if (name == "dct") return MatrixKind::Dct;
  throw std::invalid_argument("unknown matrix kind '" + name + "' (expected gaussian or dct)");
}

std::string to_string(SignalMode mode) {
  return mode == SignalMode::Uniform ? "uniform" : "dynrange";
}

SignalMode signal_mode_from_string(const std::string& name) {
  if (name == "uniform") return SignalMode::Uniform;
  if (name == "dynrange") return SignalMode::DynRange;
  throw std::invalid_argument("unknown signal mode '" + name + "' (expected uniform or dynrange)");
}

void validate(const ProblemConfig& config) {
  if (config.n <= 0 || config.m <= 0 || config.kappa <= 0)
    throw std::invalid_argument("n, m and kappa must be positive");
  if (config.m > config.n) throw std::invalid_argument("m must not exceed n");
  if (config.kappa > config.n) throw std::invalid_argument("kappa must not exceed n");
  if (!(config.gaussian_gram > 0.0) || !std::isfinite(config.gaussian_gram))
    throw std::invalid_argument("gaussian_gram must be positive");
}

std::vector<Index> random_subset(Index n, Index count, Seed seed) {
  if (count < 0 || count > n) throw std::invalid_argument("random_subset: count outside [0, n]");
  std::mt19937_64 rng(seed);
  return draw_subset(n, count, rng);
}

RealVector gen_sparse_signal(Index n, Index kappa, SignalMode mode, Seed seed,
                             bool signed_values) {
  if (n <= 0) throw std::invalid_argument("gen_sparse_signal: n must be positive");
  if (kappa <= 0 || kappa > n) throw std::invalid_argument("gen_sparse_signal: need 0 < kappa <= n");
  std::mt19937_64 rng(seed);
  const std::vector<Index> support = draw_subset(n, kappa, rng);

  RealVector u = RealVector::Zero(n);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> decade(0, 10);
  std::bernoulli_distribution coin(0.5);
  for (const Index i : support) {
    if (mode == SignalMode::Uniform) {
      u[i] = sym(rng);
    } else {
      double value = unit(rng) * std::pow(10.0, decade(rng));
      if (signed_values && coin(rng)) value = -value;
      u[i] = value;
    }
  }
  return u;
}

ProblemInstance gen_instance(const ProblemConfig& config) {
  validate(config);
  const Seed op_seed = derive_seed(config.seed, 1);
  const Seed signal_seed = derive_seed(config.seed, 2);

  auto op = [&]() -> LinearOperator {
    if (config.kind == MatrixKind::Dct)
      return make_partial_dct(config.n, random_subset(config.n, config.m, op_seed));
    return make_dense_gaussian(config.m, config.n, op_seed);
  }();

  double norm_aat = 1.0;
  if (config.kind == MatrixKind::Gaussian) {
    norm_aat = spectral_norm_sq_estimate(op, 1e-10, 2000).value;
    if (config.scaling == GaussianScaling::UnitSpectral) {
      op = LinearOperator::dense(op.dense_entries() / std::sqrt(norm_aat));
      norm_aat = spectral_norm_sq_estimate(op, 1e-10, 2000).value;
    } else if (config.scaling == GaussianScaling::OrthonormalRows) {
      // A <- (A A^T)^{-1/2} A; same row space, all singular values 1.
      const RealMatrix& a = op.dense_entries();
      Eigen::SelfAdjointEigenSolver<RealMatrix> eig(a * a.transpose());
      const RealMatrix inv_sqrt = eig.eigenvectors() *
                                  eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                                  eig.eigenvectors().transpose();
      op = LinearOperator::dense(std::sqrt(config.gaussian_gram) * (inv_sqrt * a));
      norm_aat = spectral_norm_sq_estimate(op, 1e-10, 2000).value;
    }
  }

  ProblemInstance inst{.op = std::move(op)};
  inst.u_bar = gen_sparse_signal(config.n, config.kappa, config.mode, signal_seed,
                                 config.dynrange_signed);
  inst.f_clean = inst.op.apply(inst.u_bar);
  inst.f_obs = inst.f_clean;
  inst.noise = RealVector::Zero(config.m);
  inst.sigma = 0.0;
  inst.snr_db = std::numeric_limits<double>::infinity();
  inst.seed = config.seed;
  inst.kappa = config.kappa;
  inst.spectral_norm_sq = norm_aat;
  return inst;
}

double snr_db(const RealVector& u_bar, const RealVector& noise) {
  const double nn = noise.norm();
  if (nn == 0.0) return std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(u_bar.norm() / nn);
}

double sigma_for_snr(const RealVector& u_bar, Index count, double target_snr_db) {
  if (count <= 0) throw std::invalid_argument("sigma_for_snr: count must be positive");
  return u_bar.norm() / (std::sqrt(static_cast<double>(count)) * std::pow(10.0, target_snr_db / 20.0));
}

ProblemInstance add_noise(const ProblemInstance& instance, double sigma, Seed seed) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("add_noise: sigma must be >= 0");
  ProblemInstance out = instance;
  out.sigma = sigma;
  out.noise = RealVector::Zero(instance.f_clean.size());
  if (sigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, sigma);
    for (Index i = 0; i < out.noise.size(); ++i) out.noise[i] = normal(rng);
  }
  out.f_obs = out.f_clean + out.noise;
  out.snr_db = snr_db(out.u_bar, out.noise);
  return out;
}

RealVector sinusoid_signal(Index n, const SinusoidParams& p) {
  RealVector u(n);
  const double base = 2.0 * std::numbers::pi / static_cast<double>(n);
  const double alpha = base * static_cast<double>(p.k1);
  const double beta = base * static_cast<double>(p.k2);
  for (Index t = 0; t < n; ++t) {
    const double tt = static_cast<double>(t);
    u[t] = p.a * std::sin(alpha * tt) + p.b * std::cos(beta * tt);
  }
  return u;
}

SinusoidInstance make_sinusoid_instance(Index n, const SinusoidParams& params, double fraction,
                                        double sigma, Seed seed) {
  if (n <= 0) throw std::invalid_argument("sinusoid: n must be positive");
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw std::invalid_argument("sinusoid: fraction must lie in (0, 1]");
  if (!(sigma >= 0.0)) throw std::invalid_argument("sinusoid: sigma must be >= 0");
  if (params.k1 < 0 || params.k1 >= n || params.k2 < 0 || params.k2 >= n)
    throw std::invalid_argument("sinusoid: frequencies must lie in [0, n)");

  SinusoidInstance inst;
  inst.n = n;
  inst.params = params;
  inst.sigma = sigma;
  inst.seed = seed;
  inst.u_bar_time = sinusoid_signal(n, params);
  inst.noise_time = RealVector::Zero(n);
  if (sigma > 0.0) {
    std::mt19937_64 rng(derive_seed(seed, 1));
    std::normal_distribution<double> normal(0.0, sigma);
    for (Index t = 0; t < n; ++t) inst.noise_time[t] = normal(rng);
  }
  const auto count = std::max<Index>(
      1, static_cast<Index>(std::floor(fraction * static_cast<double>(n) + 1e-9)));
  inst.sample_indices = random_subset(n, count, derive_seed(seed, 2));
  inst.f_obs.resize(count);
  for (Index i = 0; i < count; ++i) {
    const Index t = inst.sample_indices[static_cast<std::size_t>(i)];
    inst.f_obs[i] = inst.u_bar_time[t] + inst.noise_time[t];
  }
  inst.snr_db = snr_db(inst.u_bar_time, inst.noise_time);
  return inst;
}

namespace {

SinusoidParams draw_sinusoid_params(Index n, Seed seed) {
  std::mt19937_64 rng(derive_seed(seed, 0));
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  std::uniform_int_distribution<Index> freq(0, n - 1);
  SinusoidParams p;
  p.a = sym(rng);
  p.b = sym(rng);
  p.k1 = freq(rng);
  p.k2 = freq(rng);
  return p;
}

}  // namespace

SinusoidInstance gen_sinusoid_instance(Index n, double fraction, double sigma, Seed seed) {
  if (n <= 0) throw std::invalid_argument("sinusoid: n must be positive");
  return make_sinusoid_instance(n, draw_sinusoid_params(n, seed), fraction, sigma, seed);
}

SinusoidInstance gen_sinusoid_instance_snr(Index n, double fraction, double target_snr_db,
                                           Seed seed) {
  if (n <= 0) throw std::invalid_argument("sinusoid: n must be positive");
  const SinusoidParams p = draw_sinusoid_params(n, seed);
  const double sigma = sigma_for_snr(sinusoid_signal(n, p), n, target_snr_db);
  return make_sinusoid_instance(n, p, fraction, sigma, seed);
}

ComplexVector postselect_top_spikes(const ComplexVector& x, Index count) {
  if (count < 0 || count > x.size())
    throw std::invalid_argument("postselect_top_spikes: count outside [0, n]");
  std::vector<Index> order(static_cast<std::size_t>(x.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return std::abs(x[a]) > std::abs(x[b]); });
  ComplexVector out = ComplexVector::Zero(x.size());
  for (Index i = 0; i < count; ++i) {
    const Index j = order[static_cast<std::size_t>(i)];
    out[j] = x[j];
  }
  return out;
}

std::vector<Index> spectrum_support(const RealVector& signal, double rel_tol) {
  const ComplexVector spectrum = dft_unitary(signal.cast<Complex>());
  const double peak = spectrum.cwiseAbs().maxCoeff();
  std::vector<Index> support;
  if (peak == 0.0) return support;
  for (Index k = 0; k < spectrum.size(); ++k)
    if (std::abs(spectrum[k]) > rel_tol * peak) support.push_back(k);
  return support;
}

std::string Preset::name() const {
  return to_string(kind) + "-" + std::to_string(n) + "-" + std::to_string(m);
}

std::vector<Preset> table_presets() {
  using K = MatrixKind;
  return {
      {K::Gaussian, 1000, 300, 50},    {K::Gaussian, 2000, 600, 100},
      {K::Gaussian, 4000, 1200, 200},  {K::Gaussian, 1000, 156, 20},
      {K::Gaussian, 2000, 312, 40},    {K::Gaussian, 4000, 468, 80},
      {K::Dct, 4000, 2000, 200},       {K::Dct, 20000, 10000, 1000},
      {K::Dct, 50000, 25000, 2500},    {K::Dct, 4000, 1327, 80},
      {K::Dct, 20000, 7923, 400},      {K::Dct, 50000, 21640, 1000},
  };
}

std::vector<Preset> select_presets(const std::string& selector) {
  std::vector<Preset> out;
  for (const auto& p : table_presets()) {
    const std::string name = p.name();
    if (selector == "all" || name == selector || name.rfind(selector + "-", 0) == 0)
      out.push_back(p);
  }
  if (out.empty()) throw std::invalid_argument("no preset matches '" + selector + "'");
  return out;
}

}  // namespace lbreg
