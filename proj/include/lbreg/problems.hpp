#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lbreg/linop.hpp"
#include "lbreg/types.hpp"

namespace lbreg {

enum class MatrixKind { Gaussian, Dct };
enum class SignalMode { Uniform, DynRange };

std::string to_string(MatrixKind kind);
MatrixKind matrix_kind_from_string(const std::string& name);
std::string to_string(SignalMode mode);
SignalMode signal_mode_from_string(const std::string& name);

// Gaussian operators are generated with N(0,1) entries. UnitSpectral rescales
// them by 1/sqrt(||A A^T||) so that mu = 1, delta = 1 behaves as it does for
// the orthonormal DCT rows; the constraint set {u : A u = f} is unchanged.
// OrthonormalRows whitens the rows and then scales them so that
// A A^T = gaussian_gram * I. With the automatic delta = 1/gaussian_gram this is
// the same iteration as orthonormal rows with mu multiplied by 1/gaussian_gram.
enum class GaussianScaling { Raw, UnitSpectral, OrthonormalRows };

struct ProblemConfig {
  MatrixKind kind = MatrixKind::Gaussian;
  Index n = 1000;
  Index m = 300;
  Index kappa = 50;
  SignalMode mode = SignalMode::Uniform;
  bool dynrange_signed = true;
  GaussianScaling scaling = GaussianScaling::OrthonormalRows;
  double gaussian_gram = 1.0 / 3.0;
  Seed seed = 1;
};

void validate(const ProblemConfig& config);

struct ProblemInstance {
  LinearOperator op;
  RealVector u_bar;
  RealVector f_clean;
  RealVector f_obs;
  RealVector noise;  // f_obs - f_clean
  double sigma = 0.0;
  double snr_db = 0.0;  // +inf when noise-free
  Seed seed = 0;
  Index kappa = 0;
  // ||A A^T|| as known at construction (1 for orthonormal rows).
  double spectral_norm_sq = 1.0;
};

// kappa distinct positions, uniformly chosen. Uniform values come from
// U(-1, 1); DynRange values are U(0, 1) * 10^j with j uniform on {0, ..., 10},
// with a random sign unless `signed_values` is false.
RealVector gen_sparse_signal(Index n, Index kappa, SignalMode mode, Seed seed,
                             bool signed_values = true);

// Distinct indices drawn uniformly without replacement, returned sorted.
std::vector<Index> random_subset(Index n, Index count, Seed seed);

ProblemInstance gen_instance(const ProblemConfig& config);

// Returns a copy with f_obs = f_clean + N(0, sigma^2) noise.
ProblemInstance add_noise(const ProblemInstance& instance, double sigma, Seed seed);

// 20 log10(||u_bar|| / ||noise||); +inf for zero noise. The two vectors may
// have different lengths.
double snr_db(const RealVector& u_bar, const RealVector& noise);

// sigma whose expected noise norm over `count` samples gives the target SNR.
double sigma_for_snr(const RealVector& u_bar, Index count, double target_snr_db);

struct SinusoidParams {
  double a = 0.0;
  double b = 0.0;
  Index k1 = 0;
  Index k2 = 0;
};

struct SinusoidInstance {
  Index n = 0;
  SinusoidParams params;
  RealVector u_bar_time;
  RealVector noise_time;
  std::vector<Index> sample_indices;  // sorted
  RealVector f_obs;                   // (u_bar + noise)(I)
  double sigma = 0.0;
  double snr_db = 0.0;
  Seed seed = 0;
};

// u(t) = a sin(2 pi k1 t / n) + b cos(2 pi k2 t / n), t = 0..n-1
RealVector sinusoid_signal(Index n, const SinusoidParams& params);

SinusoidInstance make_sinusoid_instance(Index n, const SinusoidParams& params, double fraction,
                                        double sigma, Seed seed);

// Draws a, b ~ U(-1, 1) and k1, k2 uniform on {0, ..., n-1}.
SinusoidInstance gen_sinusoid_instance(Index n, double fraction, double sigma, Seed seed);

// As above with sigma chosen from the drawn signal to hit a target SNR.
SinusoidInstance gen_sinusoid_instance_snr(Index n, double fraction, double target_snr_db,
                                           Seed seed);

// Keeps the `count` largest-magnitude entries (ties: lowest index), zeroes the rest.
ComplexVector postselect_top_spikes(const ComplexVector& x, Index count);

// Indices of the non-negligible unitary DFT coefficients of a real signal.
std::vector<Index> spectrum_support(const RealVector& signal, double rel_tol = 1e-9);

struct Preset {
  MatrixKind kind;
  Index n;
  Index m;
  Index kappa;

  std::string name() const;  // e.g. "dct-4000-2000"
};

// The twelve Table 1 size configurations.
std::vector<Preset> table_presets();

// Selects presets by name. Accepts "all", a kind ("gaussian", "dct"), a
// kind-n prefix ("dct-4000") or a full name ("dct-4000-1327").
std::vector<Preset> select_presets(const std::string& selector);

Seed derive_seed(Seed base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace lbreg
