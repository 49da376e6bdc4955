#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lbreg/linop.hpp"
#include "lbreg/types.hpp"

namespace lbreg {

// ---------------------------------------------------------------------------
// Soft thresholding
// ---------------------------------------------------------------------------

inline double shrink(double x, double mu) {
  if (x > mu) return x - mu;
  if (x < -mu) return x + mu;
  return 0.0;
}

// Magnitude shrinkage that preserves phase.
inline Complex shrink_complex(Complex z, double mu) {
  const double r = std::abs(z);
  if (r <= mu) return Complex(0.0, 0.0);
  return z * ((r - mu) / r);
}

inline double shrink_scalar(double x, double mu) { return shrink(x, mu); }
inline Complex shrink_scalar(Complex z, double mu) { return shrink_complex(z, mu); }

template <typename Scalar>
Vector<Scalar> shrink(const Vector<Scalar>& x, double mu) {
  Vector<Scalar> out(x.size());
  for (Index i = 0; i < x.size(); ++i) out[i] = shrink_scalar(x[i], mu);
  return out;
}

// ---------------------------------------------------------------------------
// Parameters and stopping rules
// ---------------------------------------------------------------------------

struct RelResidual {
  double tol = 1e-5;
};
struct StdResidual {
  double sigma = 0.0;
};
struct MaxItersOnly {};

using StoppingRule = std::variant<RelResidual, StdResidual, MaxItersOnly>;

enum class StopReason { RelResidual, StdResidual, MaxIters };

std::string to_string(StopReason reason);
StopReason stop_reason_from_string(const std::string& name);

inline constexpr double kExactKickTol = 1e-12;
inline constexpr double kFastKickTol = 0.1;

struct SolveParams {
  double mu = 1.0;
  // Step scale; empty means "auto": 1 for orthonormal-row operators and
  // 1 / ||A A^T|| (power-iteration estimate) otherwise.
  std::optional<double> delta;
  bool kick_enabled = true;
  // Stagnation test: the increment g = A^T (f - A u) must be constant to this
  // relative tolerance, with g ~ 0 on the support, for kick_patience
  // consecutive iterations (a step that leaves u unchanged always counts).
  // A kick replays s plain steps with the current g on the zero set only, so
  // a loose tolerance drops the small support part of g and shifts the limit
  // slightly off the regularized minimizer. The default kicks only at exact
  // stagnation; kFastKickTol trades that exactness for speed.
  double kick_tol = kExactKickTol;
  std::size_t kick_patience = 2;
  std::size_t max_iters = 10000;
  StoppingRule stopping = RelResidual{1e-5};
  // Full residual recomputation period; bounds drift of the cached f - Au.
  std::size_t residual_refresh = 50;
  // Known ||A A^T||, skips the estimate in solve().
  std::optional<double> spectral_norm_sq;
};

void validate(const SolveParams& params);

// Resolves the auto step rule for a given operator.
double auto_delta(const LinearOperator& op);

// ---------------------------------------------------------------------------
// State and results
// ---------------------------------------------------------------------------

template <typename Scalar>
struct SolverState {
  Vector<Scalar> u;         // current iterate, u = delta * shrink(v, mu)
  Vector<Scalar> v;         // accumulated A^T residuals
  Vector<Scalar> residual;  // cached f - A u
  std::size_t k = 0;        // loop iterations (a kick counts as one)
  std::size_t steps = 0;    // equivalent plain iterations (a kick counts as s)
  std::size_t stagnation_count = 0;
  std::size_t kicks = 0;

  static SolverState zero(Index n, const Vector<Scalar>& f) {
    SolverState s;
    s.u = Vector<Scalar>::Zero(n);
    s.v = Vector<Scalar>::Zero(n);
    s.residual = f;
    return s;
  }
};

struct IterationRecord {
  std::size_t k = 0;
  std::size_t steps = 0;
  double rel_residual = 0.0;
  double residual_norm = 0.0;
  double du_inf = 0.0;
  double du_norm = 0.0;
  // ||r_new||^2 - ||r_old||^2 evaluated as ||A du||^2 - 2 Re<r_old, A du>,
  // which keeps its relative accuracy when the change is tiny.
  double residual_sq_change = 0.0;
  bool kicked = false;
  bool pattern_changed = false;
};

template <typename Scalar>
struct SolveResultT {
  Vector<Scalar> u_final;
  std::size_t iterations = 0;
  std::size_t steps = 0;
  std::size_t kicks_applied = 0;
  StopReason stop_reason = StopReason::MaxIters;
  std::vector<IterationRecord> history;
  double wall_time = 0.0;
  double delta = 0.0;
  double initial_residual_norm = 0.0;
};

using SolveResult = SolveResultT<double>;
using ComplexSolveResult = SolveResultT<Complex>;

// Called with the initial state and after every iteration.
template <typename Scalar>
using StateObserver = std::function<void(const SolverState<Scalar>&)>;

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// Population standard deviation of the entries (complex: of the moduli of
// deviations from the complex mean).
template <typename Scalar>
double residual_std(const Vector<Scalar>& r);

template <typename Scalar>
std::optional<StopReason> check_stop(const StoppingRule& rule, const Vector<Scalar>& f,
                                     const Vector<Scalar>& residual, std::size_t k,
                                     std::size_t max_iters);

template <typename Scalar>
bool should_stop(const StoppingRule& rule, const Vector<Scalar>& f, const Vector<Scalar>& residual,
                 std::size_t k, std::size_t max_iters) {
  return check_stop(rule, f, residual, k, max_iters).has_value();
}

// One linearized Bregman step:
//   v <- v + A^T (f - A u),   u <- delta * shrink(v, mu).
template <typename Scalar>
IterationRecord lb_step(SolverState<Scalar>& state, const LinearOperator& op,
                        const Vector<Scalar>& f, double mu, double delta,
                        std::size_t residual_refresh = 50);

struct KickPlan {
  std::size_t s = 1;
  std::vector<Index> zero_set;     // I0: u_i == 0
  std::vector<Index> support_set;  // I1
};

// Number of plain steps until the first coordinate of v on the zero set leaves
// [-mu, mu] when advanced along g. Empty when the zero set is empty or g
// vanishes on it (no coordinate ever crosses).
template <typename Scalar>
std::optional<KickPlan> compute_kick(const SolverState<Scalar>& state, const Vector<Scalar>& g,
                                     double mu);

// v_i += s g_i on I0, v unchanged on I1, then u <- delta * shrink(v, mu).
// Residual is recomputed from scratch.
template <typename Scalar>
IterationRecord apply_kick(SolverState<Scalar>& state, const LinearOperator& op,
                           const Vector<Scalar>& f, const Vector<Scalar>& g, const KickPlan& plan,
                           double mu, double delta);

template <typename Scalar>
SolveResultT<Scalar> solve(const LinearOperator& op, const Vector<Scalar>& f,
                           const SolveParams& params, const StateObserver<Scalar>& observer = {});

// Iterations where u moved but ||A u - f|| did not strictly decrease.
template <typename Scalar>
std::size_t monotonicity_violations(const SolveResultT<Scalar>& result);

}  // namespace lbreg
