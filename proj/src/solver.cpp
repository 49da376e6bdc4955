#include "lbreg/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lbreg {

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::RelResidual: return "RelResidual";
    case StopReason::StdResidual: return "StdResidual";
    case StopReason::MaxIters: return "MaxIters";
  }
  return "unknown";
}

StopReason stop_reason_from_string(const std::string& name) {
  if (name == "RelResidual") return StopReason::RelResidual;
  if (name == "StdResidual") return StopReason::StdResidual;
  if (name == "MaxIters") return StopReason::MaxIters;
  throw std::invalid_argument("unknown stop reason '" + name + "'");
}

void validate(const SolveParams& params) {
  if (!(params.mu > 0.0) || !std::isfinite(params.mu))
    throw std::invalid_argument("mu must be a positive finite number");
  if (params.delta && (!(*params.delta > 0.0) || !std::isfinite(*params.delta)))
    throw std::invalid_argument("delta must be a positive finite number");
  if (!(params.kick_tol >= 0.0)) throw std::invalid_argument("kick_tol must be >= 0");
  if (params.kick_patience == 0) throw std::invalid_argument("kick_patience must be >= 1");
  if (params.max_iters == 0) throw std::invalid_argument("max_iters must be >= 1");
  if (const auto* rel = std::get_if<RelResidual>(&params.stopping); rel && !(rel->tol > 0.0))
    throw std::invalid_argument("RelResidual tolerance must be > 0");
  if (const auto* sd = std::get_if<StdResidual>(&params.stopping); sd && !(sd->sigma >= 0.0))
    throw std::invalid_argument("StdResidual sigma must be >= 0");
}

double auto_delta(const LinearOperator& op) {
  if (op.has_orthonormal_rows()) return 1.0;
  return 1.0 / spectral_norm_sq_estimate(op).value;
}

namespace {

template <typename Scalar>
double inf_norm(const Vector<Scalar>& x) {
  return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff();
}

int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

template <typename Scalar>
bool same_pattern(const Vector<Scalar>& a, const Vector<Scalar>& b) {
  for (Index i = 0; i < a.size(); ++i) {
    if constexpr (std::is_same_v<Scalar, double>) {
      if (sign_of(a[i]) != sign_of(b[i])) return false;
    } else {
      if ((a[i] == Scalar(0)) != (b[i] == Scalar(0))) return false;
    }
  }
  return true;
}

template <typename Scalar>
double rel_norm(double value, const Vector<Scalar>& f) {
  const double fn = f.norm();
  return fn > 0.0 ? value / fn : value;
}

template <typename Scalar>
void require_finite(const SolverState<Scalar>& state) {
  if (!state.v.allFinite() || !state.u.allFinite() || !state.residual.allFinite())
    throw NumericalError("non-finite iterate", state.k);
}

// Fills the du-dependent fields of a record; returns A du.
template <typename Scalar>
Vector<Scalar> record_change(IterationRecord& rec, const LinearOperator& op,
                             const Vector<Scalar>& u_old, const Vector<Scalar>& u_new,
                             const Vector<Scalar>& r_old) {
  const Vector<Scalar> du = u_new - u_old;
  rec.du_inf = inf_norm(du);
  rec.du_norm = du.norm();
  rec.pattern_changed = !same_pattern(u_old, u_new);
  if (rec.du_inf == 0.0) {
    rec.residual_sq_change = 0.0;
    return Vector<Scalar>::Zero(r_old.size());
  }
  Vector<Scalar> a_du = op.apply(du);
  rec.residual_sq_change = a_du.squaredNorm() - 2.0 * std::real(r_old.dot(a_du));
  return a_du;
}

}  // namespace

template <typename Scalar>
double residual_std(const Vector<Scalar>& r) {
  if (r.size() == 0) return 0.0;
  const Scalar mean = r.mean();
  double acc = 0.0;
  for (Index i = 0; i < r.size(); ++i) acc += std::norm(r[i] - mean);
  return std::sqrt(acc / static_cast<double>(r.size()));
}

template <typename Scalar>
std::optional<StopReason> check_stop(const StoppingRule& rule, const Vector<Scalar>& f,
                                     const Vector<Scalar>& residual, std::size_t k,
                                     std::size_t max_iters) {
  const double rnorm = residual.norm();
  if (const auto* rel = std::get_if<RelResidual>(&rule)) {
    const double fnorm = f.norm();
    if (fnorm == 0.0) throw std::invalid_argument("RelResidual stopping requires f != 0");
    if (rnorm == 0.0 || rnorm / fnorm < rel->tol) return StopReason::RelResidual;
  } else if (const auto* sd = std::get_if<StdResidual>(&rule)) {
    if (rnorm == 0.0 || residual_std(residual) < sd->sigma) return StopReason::StdResidual;
  } else if (rnorm == 0.0) {
    return StopReason::MaxIters;
  }
  if (k >= max_iters) return StopReason::MaxIters;
  return std::nullopt;
}

namespace {

// The plain step with a precomputed increment g = A^T (f - A u).
template <typename Scalar>
IterationRecord plain_step(SolverState<Scalar>& state, const LinearOperator& op,
                           const Vector<Scalar>& f, const Vector<Scalar>& g, double mu,
                           double delta, std::size_t residual_refresh) {
  IterationRecord rec;
  state.v += g;
  Vector<Scalar> u_new = delta * shrink(state.v, mu);

  const Vector<Scalar> a_du = record_change(rec, op, state.u, u_new, state.residual);
  state.u = std::move(u_new);
  state.residual -= a_du;
  ++state.k;
  ++state.steps;
  if (residual_refresh > 0 && state.k % residual_refresh == 0) state.residual = f - op.apply(state.u);
  require_finite(state);

  rec.k = state.k;
  rec.steps = state.steps;
  rec.residual_norm = state.residual.norm();
  rec.rel_residual = rel_norm(rec.residual_norm, f);
  return rec;
}

// How far the increment is from constant: the change in g since the last
// step, and g on the support (which vanishes once u has settled inside its
// sign pattern), relative to g on the zero set. Infinite when g vanishes on
// the zero set, since no kick is possible then.
template <typename Scalar>
double velocity_drift(const Vector<Scalar>& g, const Vector<Scalar>& g_prev,
                      const Vector<Scalar>& u) {
  double moving = 0.0, scale = 0.0;
  for (Index i = 0; i < g.size(); ++i) {
    moving = std::max(moving, std::abs(g[i] - g_prev[i]));
    if (u[i] == Scalar(0))
      scale = std::max(scale, std::abs(g[i]));
    else
      moving = std::max(moving, std::abs(g[i]));
  }
  return scale > 0.0 ? moving / scale : std::numeric_limits<double>::infinity();
}

}  // namespace

template <typename Scalar>
IterationRecord lb_step(SolverState<Scalar>& state, const LinearOperator& op,
                        const Vector<Scalar>& f, double mu, double delta,
                        std::size_t residual_refresh) {
  const Vector<Scalar> g = op.adjoint(state.residual);
  return plain_step(state, op, f, g, mu, delta, residual_refresh);
}

template <typename Scalar>
std::optional<KickPlan> compute_kick(const SolverState<Scalar>& state, const Vector<Scalar>& g,
                                     double mu) {
  KickPlan plan;
  double best = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < state.u.size(); ++i) {
    if (state.u[i] != Scalar(0)) {
      plan.support_set.push_back(i);
      continue;
    }
    plan.zero_set.push_back(i);
    if (g[i] == Scalar(0)) continue;
    double crossing;
    if constexpr (std::is_same_v<Scalar, double>) {
      crossing = (mu * sign_of(g[i]) - state.v[i]) / g[i];
    } else {
      // Smallest s >= 0 with |v + s g| = mu.
      const double a = std::norm(g[i]);
      const double b = 2.0 * std::real(std::conj(state.v[i]) * g[i]);
      const double c = std::norm(state.v[i]) - mu * mu;
      crossing = (-b + std::sqrt(std::max(0.0, b * b - 4.0 * a * c))) / (2.0 * a);
    }
    best = std::min(best, std::ceil(crossing));
  }
  if (plan.zero_set.empty() || !std::isfinite(best)) return std::nullopt;
  constexpr double cap = 1e15;
  plan.s = static_cast<std::size_t>(std::clamp(best, 1.0, cap));
  return plan;
}

template <typename Scalar>
IterationRecord apply_kick(SolverState<Scalar>& state, const LinearOperator& op,
                           const Vector<Scalar>& f, const Vector<Scalar>& g, const KickPlan& plan,
                           double mu, double delta) {
  if (plan.s < 1) throw std::invalid_argument("apply_kick: step count must be >= 1");
  IterationRecord rec;
  const double s = static_cast<double>(plan.s);
  for (const Index i : plan.zero_set) state.v[i] += s * g[i];
  Vector<Scalar> u_new = delta * shrink(state.v, mu);
  record_change(rec, op, state.u, u_new, state.residual);
  state.u = std::move(u_new);
  state.residual = f - op.apply(state.u);
  ++state.k;
  state.steps += plan.s;
  ++state.kicks;
  require_finite(state);

  rec.k = state.k;
  rec.steps = state.steps;
  rec.kicked = true;
  rec.residual_norm = state.residual.norm();
  rec.rel_residual = rel_norm(rec.residual_norm, f);
  return rec;
}

template <typename Scalar>
SolveResultT<Scalar> solve(const LinearOperator& op, const Vector<Scalar>& f,
                           const SolveParams& params, const StateObserver<Scalar>& observer) {
  validate(params);
  if (f.size() != op.rows())
    throw std::invalid_argument("solve: f has length " + std::to_string(f.size()) +
                                ", operator has " + std::to_string(op.rows()) + " rows");
  constexpr bool complex_scalar = !std::is_same_v<Scalar, double>;
  if (complex_scalar != (op.field() == ScalarField::Complex))
    throw std::invalid_argument("solve: scalar field of f does not match the operator");

  double norm_aat = 1.0;
  if (!op.has_orthonormal_rows())
    norm_aat = params.spectral_norm_sq ? *params.spectral_norm_sq
                                       : spectral_norm_sq_estimate(op).value;
  const double delta = params.delta ? *params.delta : 1.0 / norm_aat;
  if (!(delta * norm_aat < 2.0))
    throw std::invalid_argument("delta * ||A A^T|| must be < 2 (got " +
                                std::to_string(delta * norm_aat) + ")");

  const auto start = std::chrono::steady_clock::now();
  SolveResultT<Scalar> result;
  result.delta = delta;
  result.initial_residual_norm = f.norm();
  const double divergence_bound = 1e6 * std::max(result.initial_residual_norm, 1e-300);

  auto state = SolverState<Scalar>::zero(op.cols(), f);
  if (observer) observer(state);

  // Increment of the previous plain step; empty right after a kick.
  std::optional<Vector<Scalar>> g_prev;
  while (true) {
    if (auto reason = check_stop(params.stopping, f, state.residual, state.k, params.max_iters)) {
      result.stop_reason = *reason;
      break;
    }
    const Vector<Scalar> g = op.adjoint(state.residual);
    // A step that left u bitwise unchanged is stagnant whatever the ratio says;
    // the support increments are then below the resolution of u.
    if (g_prev && (result.history.back().du_inf == 0.0 ||
                   velocity_drift(g, *g_prev, state.u) <= params.kick_tol))
      ++state.stagnation_count;
    else
      state.stagnation_count = 0;

    IterationRecord rec;
    bool stepped = false;
    if (params.kick_enabled && state.stagnation_count >= params.kick_patience) {
      if (auto plan = compute_kick(state, g, params.mu)) {
        rec = apply_kick(state, op, f, g, *plan, params.mu, delta);
        state.stagnation_count = 0;
        g_prev.reset();
        stepped = true;
      }
    }
    if (!stepped) {
      rec = plain_step(state, op, f, g, params.mu, delta, params.residual_refresh);
      g_prev = g;
    }

    if (rec.residual_norm > divergence_bound) throw NumericalError("iteration diverged", state.k);
    result.history.push_back(rec);
    if (observer) observer(state);
  }

  result.u_final = state.u;
  result.iterations = state.k;
  result.steps = state.steps;
  result.kicks_applied = state.kicks;
  result.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

template <typename Scalar>
std::size_t monotonicity_violations(const SolveResultT<Scalar>& result) {
  std::size_t violations = 0;
  for (const auto& rec : result.history)
    if (rec.du_norm > 0.0 && !(rec.residual_sq_change < 0.0)) ++violations;
  return violations;
}

#define LBREG_INSTANTIATE(Scalar)                                                              \
  template double residual_std<Scalar>(const Vector<Scalar>&);                                 \
  template std::optional<StopReason> check_stop<Scalar>(const StoppingRule&,                   \
                                                        const Vector<Scalar>&,                 \
                                                        const Vector<Scalar>&, std::size_t,    \
                                                        std::size_t);                          \
  template IterationRecord lb_step<Scalar>(SolverState<Scalar>&, const LinearOperator&,        \
                                           const Vector<Scalar>&, double, double, std::size_t); \
  template std::optional<KickPlan> compute_kick<Scalar>(const SolverState<Scalar>&,            \
                                                        const Vector<Scalar>&, double);        \
  template IterationRecord apply_kick<Scalar>(SolverState<Scalar>&, const LinearOperator&,     \
                                              const Vector<Scalar>&, const Vector<Scalar>&,    \
                                              const KickPlan&, double, double);                \
  template SolveResultT<Scalar> solve<Scalar>(const LinearOperator&, const Vector<Scalar>&,    \
                                              const SolveParams&, const StateObserver<Scalar>&); \
  template std::size_t monotonicity_violations<Scalar>(const SolveResultT<Scalar>&);

LBREG_INSTANTIATE(double)
LBREG_INSTANTIATE(Complex)

#undef LBREG_INSTANTIATE

}  // namespace lbreg
