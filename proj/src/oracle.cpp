#include "lbreg/oracle.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include <Eigen/QR>

namespace lbreg {

namespace {

constexpr double kPivotThreshold = 1e-12;
constexpr double kConsistencyTol = 1e-9;

void check_problem(const RealMatrix& a, const RealVector& f) {
  if (a.rows() == 0 || a.cols() == 0) throw std::invalid_argument("oracle: empty matrix");
  if (a.cols() > kOracleMaxColumns)
    throw std::invalid_argument("oracle: n = " + std::to_string(a.cols()) +
                                " exceeds the enumeration bound");
  if (f.size() != a.rows()) throw std::invalid_argument("oracle: f length does not match A");
}

RealMatrix gather_columns(const RealMatrix& a, const std::vector<Index>& cols) {
  RealMatrix out(a.rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Index>(j)) = a.col(cols[j]);
  return out;
}

struct LeastNorm {
  RealVector x;
  Index rank = 0;
};

// Minimum-norm solution of B x = h; empty if the system is inconsistent.
std::optional<LeastNorm> least_norm_solve(const RealMatrix& b, const RealVector& h) {
  Eigen::CompleteOrthogonalDecomposition<RealMatrix> cod(b);
  cod.setThreshold(kPivotThreshold);
  LeastNorm out;
  out.x = cod.solve(h);
  out.rank = cod.rank();
  const double scale = std::max(1.0, h.norm());
  if ((b * out.x - h).norm() > kConsistencyTol * scale) return std::nullopt;
  return out;
}

// Calls fn(pattern) for every vector in {-1, 0, 1}^n.
template <typename Fn>
void for_each_pattern(Index n, Fn&& fn) {
  std::vector<int> signs(static_cast<std::size_t>(n), -1);
  while (true) {
    fn(signs);
    Index i = 0;
    while (i < n && signs[i] == 1) signs[i++] = -1;
    if (i == n) return;
    ++signs[i];
  }
}

std::vector<Index> support_of(const std::vector<int>& signs) {
  std::vector<Index> s;
  for (std::size_t i = 0; i < signs.size(); ++i)
    if (signs[i] != 0) s.push_back(static_cast<Index>(i));
  return s;
}

bool signs_consistent(const RealVector& x, const std::vector<Index>& support,
                      const std::vector<int>& signs) {
  for (std::size_t j = 0; j < support.size(); ++j)
    if (!(signs[support[j]] * x[static_cast<Index>(j)] > 0.0)) return false;
  return true;
}

}  // namespace

SignPattern SignPattern::of(const RealVector& x) {
  SignPattern p;
  p.signs.resize(static_cast<std::size_t>(x.size()));
  for (Index i = 0; i < x.size(); ++i) p.signs[i] = (x[i] > 0.0) - (x[i] < 0.0);
  return p;
}

std::vector<Index> SignPattern::support() const { return support_of(signs); }

RegularizedBpReport oracle_regularized_bp_report(const RealMatrix& a, const RealVector& f,
                                                 double mu, double delta) {
  check_problem(a, f);
  if (!(mu > 0.0) || !(delta > 0.0)) throw std::invalid_argument("oracle: mu, delta must be > 0");
  const Index n = a.cols();

  RegularizedBpReport best;
  best.objective = std::numeric_limits<double>::infinity();

  for_each_pattern(n, [&](const std::vector<int>& signs) {
    const std::vector<Index> support = support_of(signs);
    RealVector u = RealVector::Zero(n);
    RealVector lambda;
    if (support.empty()) {
      if (f.norm() > kConsistencyTol * std::max(1.0, f.norm())) return;
      lambda = RealVector::Zero(a.rows());
    } else {
      // min ||x + delta mu sigma||^2 s.t. B x = f; substitute y = x + delta mu sigma.
      const RealMatrix b = gather_columns(a, support);
      RealVector shift(static_cast<Index>(support.size()));
      for (std::size_t j = 0; j < support.size(); ++j)
        shift[static_cast<Index>(j)] = delta * mu * signs[support[j]];
      const auto y = least_norm_solve(b, f + b * shift);
      if (!y) return;
      const RealVector x = y->x - shift;
      if (!signs_consistent(x, support, signs)) return;
      for (std::size_t j = 0; j < support.size(); ++j) u[support[j]] = x[static_cast<Index>(j)];
      // Stationarity on the support: B^T lambda = x / delta + mu sigma = y / delta.
      Eigen::CompleteOrthogonalDecomposition<RealMatrix> cod(b.transpose());
      cod.setThreshold(kPivotThreshold);
      lambda = cod.solve(y->x / delta);
    }

    ++best.candidates;
    bool dual_ok = true;
    const RealVector correlation = a.transpose() * lambda;
    for (Index i = 0; i < n; ++i)
      if (signs[i] == 0 && std::abs(correlation[i]) > mu * (1.0 + 1e-9)) dual_ok = false;
    if (dual_ok) ++best.kkt_accepted;

    const double objective = mu * u.lpNorm<1>() + u.squaredNorm() / (2.0 * delta);
    if (objective < best.objective) {
      best.objective = objective;
      best.u = u;
      best.pattern.signs = signs;
      RealVector stationarity = u / delta - correlation;
      for (Index i = 0; i < n; ++i)
        if (signs[i] != 0) stationarity[i] += mu * signs[i];
        else stationarity[i] = 0.0;
      best.kkt_residual = stationarity.norm();
      best.feasibility_residual = (a * u - f).norm();
    }
  });

  if (best.candidates == 0) throw std::runtime_error("oracle: A u = f is infeasible");
  return best;
}

RealVector oracle_regularized_bp(const RealMatrix& a, const RealVector& f, double mu,
                                 double delta) {
  return oracle_regularized_bp_report(a, f, mu, delta).u;
}

double oracle_bp_min_l1_value(const RealMatrix& a, const RealVector& f) {
  check_problem(a, f);
  const Index n = a.cols();
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    std::vector<Index> support;
    for (Index i = 0; i < n; ++i)
      if (mask & (std::uint64_t{1} << i)) support.push_back(i);
    if (static_cast<Index>(support.size()) > a.rows()) continue;
    if (support.empty()) {
      if (f.norm() <= kConsistencyTol * std::max(1.0, f.norm())) best = std::min(best, 0.0);
      continue;
    }
    const RealMatrix b = gather_columns(a, support);
    const auto x = least_norm_solve(b, f);
    // Basic solutions only: columns must be independent.
    if (!x || x->rank != static_cast<Index>(support.size())) continue;
    best = std::min(best, x->x.lpNorm<1>());
  }
  if (!std::isfinite(best)) throw std::runtime_error("oracle: A u = f is infeasible");
  return best;
}

RealVector oracle_bp_min_l2(const RealMatrix& a, const RealVector& f) {
  const double l1 = oracle_bp_min_l1_value(a, f);
  const Index n = a.cols();
  if (l1 == 0.0) return RealVector::Zero(n);

  // The optimal face: minimize ||x||^2 over {A_T x = f, sigma_T^T x = l1}
  // restricted to faces whose minimizer keeps the pattern's signs.
  std::optional<RealVector> best;
  double best_sq = std::numeric_limits<double>::infinity();
  for_each_pattern(n, [&](const std::vector<int>& signs) {
    const std::vector<Index> support = support_of(signs);
    if (support.empty()) return;
    const auto t = static_cast<Index>(support.size());
    RealMatrix b(a.rows() + 1, t);
    b.topRows(a.rows()) = gather_columns(a, support);
    for (Index j = 0; j < t; ++j) b(a.rows(), j) = signs[support[j]];
    RealVector h(a.rows() + 1);
    h.head(a.rows()) = f;
    h[a.rows()] = l1;
    const auto x = least_norm_solve(b, h);
    if (!x || !signs_consistent(x->x, support, signs)) return;
    const double sq = x->x.squaredNorm();
    if (sq < best_sq) {
      best_sq = sq;
      RealVector u = RealVector::Zero(n);
      for (Index j = 0; j < t; ++j) u[support[j]] = x->x[j];
      best = u;
    }
  });
  if (!best) throw std::runtime_error("oracle: empty optimal face");
  return *best;
}

MuLimitReport check_mu_limit(const RealMatrix& a, const RealVector& f,
                             const std::vector<double>& mu_sequence, double delta, double tol) {
  if (mu_sequence.empty()) throw std::invalid_argument("check_mu_limit: empty mu sequence");
  for (std::size_t i = 1; i < mu_sequence.size(); ++i)
    if (!(mu_sequence[i] > mu_sequence[i - 1]))
      throw std::invalid_argument("check_mu_limit: mu sequence must be increasing");

  MuLimitReport report;
  report.u1 = oracle_bp_min_l2(a, f);
  report.mus = mu_sequence;
  const double u1_norm = report.u1.norm();
  const double slack = 1e-9 * std::max(1.0, u1_norm);
  for (const double mu : mu_sequence) {
    const RealVector u = oracle_regularized_bp(a, f, mu, delta);
    report.norms.push_back(u.norm());
    report.distances.push_back((u - report.u1).norm());
  }
  report.norm_bound_ok = true;
  for (const double nrm : report.norms)
    if (nrm > u1_norm + slack) report.norm_bound_ok = false;
  report.monotone_ok = true;
  for (std::size_t i = 1; i < report.distances.size(); ++i)
    if (report.distances[i] > report.distances[i - 1] + slack) report.monotone_ok = false;
  report.converged_ok = report.distances.back() <= tol * std::max(1.0, u1_norm);
  return report;
}

namespace {

bool close_rel(const RealVector& a, const RealVector& b, double rel_tol) {
  if (a.size() != b.size()) return false;
  const double scale = std::max(a.norm(), b.norm());
  return (a - b).norm() <= rel_tol * scale;
}

}  // namespace

bool states_match(const StateSnapshot& a, const StateSnapshot& b, double rel_tol) {
  return close_rel(a.u, b.u, rel_tol) && close_rel(a.v, b.v, rel_tol);
}

SubsequenceMatcher::SubsequenceMatcher(std::vector<StateSnapshot> targets, double rel_tol)
    : targets_(std::move(targets)), rel_tol_(rel_tol) {}

void SubsequenceMatcher::feed(const StateSnapshot& reference) {
  while (next_ < targets_.size() && states_match(targets_[next_], reference, rel_tol_)) {
    positions_.push_back(fed_);
    ++next_;
  }
  ++fed_;
}

bool subsequence_check(const std::vector<StateSnapshot>& kicked,
                       const std::vector<StateSnapshot>& unkicked, double rel_tol) {
  SubsequenceMatcher matcher(kicked, rel_tol);
  for (const auto& s : unkicked) {
    matcher.feed(s);
    if (matcher.complete()) break;
  }
  return matcher.complete();
}

}  // namespace lbreg
