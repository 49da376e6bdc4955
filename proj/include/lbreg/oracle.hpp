#pragma once

#include <cstddef>
#include <vector>

#include "lbreg/types.hpp"

namespace lbreg {

// Brute-force reference solvers for small dense problems. Everything here is
// independent of the iterative solver: candidates come from enumerating sign
// patterns and solving the equality-constrained problem on each face.

inline constexpr Index kOracleMaxColumns = 12;

struct SignPattern {
  std::vector<int> signs;  // entries in {-1, 0, +1}

  static SignPattern of(const RealVector& x);
  std::vector<Index> support() const;
  bool operator==(const SignPattern&) const = default;
};

struct RegularizedBpReport {
  RealVector u;
  double objective = 0.0;
  SignPattern pattern;
  // Patterns whose face minimizer has exactly the pattern's signs.
  std::size_t candidates = 0;
  // Candidates that also pass the dual check |(A^T lambda)_i| <= mu off the
  // support with the minimum-norm multiplier.
  std::size_t kkt_accepted = 0;
  // Stationarity plus feasibility residual of the returned point.
  double kkt_residual = 0.0;
  double feasibility_residual = 0.0;
};

// argmin { mu ||u||_1 + ||u||^2 / (2 delta) : A u = f }, by enumerating all
// 3^n sign patterns and keeping the best sign-consistent face minimizer.
RegularizedBpReport oracle_regularized_bp_report(const RealMatrix& a, const RealVector& f,
                                                 double mu, double delta);
RealVector oracle_regularized_bp(const RealMatrix& a, const RealVector& f, double mu,
                                 double delta);

// Smallest ||u||_1 subject to A u = f, from all basic solutions.
double oracle_bp_min_l1_value(const RealMatrix& a, const RealVector& f);

// Minimum-l2 point of the basis pursuit solution set.
RealVector oracle_bp_min_l2(const RealMatrix& a, const RealVector& f);

struct MuLimitReport {
  RealVector u1;
  std::vector<double> mus;
  std::vector<double> norms;      // ||u*_mu||
  std::vector<double> distances;  // ||u*_mu - u1||
  bool norm_bound_ok = false;     // ||u*_mu|| <= ||u1|| for every mu
  bool monotone_ok = false;       // distances non-increasing in mu
  bool converged_ok = false;      // last distance below tolerance

  bool passed() const { return norm_bound_ok && monotone_ok && converged_ok; }
};

MuLimitReport check_mu_limit(const RealMatrix& a, const RealVector& f,
                             const std::vector<double>& mu_sequence, double delta = 1.0,
                             double tol = 1e-6);

struct StateSnapshot {
  RealVector u;
  RealVector v;
};

// ||a - b|| <= rel_tol * max(||a||, ||b||) on both u and v.
bool states_match(const StateSnapshot& a, const StateSnapshot& b, double rel_tol);

// Streaming form of the subsequence check so that long reference runs need
// not be stored: feed the reference states in order; each is matched greedily
// against the next pending target state (equal indices allowed).
class SubsequenceMatcher {
 public:
  SubsequenceMatcher(std::vector<StateSnapshot> targets, double rel_tol);

  void feed(const StateSnapshot& reference);
  bool complete() const { return next_ == targets_.size(); }
  std::size_t matched() const { return next_; }
  std::size_t fed() const { return fed_; }
  // Reference index at which each matched target was found.
  const std::vector<std::size_t>& positions() const { return positions_; }

 private:
  std::vector<StateSnapshot> targets_;
  double rel_tol_;
  std::size_t next_ = 0;
  std::size_t fed_ = 0;
  std::vector<std::size_t> positions_;
};

// True iff every state of `kicked` matches some state of `unkicked` at
// non-decreasing indices.
bool subsequence_check(const std::vector<StateSnapshot>& kicked,
                       const std::vector<StateSnapshot>& unkicked, double rel_tol);

}  // namespace lbreg
