#include <gtest/gtest.h>

#include <cmath>

#include "lbreg/problems.hpp"
#include "lbreg/solver.hpp"
#include "test_support.hpp"

using namespace lbreg;

namespace {

RealVector vec(std::initializer_list<double> xs) {
  RealVector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

LinearOperator row(std::initializer_list<double> xs) {
  return LinearOperator::dense(vec(xs).transpose());
}

// Random dense instance with a consistent right-hand side.
struct SmallInstance {
  LinearOperator op;
  RealVector f;
};

SmallInstance random_instance(testgen::Rng& rng, Index m, Index n) {
  RealMatrix a = rng.normal_matrix(m, n);
  RealVector u(n);
  u.setZero();
  for (Index i = 0; i < std::max<Index>(1, n / 4); ++i)
    u[rng.integer(0, n - 1)] = rng.uniform(-1.0, 1.0);
  RealVector f = a * u;
  if (f.norm() == 0.0) f = rng.normal_vector(m);
  return {LinearOperator::dense(a), f};
}

}  // namespace

TEST(Shrink, PositiveBranch) { EXPECT_DOUBLE_EQ(shrink(2.0, 1.0), 1.0); }
TEST(Shrink, DeadZone) { EXPECT_DOUBLE_EQ(shrink(0.3, 1.0), 0.0); }
TEST(Shrink, NegativeBranch) { EXPECT_DOUBLE_EQ(shrink(-1.5, 1.0), -0.5); }
TEST(Shrink, BoundaryIsZero) {
  EXPECT_DOUBLE_EQ(shrink(1.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(shrink(-1.0, 1.0), 0.0);
}
TEST(Shrink, Vectorized) {
  const RealVector out = shrink(vec({2.0, 0.3, -1.5}), 1.0);
  EXPECT_EQ(out, vec({1.0, 0.0, -0.5}));
}

TEST(ShrinkComplex, ScalesMagnitude) {
  const Complex out = shrink_complex({3.0, 4.0}, 2.0);
  EXPECT_NEAR(out.real(), 1.8, 1e-15);
  EXPECT_NEAR(out.imag(), 2.4, 1e-15);
  EXPECT_NEAR(std::abs(out), 3.0, 1e-15);
  EXPECT_NEAR(std::arg(out), std::arg(Complex(3.0, 4.0)), 1e-15);
}
TEST(ShrinkComplex, InsideDisk) { EXPECT_EQ(shrink_complex({0.0, 0.5}, 1.0), Complex(0.0, 0.0)); }
TEST(ShrinkComplex, ZeroThresholdIsIdentity) {
  const Complex z = std::polar(2.5, 0.7);
  EXPECT_EQ(shrink_complex(z, 0.0), z);
}

TEST(LbStep, HandIterationScalar) {
  const auto op = row({1.0});
  const RealVector f = vec({2.0});
  auto s = SolverState<double>::zero(1, f);
  lb_step(s, op, f, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(s.v[0], 2.0);
  EXPECT_DOUBLE_EQ(s.u[0], 1.0);
  lb_step(s, op, f, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(s.v[0], 3.0);
  EXPECT_DOUBLE_EQ(s.u[0], 2.0);
  const auto rec = lb_step(s, op, f, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(s.v[0], 3.0);
  EXPECT_DOUBLE_EQ(s.u[0], 2.0);
  EXPECT_EQ(rec.du_inf, 0.0);
  EXPECT_EQ(s.k, 3u);
  EXPECT_DOUBLE_EQ(s.residual[0], 0.0);
}

TEST(LbStep, ZeroResidualIsFixedPoint) {
  const auto op = row({1.0, 1.0});
  const RealVector f = vec({2.0});
  auto s = SolverState<double>::zero(2, f);
  s.v = vec({2.0, 2.0});
  s.u = vec({1.0, 1.0});
  s.residual.setZero();
  const RealVector v0 = s.v, u0 = s.u;
  lb_step(s, op, f, 1.0, 1.0);
  EXPECT_EQ(s.v, v0);
  EXPECT_EQ(s.u, u0);
}

TEST(LbStep, NonFiniteThrows) {
  const auto op = row({1.0});
  const RealVector f = vec({std::numeric_limits<double>::infinity()});
  auto s = SolverState<double>::zero(1, f);
  EXPECT_THROW(lb_step(s, op, f, 1.0, 1.0), NumericalError);
}

TEST(Solve, SymmetricTwoVariable) {
  // ||A A^T|| = 2 here, so delta = 1 sits on the stability boundary; the
  // automatic delta = 1/2 has the same symmetric limit.
  SolveParams p;
  p.stopping = RelResidual{1e-8};
  p.max_iters = 100000;
  const auto r = solve<double>(row({1.0, 1.0}), vec({2.0}), p);
  EXPECT_EQ(r.stop_reason, StopReason::RelResidual);
  EXPECT_NEAR(r.u_final[0], 1.0, 1e-7);
  EXPECT_NEAR(r.u_final[1], 1.0, 1e-7);
  EXPECT_EQ(r.history.size(), r.iterations);
}

TEST(Solve, RejectsLargeDelta) {
  SolveParams p;
  p.delta = 2.0;
  EXPECT_THROW(solve<double>(row({1.0}), vec({1.0}), p), std::invalid_argument);
  p.delta = 1.999;
  EXPECT_NO_THROW(solve<double>(row({1.0}), vec({1.0}), p));
}

TEST(Solve, RejectsBadParams) {
  SolveParams p;
  p.mu = 0.0;
  EXPECT_THROW(solve<double>(row({1.0}), vec({1.0}), p), std::invalid_argument);
  p = SolveParams{};
  p.stopping = RelResidual{0.0};
  EXPECT_THROW(solve<double>(row({1.0}), vec({1.0}), p), std::invalid_argument);
  p = SolveParams{};
  EXPECT_THROW(solve<double>(row({1.0, 2.0}), vec({1.0, 2.0}), p), std::invalid_argument);
}

TEST(Solve, AutoDeltaUsesSpectralNorm) {
  const auto op = LinearOperator::dense(RealMatrix::Identity(2, 3) * 2.0);
  SolveParams p;
  p.max_iters = 1;
  const auto r = solve<double>(op, vec({1.0, 1.0}), p);
  EXPECT_NEAR(r.delta, 0.25, 1e-4);
  const auto dct = make_partial_dct(8, {1, 2});
  EXPECT_DOUBLE_EQ(solve<double>(dct, vec({1.0, 1.0}), p).delta, 1.0);
}

TEST(Solve, MaxItersReported) {
  SolveParams p;
  p.max_iters = 3;
  p.kick_enabled = false;
  p.stopping = RelResidual{1e-14};
  RealMatrix a(2, 3);
  a << 1.0, 2.0, 0.5, -1.0, 0.3, 2.0;
  const auto r = solve<double>(LinearOperator::dense(a), vec({3.7, -1.2}), p);
  EXPECT_EQ(r.stop_reason, StopReason::MaxIters);
  EXPECT_EQ(r.iterations, 3u);
}

TEST(ShouldStop, ZeroResidualStopsEveryRule) {
  const RealVector f = vec({1.0, 2.0});
  const RealVector r = RealVector::Zero(2);
  EXPECT_TRUE(should_stop(StoppingRule{RelResidual{1e-5}}, f, r, 0, 10));
  EXPECT_TRUE(should_stop(StoppingRule{StdResidual{0.0}}, f, r, 0, 10));
  EXPECT_TRUE(should_stop(StoppingRule{MaxItersOnly{}}, f, r, 0, 10));
}

TEST(ShouldStop, StrictRelativeInequality) {
  const RealVector f = vec({1.0});
  EXPECT_FALSE(should_stop(StoppingRule{RelResidual{1e-5}}, f, vec({2e-5}), 0, 10));
  EXPECT_FALSE(should_stop(StoppingRule{RelResidual{1e-5}}, f, vec({1e-5}), 0, 10));
  EXPECT_TRUE(should_stop(StoppingRule{RelResidual{1e-5}}, f, vec({0.9e-5}), 0, 10));
}

TEST(ShouldStop, StdIgnoresMean) {
  const RealVector f = vec({1.0, 1.0, 1.0});
  EXPECT_TRUE(should_stop(StoppingRule{StdResidual{0.1}}, f, vec({5.0, 5.0, 5.0}), 0, 10));
  EXPECT_NEAR(residual_std<double>(vec({1.0, 3.0})), 1.0, 1e-15);  // population form
}

TEST(ShouldStop, MaxItersFiresForAllRules) {
  const RealVector f = vec({1.0});
  const RealVector r = vec({0.5});
  EXPECT_EQ(check_stop(StoppingRule{RelResidual{1e-5}}, f, r, 10, 10), StopReason::MaxIters);
  EXPECT_EQ(check_stop(StoppingRule{StdResidual{0.0}}, f, r, 10, 10), StopReason::MaxIters);
  EXPECT_FALSE(check_stop(StoppingRule{MaxItersOnly{}}, f, r, 9, 10).has_value());
}

TEST(ShouldStop, ZeroDataWithRelativeRuleThrows) {
  EXPECT_THROW(should_stop(StoppingRule{RelResidual{1e-5}}, vec({0.0}), vec({0.0}), 0, 10),
               std::invalid_argument);
}

TEST(StopReason, NamesRoundTrip) {
  for (auto r : {StopReason::RelResidual, StopReason::StdResidual, StopReason::MaxIters})
    EXPECT_EQ(stop_reason_from_string(to_string(r)), r);
}

// Coupling u = delta * shrink(v, mu) and p = v - u / delta in [-mu, mu], after
// every plain step and every kick.
TEST(Property, CouplingAndSubgradientBound) {
  testgen::Rng rng(101);
  for (int trial = 0; trial < 25; ++trial) {
    const Index n = rng.integer(4, 30);
    const Index m = rng.integer(1, n - 1);
    const auto inst = random_instance(rng, m, n);
    SolveParams p;
    p.mu = rng.uniform(0.5, 20.0);
    p.max_iters = 400;
    p.stopping = RelResidual{1e-9};
    std::size_t checked = 0;
    solve<double>(inst.op, inst.f, p, [&](const SolverState<double>& s) {
      const double delta = 1.0 / spectral_norm_sq_estimate(inst.op).value;
      const RealVector coupled = delta * shrink(s.v, p.mu);
      ASSERT_LE((coupled - s.u).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + s.u.cwiseAbs().maxCoeff()));
      for (Index i = 0; i < n; ++i) {
        ASSERT_EQ(s.u[i] == 0.0, std::abs(s.v[i]) <= p.mu);
        ASSERT_LE(std::abs(s.v[i] - s.u[i] / delta), p.mu * (1.0 + 1e-12));
      }
      ++checked;
    });
    EXPECT_GT(checked, 1u);
  }
}

// Residual norm strictly decreases whenever u moves.
TEST(Property, ResidualMonotone) {
  testgen::Rng rng(202);
  for (int trial = 0; trial < 40; ++trial) {
    const Index n = rng.integer(3, 40);
    const Index m = rng.integer(1, n - 1);
    const auto inst = random_instance(rng, m, n);
    SolveParams p;
    p.mu = std::pow(10.0, rng.uniform(-1.0, 2.0));
    p.delta = rng.uniform(0.2, 1.9) / spectral_norm_sq_estimate(inst.op, 1e-12, 5000).value;
    p.kick_enabled = rng.unit() < 0.5;
    p.max_iters = 2000;
    p.stopping = RelResidual{1e-10};
    const auto r = solve<double>(inst.op, inst.f, p);
    EXPECT_EQ(monotonicity_violations(r), 0u) << "trial " << trial;
  }
}

// Reported convergence implies the residual bound actually holds.
TEST(Property, ConvergenceMeansFeasible) {
  testgen::Rng rng(303);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = rng.integer(4, 40);
    const Index m = rng.integer(1, n - 1);
    const auto inst = random_instance(rng, m, n);
    SolveParams p;
    p.mu = rng.uniform(1.0, 10.0);
    p.max_iters = 50000;
    p.stopping = RelResidual{1e-7};
    const auto r = solve<double>(inst.op, inst.f, p);
    if (r.stop_reason != StopReason::RelResidual) continue;
    const RealVector res = inst.f - inst.op.apply(r.u_final);
    EXPECT_LE(res.norm() / inst.f.norm(), 1e-7 * (1.0 + 1e-9));
  }
}

// Within a long constant-pattern run, ||du|| eventually decays geometrically.
TEST(Property, GeometricDecayInsidePattern) {
  testgen::Rng rng(404);
  std::size_t runs_checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = rng.integer(10, 40);
    const Index m = rng.integer(3, n - 2);
    const auto inst = random_instance(rng, m, n);
    SolveParams p;
    p.mu = rng.uniform(1.0, 5.0);
    p.kick_enabled = false;
    p.max_iters = 3000;
    p.stopping = RelResidual{1e-9};
    const auto r = solve<double>(inst.op, inst.f, p);
    const auto& h = r.history;
    std::size_t start = 0;
    for (std::size_t k = 1; k <= h.size(); ++k) {
      if (k < h.size() && !h[k].pattern_changed) continue;
      // Run h[start .. k-1] keeps one pattern after its first step.
      const std::size_t len = k - start;
      if (len >= 15) {
        for (std::size_t j = start + 6; j < k; ++j) {
          if (h[j - 1].du_norm < 1e-13) break;  // at rounding level
          EXPECT_LE(h[j].du_norm / h[j - 1].du_norm, 0.999) << "trial " << trial << " k " << j;
        }
        ++runs_checked;
      }
      start = k;
    }
  }
  EXPECT_GT(runs_checked, 5u);
}

TEST(Complex, SolvesPartialFourierInstance) {
  testgen::Rng rng(5);
  const Index n = 64;
  const auto op = make_partial_inverse_fourier(n, rng.subset(n, 40));
  ComplexVector x = ComplexVector::Zero(n);
  x[3] = {1.0, 0.5};
  x[40] = {-0.7, 0.2};
  const ComplexVector f = op.apply(x);
  SolveParams p;
  p.mu = 5.0;
  p.max_iters = 20000;
  p.stopping = RelResidual{1e-9};
  const auto r = solve<Complex>(op, f, p);
  EXPECT_EQ(r.stop_reason, StopReason::RelResidual);
  EXPECT_LT((r.u_final - x).norm() / x.norm(), 1e-3);
  EXPECT_EQ(monotonicity_violations(r), 0u);
  EXPECT_THROW(solve<double>(op, RealVector(RealVector::Ones(40)), p), std::invalid_argument);
}
