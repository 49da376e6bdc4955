#include <gtest/gtest.h>

#include "lbreg/bench.hpp"
#include "lbreg/oracle.hpp"
#include "lbreg/problems.hpp"
#include "lbreg/solver.hpp"
#include "test_support.hpp"

using namespace lbreg;

// Generated instance -> solver -> exact recovery of the planted signal.
TEST(EndToEnd, DctExactRecovery) {
  for (Seed s = 1; s <= 3; ++s) {
    const auto inst = gen_instance({.kind = MatrixKind::Dct, .n = 2048, .m = 800, .kappa = 40, .seed = s});
    SolveParams p;
    p.stopping = RelResidual{1e-10};
    p.max_iters = 20000;
    const auto r = solve(inst.op, inst.f_obs, p);
    EXPECT_EQ(r.stop_reason, StopReason::RelResidual);
    EXPECT_LT((r.u_final - inst.u_bar).norm() / inst.u_bar.norm(), 1e-7) << "seed " << s;
    EXPECT_EQ(monotonicity_violations(r), 0u);
  }
}

TEST(EndToEnd, GaussianMatchesUnscaledProblem) {
  // Whitening keeps the row space, so A u = f of the scaled operator is the
  // same constraint as for the raw Gaussian draw.
  ProblemConfig c{.n = 400, .m = 120, .kappa = 15, .seed = 5};
  const auto orth = gen_instance(c);
  c.scaling = GaussianScaling::Raw;
  const auto raw = gen_instance(c);
  EXPECT_TRUE(orth.u_bar == raw.u_bar);
  SolveParams p;
  p.max_iters = 20000;
  const auto r = solve(orth.op, orth.f_obs, p);
  EXPECT_LT((raw.op.apply(r.u_final) - raw.f_clean).norm() / raw.f_clean.norm(), 1e-4);
}

// The solver limit for a large weight is the oracle's basis pursuit point.
TEST(EndToEnd, LargeMuApproachesBasisPursuit) {
  testgen::Rng rng(9);
  for (int t = 0; t < 5; ++t) {
    const RealMatrix a = rng.normal_matrix(3, 7);
    const RealVector f = rng.normal_vector(3);
    SolveParams p;
    p.mu = 1e4;
    p.stopping = RelResidual{1e-13};
    p.max_iters = 2000000;
    const auto r = solve(LinearOperator::dense(a), f, p);
    const RealVector u1 = oracle_bp_min_l2(a, f);
    EXPECT_NEAR(r.u_final.lpNorm<1>(), oracle_bp_min_l1_value(a, f), 1e-5) << "trial " << t;
    EXPECT_LT((r.u_final - u1).norm(), 1e-3 * (1 + u1.norm()));
  }
}

TEST(EndToEnd, NoisyDynRangeDecades) {
  // High SNR keeps entries from about 10^4 upward; moderate SNR from about 10^7.
  // "Recovered" here means within 10%; the decade below is off by 10% to 100%.
  for (const auto& [snr, decade] : {std::pair<double, int>{118.0, 4}, {49.0, 7}}) {
    DynRangeOptions o;
    o.target_snr_db = snr;
    o.seed = 3;
    const auto rep = run_dynrange(o);
    EXPECT_NEAR(rep.record.snr_db, snr, 1.0);
    const auto from = well_recovered_from(rep.decades, 0.1);
    ASSERT_TRUE(from.has_value()) << "snr " << snr;
    EXPECT_EQ(*from, decade) << "snr " << snr;
  }
}

TEST(EndToEnd, SinusoidHighSnr) {
  SinusoidOptions o;
  o.n = 512;
  o.fractions = {0.5};
  o.target_snr_db = 20.0;
  o.trials = 5;
  const auto rep = run_sinusoid(o);
  EXPECT_GE(rep.summaries[0].matches, 4u);
  for (const auto& t : rep.trials) EXPECT_EQ(t.monotonicity_violations, 0u);
}

TEST(EndToEnd, KickedMatchesPlainOnDct) {
  KickCheckOptions o;
  o.instances = 2;
  o.seed = 42;
  const auto rep = run_kick_check(o);
  for (const auto& c : rep.cases) {
    EXPECT_TRUE(c.subsequence);
    EXPECT_LE(c.kicked_iterations, c.plain_iterations);
  }
}
