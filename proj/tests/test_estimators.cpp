#include <gtest/gtest.h>

#include <cmath>

#include "gci/estimators.hpp"
#include "gci/instances.hpp"
#include "oracles.hpp"

using namespace gci;

namespace {
CovMatrix rho_matrix(double rho) { return CovMatrix{{1.0, rho}, {rho, 1.0}}; }
}  // namespace

TEST(McBoxProb, Examples) {
  const Estimate one = mc_box_prob(CovMatrix{{1.0}}, BoxSpec({1.959964}), 1000000, 1);
  EXPECT_NEAR(one.value, std::erf(1.959964 / std::sqrt(2.0)), 4.0 * one.std_error);
  const Estimate all = mc_box_prob(random_spd(3, 1), BoxSpec({100.0, 100.0, 100.0}), 10000, 1);
  EXPECT_EQ(all.value, 1.0);
  const Estimate two = mc_box_prob(CovMatrix(Matrix::identity(2)), BoxSpec({1.959964, 1.959964}), 1000000, 2);
  EXPECT_NEAR(two.value, 0.9025, 4.0 * two.std_error);
  EXPECT_THROW(mc_box_prob(CovMatrix{{1.0}}, BoxSpec({1.0}), 999, 1), InputError);
  EXPECT_THROW(mc_box_prob(CovMatrix{{1.0}}, BoxSpec({1.0, 1.0}), 1000, 1), InputError);
}

TEST(QuadBoxProb, Examples) {
  const Estimate one = quad_box_prob(CovMatrix{{1.0}}, BoxSpec({1.959964}));
  EXPECT_NEAR(one.value, std::erf(1.959964 / std::sqrt(2.0)), 1e-7);
  EXPECT_NEAR(quad_box_prob(CovMatrix{{1.0}}, BoxSpec({1.96})).value, 0.9500042, 1e-7);
  const double p1 = std::erf(1.0 / std::sqrt(2.0)), p2 = std::erf(1.5 / std::sqrt(2.0));
  const Estimate two = quad_box_prob(CovMatrix(Matrix::identity(2)), BoxSpec({1.0, 1.5}));
  EXPECT_NEAR(two.value, p1 * p2, 1e-7);
  EXPECT_THROW(quad_box_prob(random_spd(4, 1), BoxSpec({1, 1, 1, 1})), InputError);
}

TEST(QuadBoxProb, MatchesBivariateOracle) {
  for (double rho : {-0.9, -0.3, 0.5, 0.8})
    for (double t2 : {0.4, 1.0, 2.5}) {
      const Estimate q = quad_box_prob(rho_matrix(rho), BoxSpec({1.2, t2}));
      EXPECT_NEAR(q.value, oracle::bivariate_box(1.2, t2, rho), 1e-9) << rho << " " << t2;
      EXPECT_LT(q.bound, 1e-9);
    }
}

TEST(QuadBoxProb, AgreesWithMonteCarlo) {
  for (std::uint64_t s = 0; s < 4; ++s) {
    const std::size_t n = 1 + s % 3;
    const CovMatrix c = random_spd(n, s);
    const BoxSpec box(random_uniform_vector(n, 0.5, 2.0, s));
    const Estimate q = quad_box_prob(c, box);
    const Estimate m = mc_box_prob(c, box, 200000, s);
    EXPECT_NEAR(q.value, m.value, 4.0 * m.std_error);
  }
  const Estimate q = quad_box_prob(rho_matrix(0.6), BoxSpec({1.0, 1.0}));
  const Estimate m = mc_box_prob(rho_matrix(0.6), BoxSpec({1.0, 1.0}), 1000000, 3);
  EXPECT_NEAR(q.value, m.value, 4.0 * m.std_error);
}

TEST(GciCheck, IndependentBlocks) {
  const CovMatrix c{{1, 0.4, 0, 0}, {0.4, 1, 0, 0}, {0, 0, 1, -0.2}, {0, 0, -0.2, 1}};
  const auto r = gci_check(c, 2, BoxSpec({1, 1, 1, 1}), 400000, 1);
  EXPECT_LT(std::abs(r.delta), 4.0 * r.delta_stderr);
  EXPECT_GT(r.delta_stderr, 0.0);
}

TEST(GciCheck, CorrelatedPairStrictlyPositive) {
  const auto r = gci_check(CovMatrix{{1.0, 0.5}, {0.5, 1.0}}, 1, BoxSpec({1.0, 1.0}), 1000000, 2);
  const double p = std::erf(1.0 / std::sqrt(2.0));
  const double exact = oracle::bivariate_box(1.0, 1.0, 0.5) - p * p;
  EXPECT_GT(exact, 0.0);
  EXPECT_GT(r.delta, 4.0 * r.delta_stderr);
  EXPECT_NEAR(r.delta, exact, 4.0 * r.delta_stderr);
}

TEST(GciCheck, DeltaStandardErrorMatchesReplication) {
  // The spread of delta over independent seeds should match the reported SE.
  const CovMatrix c = random_spd(4, 6);
  const BoxSpec box({1.0, 0.8, 1.3, 1.1});
  Moments spread;
  double se = 0.0;
  for (std::uint64_t s = 0; s < 40; ++s) {
    const auto r = gci_check(c, 2, box, 20000, 1000 + s);
    spread.add(r.delta);
    se += r.delta_stderr / 40.0;
  }
  const double sd = std::sqrt(spread.variance());
  EXPECT_GT(sd / se, 0.6);
  EXPECT_LT(sd / se, 1.5);
}

TEST(GciCheck, RandomInstancesHold) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const std::size_t n = 2 + s % 5;
    const auto r = gci_check(random_spd(n, s), 1 + s % (n - 1), BoxSpec(random_uniform_vector(n, 0.5, 2.5, s)),
                             100000, s);
    EXPECT_TRUE(r.holds(4.0)) << s;
  }
  EXPECT_THROW(gci_check(random_spd(3, 1), 3, BoxSpec({1, 1, 1}), 1000, 1), InputError);
}

TEST(Sweep, BlockDiagonalIsFlat) {
  const TauFamily f(CovMatrix{{1, 0.5, 0}, {0.5, 1, 0}, {0, 0, 1}}, 2);
  const auto r = tau_monotonicity_sweep(f, BoxSpec({1, 1, 1}), 6, 20000, 3);
  for (const auto& e : r.estimates) EXPECT_EQ(e.value, r.estimates.front().value);
  EXPECT_TRUE(r.violations.empty());
}

TEST(Sweep, CorrelatedPairIsIncreasing) {
  const TauFamily f(rho_matrix(0.8), 1);
  const auto r = tau_monotonicity_sweep(f, BoxSpec({1, 1}), 11, 1000000, 4);
  ASSERT_EQ(r.tau_grid.size(), 11u);
  EXPECT_EQ(r.tau_grid.front(), 0.0);
  EXPECT_EQ(r.tau_grid.back(), 1.0);
  EXPECT_TRUE(r.violations.empty());
  const double p = std::erf(1.0 / std::sqrt(2.0));
  EXPECT_NEAR(r.estimates.front().value, p * p, 4.0 * r.estimates.front().std_error);
  EXPECT_NEAR(r.estimates.back().value, oracle::bivariate_box(1, 1, 0.8), 4.0 * r.estimates.back().std_error);
  const double gain = r.estimates.back().value - r.estimates.front().value;
  EXPECT_GT(gain, 0.05);
}

TEST(Sweep, Deterministic) {
  const TauFamily f(random_spd(3, 2), 1);
  const auto a = tau_monotonicity_sweep(f, BoxSpec({1, 1, 1}), 5, 5000, 9);
  const auto b = tau_monotonicity_sweep(f, BoxSpec({1, 1, 1}), 5, 5000, 9);
  EXPECT_EQ(a.estimates, b.estimates);
  EXPECT_EQ(a.differences, b.differences);
  EXPECT_EQ(a.violations, b.violations);
}

TEST(BoundaryIntegral, FullSetIsDensityValue) {
  const TauFamily f(rho_matrix(0.6), 1);
  const BoxSpec box({1.0, 1.2});
  const Estimate b = boundary_integral(f, {0, 1}, box, 0.5, 200000, 4);
  const double r = 0.3;
  const double want = 2.0 * (oracle::phi2(1.0, 1.2, r) - oracle::phi2(1.0, -1.2, r)) / r;
  EXPECT_NEAR(b.value, want, 4.0 * b.std_error);
}

TEST(BoundaryIntegral, SeparableCase) {
  // Block-diagonal: h factorizes into Gamma(3/2, C_ii) densities.
  const TauFamily f(CovMatrix{{1.0, 0.0}, {0.0, 2.0}}, 1);
  const BoxSpec box({1.0, 1.5});
  const Estimate b = boundary_integral(f, {0}, box, 0.7, 50000, 5);
  const double s1 = box.s()[0], s2 = box.s()[1];
  const double cdf = oracle::simpson([](double x) { return x > 0 ? oracle::gamma_pdf(1.5, 2.0, x) : 0.0; }, 0.0,
                                     s2, 200000);
  EXPECT_NEAR(b.value, oracle::gamma_pdf(1.5, 1.0, s1) * cdf, 4.0 * b.std_error + 1e-6);
}

TEST(BoundaryIntegral, NonnegativeOnRandomCases) {
  for (std::uint64_t s = 0; s < 4; ++s) {
    const std::size_t n = 2 + s % 3;
    const TauFamily f(random_spd(n, s), 1);
    const BoxSpec box(random_uniform_vector(n, 0.5, 2.0, s));
    for (std::uint64_t mask = 1; mask < (1u << n); ++mask) {
      const Estimate b = boundary_integral(f, IndexSet::from_mask(mask), box, 0.6, 5000, s);
      EXPECT_GE(b.value, -3.0 * b.std_error);
    }
  }
  EXPECT_THROW(boundary_integral(TauFamily(random_spd(5, 1), 2), {0}, BoxSpec({1, 1, 1, 1, 1}), 0.5, 1000, 1),
               InputError);
}

TEST(Decomposition, BlockDiagonalIsZero) {
  const TauFamily f(CovMatrix{{1.0, 0.0}, {0.0, 1.0}}, 1);
  const auto r = decomposition_check(f, BoxSpec({1.0, 1.0}), 0.5, 20000, 1);
  EXPECT_NEAR(r.finite_difference.value, 0.0, 1e-12);
  EXPECT_EQ(r.decomposition.value, 0.0);
  EXPECT_TRUE(r.agrees());
}

TEST(Decomposition, BivariateExample) {
  const TauFamily f(rho_matrix(0.6), 1);
  const BoxSpec box({1.2, 0.9});
  const auto r = decomposition_check(f, box, 0.5, 100000, 2);
  EXPECT_NEAR(r.finite_difference.value, oracle::bivariate_box_dtau(1.2, 0.9, 0.6, 0.5), 1e-3);
  EXPECT_TRUE(r.agrees()) << r.residual.value << " allowance " << r.allowance();
  EXPECT_TRUE(r.boundary_nonnegative());
  EXPECT_GE(r.decomposition.value, -3.0 * r.decomposition.std_error);
  EXPECT_THROW(decomposition_check(f, box, 0.01, 1000, 1), InputError);
}

TEST(Decomposition, ThreeDimensional) {
  const TauFamily f(random_spd(3, 14), 1);
  const auto r = decomposition_check(f, BoxSpec({1.0, 1.1, 0.9}), 0.6, 40000, 3);
  EXPECT_TRUE(r.agrees()) << r.residual.value << " allowance " << r.allowance();
  EXPECT_TRUE(r.boundary_nonnegative());
  EXPECT_EQ(r.boundary.size(), 7u);
}
