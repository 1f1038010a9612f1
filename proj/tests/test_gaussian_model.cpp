#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gci/gaussian_model.hpp"
#include "gci/instances.hpp"

using namespace gci;

TEST(BoxSpec, ThresholdsAndHalfSquares) {
  const BoxSpec b({1.0, 2.0, 0.5});
  EXPECT_EQ(b.s(), (std::vector<double>{0.5, 2.0, 0.125}));
  EXPECT_EQ(b.sub({0, 2}).t(), (std::vector<double>{1.0, 0.5}));
  EXPECT_THROW(BoxSpec({1.0, 0.0}), InputError);
  EXPECT_THROW(BoxSpec({-1.0}), InputError);
  EXPECT_THROW(BoxSpec({INFINITY}), InputError);
}

TEST(SampleGaussian, IdentityCovariance) {
  const CovMatrix c = CovMatrix(Matrix::identity(3));
  RandomStream rng(1, 0);
  constexpr int n = 100000;
  Matrix acc(3, 3);
  for (int s = 0; s < n; ++s) {
    const Vector x = sample_gaussian(c, rng);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) acc(i, j) += x[i] * x[j] / n;
  }
  EXPECT_LT(max_abs_diff(acc, Matrix::identity(3)), 0.02);
}

TEST(SampleGaussian, CorrelatedCovarianceAndDeterminism) {
  const CovMatrix c = random_spd(3, 5);
  RandomStream rng(2, 0);
  constexpr int n = 100000;
  Matrix acc(3, 3);
  for (int s = 0; s < n; ++s) {
    const Vector x = sample_gaussian(c, rng);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) acc(i, j) += x[i] * x[j] / n;
  }
  EXPECT_LT(max_abs_diff(acc, c.entries()), 0.03);
  RandomStream a(9, 4), b(9, 4);
  EXPECT_EQ(sample_gaussian(c, a), sample_gaussian(c, b));
}

TEST(SampleGaussian, DiagonalCoordinatesUncorrelated) {
  const CovMatrix c{{2.0, 0.0}, {0.0, 0.5}};
  RandomStream rng(3, 0);
  constexpr int n = 100000;
  double sxy = 0.0;
  for (int s = 0; s < n; ++s) {
    const Vector x = sample_gaussian(c, rng);
    sxy += x[0] * x[1] / std::sqrt(2.0 * 0.5);
  }
  EXPECT_LT(std::abs(sxy / n), 3.0 / std::sqrt(n));
}

TEST(FDensity, OneDimensional) {
  const CovMatrix c{{1.0}};
  EXPECT_NEAR(f_density(c, std::vector<double>{1.0}), std::exp(-1.0) / std::sqrt(std::numbers::pi), 1e-15);
  EXPECT_NEAR(f_density(c, std::vector<double>{1.0}), 0.2075537, 1e-7);
  const std::vector<double> lo{0.0}, hi{INFINITY};
  EXPECT_NEAR(f_density_mass(c, lo, hi), 1.0, 1e-8);
}

TEST(FDensity, IndependentFactorization) {
  const CovMatrix c = CovMatrix(Matrix::identity(2));
  const CovMatrix one{{1.0}};
  const double a = 0.3, b = 1.7;
  EXPECT_NEAR(f_density(c, std::vector<double>{a, b}),
              f_density(one, std::vector<double>{a}) * f_density(one, std::vector<double>{b}), 1e-15);
}

TEST(FDensity, GammaOneHalfForm) {
  // Z = X^2/2 with X ~ N(0, v) is Gamma(1/2, scale v).
  const double v = 2.5, x = 0.8;
  const double want = std::exp(-0.5 * std::log(x) - x / v - std::lgamma(0.5) - 0.5 * std::log(v));
  EXPECT_NEAR(f_density(CovMatrix{{v}}, std::vector<double>{x}) / want, 1.0, 1e-13);
}

TEST(FDensity, NormalizationTwoDimensional) {
  for (std::uint64_t s = 0; s < 4; ++s) {
    const CovMatrix c = random_spd(2, s);
    const std::vector<double> lo{0.0, 0.0}, hi{INFINITY, INFINITY};
    EXPECT_NEAR(f_density_mass(c, lo, hi), 1.0, 1e-6);
  }
}

TEST(FDensity, PermutationSymmetry) {
  const CovMatrix c = random_spd(3, 7);
  const Matrix& e = c.entries();
  const std::size_t perm[3] = {2, 0, 1};
  Matrix pe(3, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) pe(i, j) = e(perm[i], perm[j]);
  const std::vector<double> x{0.2, 1.1, 0.6};
  const std::vector<double> px{x[perm[0]], x[perm[1]], x[perm[2]]};
  EXPECT_NEAR(f_density(c, x) / f_density(CovMatrix(pe), px), 1.0, 1e-13);
}

TEST(FDensity, ExtremePointNoUnderflowToNan) {
  const CovMatrix c{{1.0, 0.95}, {0.95, 1.0}};
  const double v = f_density(c, std::vector<double>{300.0, 300.0});
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_GE(v, 0.0);
}

TEST(FDensity, Errors) {
  const CovMatrix c{{1.0}};
  EXPECT_THROW(f_density(c, std::vector<double>{0.0}), DomainError);
  EXPECT_THROW(f_density(c, std::vector<double>{1.0, 1.0}), InputError);
  EXPECT_THROW(f_density(random_spd(16, 1), std::vector<double>(16, 1.0)), InputError);
}

TEST(Laplace, ClosedFormExamples) {
  EXPECT_EQ(laplace_closed_form(random_spd(3, 2), std::vector<double>{0, 0, 0}), 1.0);
  EXPECT_NEAR(laplace_closed_form(CovMatrix{{1.0}}, std::vector<double>{0.5}), 0.7071068, 1e-7);
  EXPECT_NEAR(laplace_closed_form(CovMatrix{{1.0, 0.6}, {0.6, 1.0}}, std::vector<double>{1, 1}),
              1.0 / std::sqrt(9.0 - 1.44), 1e-15);
  EXPECT_NEAR(1.0 / std::sqrt(9.0 - 1.44), 0.363696, 1e-6);
}

TEST(Laplace, HalvedIdentity) {
  EXPECT_EQ(laplace_halved(random_spd(2, 2), std::vector<double>{0, 0}), 1.0);
  EXPECT_NEAR(laplace_halved(CovMatrix{{1.0}}, std::vector<double>{1.0}), std::sqrt(0.5), 1e-15);
  const CovMatrix c = random_spd(4, 9);
  const std::vector<double> lam{0.3, 1.7, 0.0, 2.2}, half{0.15, 0.85, 0.0, 1.1};
  EXPECT_EQ(laplace_halved(c, lam), laplace_closed_form(c, half));
}

TEST(Laplace, NonincreasingInLambda) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const CovMatrix c = random_spd(3, s);
    auto lam = random_uniform_vector(3, 0.0, 2.0, s);
    const double before = laplace_closed_form(c, lam);
    lam[s % 3] += 0.5;
    EXPECT_LE(laplace_closed_form(c, lam), before);
  }
}

TEST(Laplace, MonteCarloAgreement) {
  const CovMatrix c = random_spd(4, 31);
  const std::vector<double> lam{0.4, 1.0, 0.2, 0.7};
  const Estimate e = mc_laplace(c, lam, 200000, 5);
  EXPECT_NEAR(e.value, laplace_closed_form(c, lam), 4.0 * e.std_error);
  EXPECT_EQ(e, mc_laplace(c, lam, 200000, 5));
}

TEST(Histogram, OneAndTwoDimensional) {
  const std::vector<double> axis{0.0, 0.05, 0.2, 0.5, 1.0, 2.0, 4.0};
  const auto one = z_histogram_check(CovMatrix{{1.0}}, {axis}, 100000, 3);
  EXPECT_LT(one.max_discrepancy, one.threshold);
  const auto two = z_histogram_check(CovMatrix{{1.0, -0.7}, {-0.7, 1.0}}, {axis, axis}, 100000, 4);
  EXPECT_LT(two.max_discrepancy, two.threshold);
  double total = 0.0;
  for (double p : two.exact) total += p;
  EXPECT_GT(total, 0.9);
  EXPECT_LE(total, 1.0 + 1e-9);
}
