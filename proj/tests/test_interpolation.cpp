#include <gtest/gtest.h>

#include <cmath>

#include "gci/instances.hpp"
#include "gci/interpolation.hpp"

using namespace gci;

namespace {
TauFamily rho_family(double rho) { return TauFamily(CovMatrix{{1.0, rho}, {rho, 1.0}}, 1); }
}  // namespace

TEST(TauFamily, EndpointsAndScaling) {
  const CovMatrix c = random_spd(5, 4);
  const TauFamily f(c, 2);
  EXPECT_EQ(f.c_of_tau(1.0).entries(), c.entries());
  const Matrix zero = f.c_of_tau_entries(0.0);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      EXPECT_EQ(zero(i, j), ((i < 2) == (j < 2)) ? c(i, j) : 0.0);
  const Matrix half = rho_family(0.6).c_of_tau_entries(0.5);
  EXPECT_NEAR(half(0, 1), 0.3, 1e-16);
  EXPECT_EQ(half(0, 0), 1.0);
}

TEST(TauFamily, RejectsBadArguments) {
  const CovMatrix c = random_spd(3, 1);
  EXPECT_THROW(TauFamily(c, 0), InputError);
  EXPECT_THROW(TauFamily(c, 3), InputError);
  const TauFamily f(c, 1);
  EXPECT_THROW(f.c_of_tau(1.1), InputError);
  EXPECT_THROW(f.a_j({0, 1}, -0.1), InputError);
  EXPECT_THROW(f.minor_of_tau(IndexSet{}, 0.5), InputError);
}

TEST(MinorOfTau, Examples) {
  const TauFamily f = rho_family(0.6);
  EXPECT_NEAR(f.minor_of_tau({0, 1}, 0.5), 1.0 - 0.25 * 0.36, 1e-15);
  EXPECT_NEAR(f.a_j({0, 1}, 0.5), 2.0 * 0.5 * 0.36, 1e-15);
  EXPECT_EQ(f.a_j({0}, 0.7), 0.0);
  EXPECT_EQ(f.a_j({0, 1}, 0.0), 0.0);

  const CovMatrix c = random_spd(5, 8);
  const TauFamily g(c, 2);
  for (double tau : {0.0, 0.3, 1.0}) {
    EXPECT_NEAR(g.minor_of_tau({0, 1}, tau), principal_minor(c.entries(), {0, 1}), 1e-14);
    EXPECT_NEAR(g.minor_of_tau({2, 4}, tau), principal_minor(c.entries(), {2, 4}), 1e-14);
  }
  EXPECT_NEAR(g.minor_of_tau({0, 3, 4}, 0.0),
              principal_minor(c.entries(), {0}) * principal_minor(c.entries(), {3, 4}), 1e-14);
}

TEST(MinorOfTau, MatchesDirectDeterminantOnGrid) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const std::size_t n = 3 + s % 4;
    const TauFamily f(random_spd(n, s), 1 + s % (n - 1));
    for (int g = 0; g <= 20; ++g) {
      const double tau = g / 20.0;
      const Matrix ct = f.c_of_tau_entries(tau);
      for (std::uint64_t mask = 1; mask < (1u << n); ++mask) {
        const IndexSet j = IndexSet::from_mask(mask);
        const double direct = principal_minor(ct, j);
        EXPECT_NEAR(f.minor_of_tau(j, tau) / direct, 1.0, 1e-10);
      }
    }
  }
}

TEST(AJ, NonnegativeAndMatchesFiniteDifference) {
  constexpr double h = 1e-5;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const std::size_t n = 2 + s % 5;
    const TauFamily f(random_spd(n, 100 + s), 1 + s % (n - 1));
    for (std::uint64_t mask = 1; mask < (1u << n); ++mask) {
      const auto& ms = f.cached_spectrum(mask);
      for (int g = 0; g <= 20; ++g) {
        const double tau = g / 20.0;
        const double a = f.a_j(IndexSet::from_mask(mask), tau);
        EXPECT_GE(a, -1e-12);
        EXPECT_NEAR(a, -(ms.minor(tau + h) - ms.minor(tau - h)) / (2 * h), 1e-6);
      }
    }
  }
}

TEST(MinorSpectrum, EigenvaluesInUnitInterval) {
  const TauFamily f(random_spd(6, 12), 3);
  for (std::uint64_t mask = 1; mask < 64; ++mask) {
    const auto& ms = f.cached_spectrum(mask);
    EXPECT_GT(ms.base, 0.0);
    for (double m : ms.mu) {
      EXPECT_GE(m, 0.0);
      EXPECT_LE(m, 1.0);
    }
  }
}

TEST(DtauInvSqrtDet, TrivialCases) {
  const TauFamily f = rho_family(0.6);
  const std::vector<double> zero{0.0, 0.0};
  EXPECT_EQ(f.dtau_inv_sqrt_det(zero, 0.4), 0.0);
  const TauFamily block(CovMatrix{{1, 0.3, 0}, {0.3, 1, 0}, {0, 0, 2}}, 2);
  const std::vector<double> lam{1.0, 2.0, 0.5};
  EXPECT_EQ(block.dtau_inv_sqrt_det(lam, 0.6), 0.0);
}

TEST(DtauInvSqrtDet, TwoByTwoClosedForm) {
  const TauFamily f = rho_family(0.6);
  const std::vector<double> lam{1.0, 1.0};
  // |I + C(tau)| = 4 - 0.36 tau^2.
  const double d = 4.0 - 0.36 * 0.25;
  EXPECT_NEAR(f.dtau_inv_sqrt_det(lam, 0.5), 0.5 * std::pow(d, -1.5) * 0.36, 1e-15);
  constexpr double h = 1e-5;
  const double fd =
      (std::pow(f.det_identity_plus(lam, 0.5 + h), -0.5) - std::pow(f.det_identity_plus(lam, 0.5 - h), -0.5)) /
      (2 * h);
  EXPECT_NEAR(f.dtau_inv_sqrt_det(lam, 0.5), fd, 1e-6);
}

TEST(DtauInvSqrtDet, RandomFiniteDifference) {
  constexpr double h = 1e-5;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const std::size_t n = 2 + s % 5;
    const TauFamily f(random_spd(n, 300 + s), 1 + s % (n - 1));
    const auto lam = random_uniform_vector(n, 0.0, 2.0, s);
    const double tau = 0.05 + 0.9 * random_uniform_vector(1, 0.0, 1.0, s + 1000)[0];
    const double fd = (std::pow(f.det_identity_plus(lam, tau + h), -0.5) -
                       std::pow(f.det_identity_plus(lam, tau - h), -0.5)) /
                      (2 * h);
    EXPECT_NEAR(f.dtau_inv_sqrt_det(lam, tau), fd, 1e-6);
  }
}
