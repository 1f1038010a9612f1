#pragma once

// The covariance path C(tau) = [[C11, tau C12], [tau C21, C22]], tau in [0, 1],
// its principal minors in product form
//   |C(tau)_J| = |C_{J1}| |C_{J2}| prod_i (1 - tau^2 mu_i),
// the coefficients a_J(tau) = -d/dtau |C(tau)_J| and the analytic tau-derivative
// of |I + Lambda C(tau)|^{-1/2}.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gci/errors.hpp"
#include "gci/matrix_core.hpp"

namespace gci {

// Split of J into J1 = J ∩ [0, n1) and J2 = J \ J1 with the eigenvalues of
// C_{J1}^{-1/2} C_{J1J2} C_{J2}^{-1} C_{J2J1} C_{J1}^{-1/2}. When one side is
// empty, mu is empty and base = |C_J|.
struct MinorSpectrum {
  IndexSet j1;
  IndexSet j2;
  Vector mu;
  double base = 1.0;

  double minor(double tau) const {
    double m = base;
    for (double v : mu) m *= 1.0 - tau * tau * v;
    return m;
  }

  // -d/dtau of minor(tau): base * sum_i 2 tau mu_i prod_{j != i} (1 - tau^2 mu_j).
  double a(double tau) const {
    double s = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      double term = 2.0 * tau * mu[i];
      for (std::size_t j = 0; j < mu.size(); ++j)
        if (j != i) term *= 1.0 - tau * tau * mu[j];
      s += term;
    }
    return base * s;
  }
};

inline MinorSpectrum minor_spectrum(const CovMatrix& c, std::size_t n1, const IndexSet& j) {
  if (j.empty()) throw InputError("minor_spectrum: J must be non-empty");
  j.check_within(c.n());
  MinorSpectrum ms;
  std::vector<std::size_t> first, second;
  for (std::size_t i : j) (i < n1 ? first : second).push_back(i);
  ms.j1 = IndexSet(std::move(first));
  ms.j2 = IndexSet(std::move(second));
  if (ms.j1.empty() || ms.j2.empty()) {
    ms.base = principal_minor(c.entries(), j);
    return ms;
  }
  ms.base = principal_minor(c.entries(), ms.j1) * principal_minor(c.entries(), ms.j2);
  ms.mu = block_schur_eigs(c, ms.j1, ms.j2);
  return ms;
}

inline constexpr std::size_t kMaxSubsetDim = 12;
inline constexpr int kTauValidationGrid = 21;

class TauFamily {
 public:
  TauFamily(CovMatrix c, std::size_t n1) : c_(std::move(c)), n1_(n1) {
    if (n1_ < 1 || n1_ >= c_.n()) throw InputError("TauFamily: need 1 <= n1 < n");
    // c_of_tau raises ConsistencyError when C(tau) fails the SPD test.
    for (int g = 0; g < kTauValidationGrid; ++g) (void)c_of_tau(static_cast<double>(g) / (kTauValidationGrid - 1));
    if (n() <= kMaxSubsetDim) {
      const std::uint64_t count = std::uint64_t{1} << n();
      spectra_.reserve(count);
      spectra_.emplace_back();  // slot for the empty set
      for (std::uint64_t mask = 1; mask < count; ++mask)
        spectra_.push_back(minor_spectrum(c_, n1_, IndexSet::from_mask(mask)));
    }
  }

  std::size_t n() const noexcept { return c_.n(); }
  std::size_t n1() const noexcept { return n1_; }
  std::size_t n2() const noexcept { return c_.n() - n1_; }
  const CovMatrix& cov() const noexcept { return c_; }

  Matrix c_of_tau_entries(double tau) const {
    check_tau(tau);
    Matrix m = c_.entries();
    for (std::size_t i = 0; i < n(); ++i)
      for (std::size_t j = 0; j < n(); ++j)
        if ((i < n1_) != (j < n1_)) m(i, j) *= tau;
    return m;
  }

  CovMatrix c_of_tau(double tau) const {
    Matrix m = c_of_tau_entries(tau);
    try {
      return CovMatrix(std::move(m));
    } catch (const InputError& e) {
      throw ConsistencyError(std::string("c_of_tau: ") + e.what());
    }
  }

  // Cached for n <= 12, computed on demand above that.
  MinorSpectrum spectrum(const IndexSet& j) const {
    if (j.empty()) throw InputError("TauFamily: J must be non-empty");
    j.check_within(n());
    if (!spectra_.empty()) return spectra_[j.mask()];
    return minor_spectrum(c_, n1_, j);
  }

  const MinorSpectrum& cached_spectrum(std::uint64_t mask) const {
    if (mask == 0 || mask >= spectra_.size()) throw InputError("TauFamily: mask out of cached range");
    return spectra_[mask];
  }

  double minor_of_tau(const IndexSet& j, double tau) const {
    check_tau(tau);
    return spectrum(j).minor(tau);
  }

  double a_j(const IndexSet& j, double tau) const {
    check_tau(tau);
    return spectrum(j).a(tau);
  }

  // |I + Lambda C(tau)| evaluated directly.
  double det_identity_plus(std::span<const double> lambda, double tau) const {
    if (lambda.size() != n()) throw InputError("lambda has wrong length");
    Matrix m = c_of_tau_entries(tau);
    for (std::size_t i = 0; i < n(); ++i) {
      if (!(lambda[i] >= 0.0)) throw InputError("lambda entries must be nonnegative");
      for (std::size_t j = 0; j < n(); ++j) m(i, j) *= lambda[i];
      m(i, i) += 1.0;
    }
    return det(m);
  }

  // d/dtau |I + Lambda C(tau)|^{-1/2}
  //   = (1/2) |I + Lambda C(tau)|^{-3/2} sum_{J != {}} a_J(tau) prod_{j in J} lambda_j.
  double dtau_inv_sqrt_det(std::span<const double> lambda, double tau) const {
    if (n() > kMaxSubsetDim) throw InputError("dtau_inv_sqrt_det: dimension exceeds 12");
    const double d = det_identity_plus(lambda, tau);
    double sum = 0.0;
    const std::uint64_t count = std::uint64_t{1} << n();
    for (std::uint64_t mask = 1; mask < count; ++mask) {
      double prod = 1.0;
      for (std::size_t i = 0; i < n(); ++i)
        if (mask >> i & 1u) prod *= lambda[i];
      if (prod == 0.0) continue;
      sum += spectra_[mask].a(tau) * prod;
    }
    return 0.5 * std::pow(d, -1.5) * sum;
  }

 private:
  static void check_tau(double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw InputError("tau must lie in [0, 1]");
  }

  CovMatrix c_;
  std::size_t n1_;
  std::vector<MinorSpectrum> spectra_;
};

}  // namespace gci
