#pragma once

// Centered Gaussian vectors X ~ N(0, C) and the halved squares Z = X^2 / 2:
// sampling, the closed-form density of Z, and the Laplace transform
// E exp(-sum lambda_i X_i^2) = |I + 2 Lambda C|^{-1/2}.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "gci/errors.hpp"
#include "gci/estimate.hpp"
#include "gci/matrix_core.hpp"
#include "gci/quadrature.hpp"
#include "gci/random.hpp"

namespace gci {

// Symmetric box {|X_i| <= t_i}, equivalently {Z_i <= s_i} with s_i = t_i^2 / 2.
class BoxSpec {
 public:
  explicit BoxSpec(std::vector<double> t) : t_(std::move(t)), s_(t_.size()) {
    if (t_.empty()) throw InputError("BoxSpec: empty threshold vector");
    for (std::size_t i = 0; i < t_.size(); ++i) {
      if (!(t_[i] > 0.0) || !std::isfinite(t_[i]))
        throw InputError("BoxSpec: thresholds must be positive and finite");
      s_[i] = t_[i] * t_[i] / 2.0;
    }
  }

  std::size_t n() const noexcept { return t_.size(); }
  const std::vector<double>& t() const noexcept { return t_; }
  const std::vector<double>& s() const noexcept { return s_; }

  BoxSpec sub(const IndexSet& j) const {
    std::vector<double> t;
    for (std::size_t i : j) t.push_back(t_.at(i));
    return BoxSpec(std::move(t));
  }

 private:
  std::vector<double> t_;
  std::vector<double> s_;
};

// out = chol(C) z with z standard normal; draws exactly n normals.
inline void sample_gaussian(const CovMatrix& c, RandomStream& rng, std::span<double> out,
                            std::span<double> scratch) {
  const std::size_t n = c.n();
  rng.normals(scratch.first(n));
  const Matrix& l = c.chol();
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k <= i; ++k) s += l(i, k) * scratch[k];
    out[i] = s;
  }
}

inline Vector sample_gaussian(const CovMatrix& c, RandomStream& rng) {
  Vector out(c.n()), z(c.n());
  sample_gaussian(c, rng, out, z);
  return out;
}

inline constexpr std::size_t kMaxDensityDim = 15;

// Density of Z = X^2/2 at x in (0, inf)^n:
//   |C|^{-1/2} (4 pi)^{-n/2} (x_1...x_n)^{-1/2} sum_eps exp(-<C^{-1} r_eps, r_eps>),
// r_eps = (eps_i sqrt(x_i)). The sign sum is accumulated in log space.
inline double f_density(const CovMatrix& c, std::span<const double> x) {
  const std::size_t n = c.n();
  if (x.size() != n) throw InputError("f_density: point has wrong dimension");
  if (n > kMaxDensityDim) throw InputError("f_density: dimension exceeds 15");
  for (double xi : x)
    if (!(xi > 0.0)) throw DomainError("f_density: coordinates must be positive");

  const Matrix p = c.inverse();
  Vector r(n);
  double log_prefactor = -0.5 * c.log_det() - 0.5 * n * std::log(4.0 * std::numbers::pi);
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = std::sqrt(x[i]);
    log_prefactor -= 0.5 * std::log(x[i]);
  }

  const std::uint64_t count = std::uint64_t{1} << n;
  std::vector<double> expo(count);
  double top = -std::numeric_limits<double>::infinity();
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    double q = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ri = (mask >> i & 1u) ? -r[i] : r[i];
      double row = 0.0;
      for (std::size_t j = 0; j < n; ++j) row += p(i, j) * ((mask >> j & 1u) ? -r[j] : r[j]);
      q += ri * row;
    }
    expo[mask] = -q;
    top = std::max(top, -q);
  }
  double sum = 0.0;
  for (double e : expo) sum += std::exp(e - top);
  return std::exp(log_prefactor + top + std::log(sum));
}

// Mass of the density of Z over the box prod [lower_i, upper_i] (upper may be
// +inf). Substituting x_i = u_i^2/2 removes the 1/sqrt(x) factor; each u axis
// gets a Gauss-Legendre rule, and infinite upper limits are cut at
// u = 10 sqrt(C_ii).
inline double f_density_mass(const CovMatrix& c, std::span<const double> lower,
                             std::span<const double> upper, std::size_t nodes_per_axis = 200) {
  const std::size_t n = c.n();
  if (lower.size() != n || upper.size() != n) throw InputError("f_density_mass: bound length mismatch");
  Vector ulo(n), uhi(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(lower[i] >= 0.0) || !(upper[i] >= lower[i])) throw InputError("f_density_mass: bad bounds");
    ulo[i] = std::sqrt(2.0 * lower[i]);
    const double cap = 10.0 * std::sqrt(c(i, i));
    uhi[i] = std::isinf(upper[i]) ? std::max(cap, ulo[i]) : std::sqrt(2.0 * upper[i]);
  }
  Vector x(n);
  auto integrand = [&](std::span<const double> u) {
    double jac = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (u[i] <= 0.0) return 0.0;
      x[i] = 0.5 * u[i] * u[i];
      jac *= u[i];
    }
    return f_density(c, x) * jac;
  };
  return integrate_box(integrand, ulo, uhi, nodes_per_axis);
}

// |I + 2 Lambda C|^{-1/2} = E exp(-sum lambda_i X_i^2).
inline double laplace_closed_form(const CovMatrix& c, std::span<const double> lambda) {
  Vector twice(lambda.begin(), lambda.end());
  for (double& l : twice) l *= 2.0;
  return 1.0 / std::sqrt(det_identity_plus_scaled(c, twice));
}

// |I + Lambda C|^{-1/2} = E exp(-(1/2) sum lambda_i X_i^2).
inline double laplace_halved(const CovMatrix& c, std::span<const double> lambda) {
  Vector half(lambda.begin(), lambda.end());
  for (double& l : half) l /= 2.0;
  return laplace_closed_form(c, half);
}

// Monte Carlo mean of exp(-sum lambda_i X_i^2).
inline Estimate mc_laplace(const CovMatrix& c, std::span<const double> lambda, std::size_t samples,
                           std::uint64_t seed) {
  const std::size_t n = c.n();
  if (lambda.size() != n) throw InputError("mc_laplace: lambda has wrong length");
  for (double l : lambda)
    if (!(l >= 0.0)) throw InputError("mc_laplace: lambda entries must be nonnegative");
  const Vector lam(lambda.begin(), lambda.end());
  return monte_carlo_mean(samples, seed, [&] {
    return [&, x = Vector(n), z = Vector(n)](RandomStream& rng) mutable {
      sample_gaussian(c, rng, x, z);
      double q = 0.0;
      for (std::size_t i = 0; i < n; ++i) q += lam[i] * x[i] * x[i];
      return std::exp(-q);
    };
  });
}

struct HistogramReport {
  std::vector<double> empirical;  // bin frequencies, bins in row-major order over axes
  std::vector<double> exact;      // integral of f_density over each bin
  double max_discrepancy = 0.0;
  double threshold = 0.0;         // 5 / sqrt(N)
  std::size_t samples = 0;
};

// Compares bin frequencies of Z = X^2/2 from `samples` draws with the mass of
// f_density over each bin. edges[i] lists the bin edges on axis i.
inline HistogramReport z_histogram_check(const CovMatrix& c, const std::vector<Vector>& edges,
                                         std::size_t samples, std::uint64_t seed,
                                         std::size_t nodes_per_axis = 48) {
  const std::size_t n = c.n();
  if (edges.size() != n) throw InputError("z_histogram_check: need one edge list per axis");
  if (n > 2) throw InputError("z_histogram_check: supported for n <= 2");
  std::size_t bins = 1;
  std::vector<std::size_t> per_axis(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (edges[i].size() < 2 || !std::is_sorted(edges[i].begin(), edges[i].end()) || edges[i][0] < 0.0)
      throw InputError("z_histogram_check: edges must be sorted, nonnegative, at least two");
    per_axis[i] = edges[i].size() - 1;
    bins *= per_axis[i];
  }

  auto bin_of = [&](std::span<const double> z) -> std::ptrdiff_t {
    std::size_t flat = 0, stride = 1;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& e = edges[i];
      if (z[i] < e.front() || z[i] >= e.back()) return -1;
      const auto k = static_cast<std::size_t>(std::upper_bound(e.begin(), e.end(), z[i]) - e.begin()) - 1;
      flat += k * stride;
      stride *= per_axis[i];
    }
    return static_cast<std::ptrdiff_t>(flat);
  };

  auto counts = map_chunks<std::vector<std::size_t>>(
      samples, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        RandomStream rng(seed, chunk);
        std::vector<std::size_t> local(bins, 0);
        Vector x(n), z(n);
        for (std::size_t s = begin; s < end; ++s) {
          sample_gaussian(c, rng, x, z);
          for (std::size_t i = 0; i < n; ++i) x[i] = 0.5 * x[i] * x[i];
          const auto b = bin_of(x);
          if (b >= 0) ++local[static_cast<std::size_t>(b)];
        }
        return local;
      });

  HistogramReport rep;
  rep.samples = samples;
  rep.threshold = 5.0 / std::sqrt(static_cast<double>(samples));
  rep.empirical.assign(bins, 0.0);
  rep.exact.assign(bins, 0.0);
  std::vector<std::size_t> total(bins, 0);
  for (const auto& part : counts)
    for (std::size_t b = 0; b < bins; ++b) total[b] += part[b];

  std::vector<std::size_t> idx(n, 0);
  Vector lo(n), hi(n);
  for (std::size_t b = 0; b < bins; ++b) {
    std::size_t rest = b;
    for (std::size_t i = 0; i < n; ++i) {
      idx[i] = rest % per_axis[i];
      rest /= per_axis[i];
      lo[i] = edges[i][idx[i]];
      hi[i] = edges[i][idx[i] + 1];
    }
    rep.empirical[b] = static_cast<double>(total[b]) / static_cast<double>(samples);
    rep.exact[b] = f_density_mass(c, lo, hi, nodes_per_axis);
    rep.max_discrepancy = std::max(rep.max_discrepancy, std::abs(rep.empirical[b] - rep.exact[b]));
  }
  return rep;
}

}  // namespace gci
