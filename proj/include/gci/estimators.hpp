#pragma once

// Box probabilities of N(0, C), the correlation inequality
//   P(X in K ∩ L) >= P(X in K) P(X in L),
// the tau-monotonicity of P(|X_i(tau)| <= t_i for all i), boundary integrals of
// h_{3,C(tau)} and the decomposition
//   d/dtau P(tau) = sum_{J != {}} (1/2) a_J(tau) int_{J^c} h_tau(s_J, x_{J^c}) dx_{J^c}.
//
// Every estimator is deterministic in (inputs, samples, seed) and independent
// of the thread count: sample i of chunk c always reads RandomStream(seed, c),
// and chunk partials are reduced in chunk order.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "gci/errors.hpp"
#include "gci/estimate.hpp"
#include "gci/gamma_series.hpp"
#include "gci/gaussian_model.hpp"
#include "gci/interpolation.hpp"
#include "gci/matrix_core.hpp"
#include "gci/parallel.hpp"
#include "gci/quadrature.hpp"
#include "gci/random.hpp"

namespace gci {

inline constexpr std::size_t kMinBoxSamples = 1000;
// Thresholds beyond this many standard deviations are treated as certain.
inline constexpr double kCertainThreshold = 40.0;

namespace detail {
inline void check_box(const CovMatrix& c, const BoxSpec& box) {
  if (box.n() != c.n()) throw InputError("threshold vector length does not match the matrix dimension");
}

inline std::vector<char> active_coordinates(const CovMatrix& c, const BoxSpec& box) {
  std::vector<char> active(c.n());
  for (std::size_t i = 0; i < c.n(); ++i)
    active[i] = box.t()[i] <= kCertainThreshold * std::sqrt(c(i, i));
  return active;
}

inline bool inside(std::span<const double> x, const BoxSpec& box, const std::vector<char>& active,
                   std::size_t begin, std::size_t end) {
  for (std::size_t i = begin; i < end; ++i)
    if (active[i] && std::abs(x[i]) > box.t()[i]) return false;
  return true;
}

inline Estimate binomial_estimate(std::size_t hits, std::size_t samples, std::uint64_t seed) {
  const double n = static_cast<double>(samples);
  const double p = static_cast<double>(hits) / n;
  return {p, std::sqrt(p * (1.0 - p) / n), 0.0, samples, seed};
}
}  // namespace detail

// Fraction of N(0, C) draws inside the symmetric box.
inline Estimate mc_box_prob(const CovMatrix& c, const BoxSpec& box, std::size_t samples,
                            std::uint64_t seed) {
  detail::check_box(c, box);
  if (samples < kMinBoxSamples) throw InputError("mc_box_prob: need at least 1000 samples");
  const std::size_t n = c.n();
  const auto active = detail::active_coordinates(c, box);
  auto hits = map_chunks<std::size_t>(samples, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    RandomStream rng(seed, chunk);
    Vector x(n), z(n);
    std::size_t local = 0;
    for (std::size_t s = begin; s < end; ++s) {
      sample_gaussian(c, rng, x, z);
      local += detail::inside(x, box, active, 0, n);
    }
    return local;
  });
  std::size_t total = 0;
  for (std::size_t h : hits) total += h;
  return detail::binomial_estimate(total, samples, seed);
}

inline constexpr std::size_t kMaxQuadBoxDim = 3;

// Tensor Gauss-Legendre integral of the N(0, C) density over the box; the
// value uses 200 nodes per axis and `bound` is its distance to the 100-node
// value. Limits are cut at 10 standard deviations.
inline Estimate quad_box_prob(const CovMatrix& c, const BoxSpec& box) {
  detail::check_box(c, box);
  const std::size_t n = c.n();
  if (n > kMaxQuadBoxDim) throw InputError("quad_box_prob: dimension exceeds 3");
  const Matrix p = c.inverse();
  const double norm = std::exp(-0.5 * c.log_det() - 0.5 * n * std::log(2.0 * std::numbers::pi));
  Vector lo(n), hi(n);
  for (std::size_t i = 0; i < n; ++i) {
    hi[i] = std::min(box.t()[i], 10.0 * std::sqrt(c(i, i)));
    lo[i] = -hi[i];
  }
  auto density = [&](std::span<const double> x) {
    double q = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < n; ++j) row += p(i, j) * x[j];
      q += x[i] * row;
    }
    return norm * std::exp(-0.5 * q);
  };
  const double coarse = integrate_box(density, lo, hi, 100);
  const double fine = integrate_box(density, lo, hi, 200);
  return {fine, 0.0, std::abs(fine - coarse), 0, 0};
}

struct GciReport {
  Estimate p_joint;
  Estimate p_k;
  Estimate p_l;
  double delta = 0.0;         // p_joint - p_k p_l
  double delta_stderr = 0.0;  // delta method on the indicator triple

  bool holds(double sigmas) const { return delta >= -sigmas * delta_stderr; }
};

// All three probabilities come from the same draws. K constrains coordinates
// [0, n1), L constrains [n1, n).
inline GciReport gci_check(const CovMatrix& c, std::size_t n1, const BoxSpec& box, std::size_t samples,
                           std::uint64_t seed) {
  detail::check_box(c, box);
  const std::size_t n = c.n();
  if (n1 < 1 || n1 >= n) throw InputError("gci_check: need 1 <= n1 < n");
  if (samples < kMinBoxSamples) throw InputError("gci_check: need at least 1000 samples");
  const auto active = detail::active_coordinates(c, box);
  struct Counts {
    std::size_t k = 0, l = 0, kl = 0;
  };
  auto parts = map_chunks<Counts>(samples, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    RandomStream rng(seed, chunk);
    Vector x(n), z(n);
    Counts cnt;
    for (std::size_t s = begin; s < end; ++s) {
      sample_gaussian(c, rng, x, z);
      const bool in_k = detail::inside(x, box, active, 0, n1);
      const bool in_l = detail::inside(x, box, active, n1, n);
      cnt.k += in_k;
      cnt.l += in_l;
      cnt.kl += in_k && in_l;
    }
    return cnt;
  });
  Counts total;
  for (const auto& p : parts) {
    total.k += p.k;
    total.l += p.l;
    total.kl += p.kl;
  }
  GciReport rep;
  rep.p_joint = detail::binomial_estimate(total.kl, samples, seed);
  rep.p_k = detail::binomial_estimate(total.k, samples, seed);
  rep.p_l = detail::binomial_estimate(total.l, samples, seed);
  const double a = rep.p_joint.value, b = rep.p_k.value, cc = rep.p_l.value;
  rep.delta = a - b * cc;
  // Var(I_KL - c I_K - b I_L); every second moment reduces to a, b or c because
  // I_KL = I_K I_L.
  const double var = a * (1 - a) + cc * cc * b * (1 - b) + b * b * cc * (1 - cc) - 2 * cc * (a - a * b) -
                     2 * b * (a - a * cc) + 2 * b * cc * (a - b * cc);
  rep.delta_stderr = std::sqrt(std::max(0.0, var) / static_cast<double>(samples));
  return rep;
}

struct SweepViolation {
  std::size_t index = 0;  // decrease between grid points index and index + 1
  double deficit = 0.0;

  friend bool operator==(const SweepViolation&, const SweepViolation&) = default;
};

struct SweepReport {
  std::vector<double> tau_grid;
  std::vector<Estimate> estimates;
  std::vector<Estimate> differences;  // paired P(tau_{g+1}) - P(tau_g)
  std::vector<SweepViolation> violations;
};

inline constexpr double kSweepFlagSigmas = 3.0;

// P(box) under C(tau) on an equally spaced grid of [0, 1]. Every grid point
// transforms the same standard normal draws through chol(C(tau)), and a
// decrease between neighbours is flagged when it exceeds 3 paired standard
// errors.
inline SweepReport tau_monotonicity_sweep(const TauFamily& f, const BoxSpec& box, std::size_t grid_size,
                                          std::size_t samples, std::uint64_t seed) {
  detail::check_box(f.cov(), box);
  if (grid_size < 2) throw InputError("tau_monotonicity_sweep: grid needs at least 2 points");
  if (samples < kMinBoxSamples) throw InputError("tau_monotonicity_sweep: need at least 1000 samples");
  const std::size_t n = f.n();
  const auto active = detail::active_coordinates(f.cov(), box);

  SweepReport rep;
  std::vector<Matrix> factors;
  for (std::size_t g = 0; g < grid_size; ++g) {
    const double tau = static_cast<double>(g) / static_cast<double>(grid_size - 1);
    rep.tau_grid.push_back(tau);
    factors.push_back(f.c_of_tau(tau).chol());
  }

  struct Counts {
    std::vector<std::size_t> hits, up, down;
  };
  auto parts = map_chunks<Counts>(samples, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    RandomStream rng(seed, chunk);
    Counts cnt{std::vector<std::size_t>(grid_size, 0), std::vector<std::size_t>(grid_size - 1, 0),
               std::vector<std::size_t>(grid_size - 1, 0)};
    Vector z(n), x(n);
    std::vector<char> in(grid_size);
    for (std::size_t s = begin; s < end; ++s) {
      rng.normals(z);
      for (std::size_t g = 0; g < grid_size; ++g) {
        const Matrix& l = factors[g];
        for (std::size_t i = 0; i < n; ++i) {
          double v = 0.0;
          for (std::size_t k = 0; k <= i; ++k) v += l(i, k) * z[k];
          x[i] = v;
        }
        in[g] = detail::inside(x, box, active, 0, n);
        cnt.hits[g] += in[g];
      }
      for (std::size_t g = 0; g + 1 < grid_size; ++g) {
        cnt.up[g] += in[g + 1] && !in[g];
        cnt.down[g] += in[g] && !in[g + 1];
      }
    }
    return cnt;
  });

  std::vector<std::size_t> hits(grid_size, 0), up(grid_size - 1, 0), down(grid_size - 1, 0);
  for (const auto& p : parts) {
    for (std::size_t g = 0; g < grid_size; ++g) hits[g] += p.hits[g];
    for (std::size_t g = 0; g + 1 < grid_size; ++g) {
      up[g] += p.up[g];
      down[g] += p.down[g];
    }
  }
  const double nn = static_cast<double>(samples);
  for (std::size_t g = 0; g < grid_size; ++g) rep.estimates.push_back(detail::binomial_estimate(hits[g], samples, seed));
  for (std::size_t g = 0; g + 1 < grid_size; ++g) {
    const double mean = (static_cast<double>(up[g]) - static_cast<double>(down[g])) / nn;
    const double var = std::max(0.0, (static_cast<double>(up[g] + down[g]) - nn * mean * mean) / (nn - 1.0));
    const Estimate d{mean, std::sqrt(var / nn), 0.0, samples, seed};
    rep.differences.push_back(d);
    if (mean < 0.0 && -mean > kSweepFlagSigmas * d.std_error) rep.violations.push_back({g, -mean});
  }
  return rep;
}

inline constexpr std::size_t kBoundaryNodes = 64;
inline constexpr std::size_t kMaxBoundaryDim = 4;

namespace detail {
// Per draw of Y, for every coordinate i: the kernel value (1/mu) g(s_i/mu, Y_i)
// and its integral over x in [0, s_i] by a 64-node Gauss-Legendre rule.
class BoundaryTerms {
 public:
  BoundaryTerms(const HDensity& h, const BoxSpec& box) : h_(h), n_(h.n()) {
    const double mu = h.mu();
    const auto& base = gauss_legendre(kBoundaryNodes);
    for (std::size_t i = 0; i < n_; ++i) {
      const double s = box.s()[i];
      point_.push_back(s / mu);
      QuadratureRule r = base.mapped(0.0, s);
      for (std::size_t m = 0; m < r.size(); ++m) {
        r.nodes[m] /= mu;
        r.weights[m] /= mu;
      }
      rules_.push_back(std::move(r));
    }
  }

  void draw(RandomStream& rng, std::span<double> y, std::span<double> z) const { h_.sampler().sample(rng, y, z); }

  double point(std::size_t i, double y) const { return h_.kernel()(point_[i], y) / h_.mu(); }

  double integral(std::size_t i, double y) const {
    const auto& r = rules_[i];
    double s = 0.0;
    for (std::size_t m = 0; m < r.size(); ++m) s += r.weights[m] * h_.kernel()(r.nodes[m], y);
    return s;
  }

 private:
  const HDensity& h_;
  std::size_t n_;
  std::vector<double> point_;
  std::vector<QuadratureRule> rules_;
};
}  // namespace detail

// int over prod_{j not in J} [0, s_j] of h_tau(s_J, x_{J^c}), with
// h_tau = h_{3, C(tau)}, s_i = t_i^2/2, and the expectation over Y by Monte Carlo.
inline Estimate boundary_integral(const TauFamily& f, const IndexSet& j, const BoxSpec& box, double tau,
                                  std::size_t samples, std::uint64_t seed) {
  detail::check_box(f.cov(), box);
  const std::size_t n = f.n();
  if (n > kMaxBoundaryDim) throw InputError("boundary_integral: dimension exceeds 4");
  j.check_within(n);
  const HDensity h(f.c_of_tau(tau), 3);
  const detail::BoundaryTerms terms(h, box);
  std::vector<char> in_j(n, 0);
  for (std::size_t i : j) in_j[i] = 1;
  return monte_carlo_mean(samples, seed, [&] {
    return [&, y = Vector(n), z = Vector(n)](RandomStream& rng) mutable {
      terms.draw(rng, y, z);
      double p = 1.0;
      for (std::size_t i = 0; i < n; ++i) p *= in_j[i] ? terms.point(i, y[i]) : terms.integral(i, y[i]);
      return p;
    };
  });
}

struct DecompositionReport {
  double tau = 0.0;
  Estimate finite_difference;           // central difference of quad_box_prob, bound = quadrature error
  Estimate decomposition;               // sum_J (1/2) a_J(tau) boundary_integral(J)
  Estimate residual;                    // finite_difference - decomposition
  std::vector<double> a;                // a_J(tau), index mask - 1
  std::vector<Estimate> boundary;       // boundary integrals, index mask - 1

  double allowance(double sigmas = 3.0, double slack = 1e-3) const {
    return sigmas * residual.std_error + slack;
  }
  bool agrees() const { return std::abs(residual.value) <= allowance(); }
  bool boundary_nonnegative(double sigmas = 3.0) const {
    for (const auto& b : boundary)
      if (b.value < -sigmas * b.std_error) return false;
    return true;
  }
};

inline constexpr std::size_t kMaxDecompositionDim = 3;
inline constexpr double kDecompositionStep = 0.02;

// Compares a central difference in tau (step 0.02) of the quadrature box
// probability with the a_J-weighted sum of boundary integrals. All boundary
// integrals share the same draws of Y.
inline DecompositionReport decomposition_check(const TauFamily& f, const BoxSpec& box, double tau,
                                               std::size_t samples, std::uint64_t seed) {
  detail::check_box(f.cov(), box);
  const std::size_t n = f.n();
  if (n > kMaxDecompositionDim) throw InputError("decomposition_check: dimension exceeds 3");
  constexpr double step = kDecompositionStep;
  if (!(tau >= step && tau <= 1.0 - step))
    throw InputError("decomposition_check: tau must lie in [0.02, 0.98]");

  DecompositionReport rep;
  rep.tau = tau;
  const Estimate plus = quad_box_prob(f.c_of_tau(tau + step), box);
  const Estimate minus = quad_box_prob(f.c_of_tau(tau - step), box);
  rep.finite_difference = {(plus.value - minus.value) / (2.0 * step), 0.0,
                           (plus.bound + minus.bound) / (2.0 * step), 0, 0};

  const std::size_t subsets = (std::size_t{1} << n) - 1;
  for (std::size_t mask = 1; mask <= subsets; ++mask) rep.a.push_back(f.a_j(IndexSet::from_mask(mask), tau));

  const HDensity h(f.c_of_tau(tau), 3);
  const detail::BoundaryTerms terms(h, box);
  auto moments = monte_carlo_moments(samples, seed, subsets + 1, [&] {
    return [&, y = Vector(n), z = Vector(n), pt = Vector(n), in = Vector(n)](RandomStream& rng,
                                                                          std::span<double> out) mutable {
      terms.draw(rng, y, z);
      for (std::size_t i = 0; i < n; ++i) {
        pt[i] = terms.point(i, y[i]);
        in[i] = terms.integral(i, y[i]);
      }
      double combined = 0.0;
      for (std::size_t mask = 1; mask <= subsets; ++mask) {
        double p = 1.0;
        for (std::size_t i = 0; i < n; ++i) p *= (mask >> i & 1u) ? pt[i] : in[i];
        out[mask - 1] = p;
        combined += 0.5 * rep.a[mask - 1] * p;
      }
      out[subsets] = combined;
    };
  });
  for (std::size_t k = 0; k < subsets; ++k) rep.boundary.push_back(moments[k].estimate(seed));
  rep.decomposition = moments[subsets].estimate(seed);
  rep.residual = {rep.finite_difference.value - rep.decomposition.value, rep.decomposition.std_error,
                  rep.finite_difference.bound, samples, seed};
  return rep;
}

}  // namespace gci
