#pragma once

// The series kernel
//   g_alpha(x, y) = e^{-x-y} sum_k x^{k+alpha-1} y^k / (Gamma(k+alpha) k!),
// the mixing vector Y built from C = mu I + A A^T, the mixed density
//   h(x) = E prod_i (1/mu) g_{alpha_i}(x_i/mu, Y_i)
// (h_{k,C} when every alpha_i = k/2), its mixed partial derivatives and its
// Laplace transform |I + Lambda C|^{-k/2}.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "gci/errors.hpp"
#include "gci/estimate.hpp"
#include "gci/matrix_core.hpp"
#include "gci/random.hpp"
#include "gci/special.hpp"

namespace gci {

class GammaKernel {
 public:
  static constexpr std::size_t kMaxTerms = 10000;

  struct Result {
    double value = 0.0;
    std::size_t terms = 0;
    double tail_bound = 0.0;  // bound on the discarded tail, relative to value
    bool capped = false;      // kMaxTerms reached before the tail bound was met
  };

  explicit GammaKernel(double alpha, double tolerance = 1e-12) : alpha_(alpha), tol_(tolerance) {
    if (!(alpha_ > 0.0) || !std::isfinite(alpha_)) throw DomainError("GammaKernel: alpha must be positive");
    if (!(tol_ > 0.0)) throw DomainError("GammaKernel: tolerance must be positive");
    for (std::size_t k = 0; k < kTable; ++k) lg_shift_[k] = log_gamma(static_cast<double>(k) + alpha_);
  }

  double alpha() const noexcept { return alpha_; }
  double tolerance() const noexcept { return tol_; }

  double operator()(double x, double y) const { return evaluate(x, y).value; }

  // Sums outward from the largest term. With r_k = t_{k+1}/t_k = xy/((k+alpha)(k+1))
  // decreasing in k, the terms are unimodal and each one-sided tail is bounded
  // by a geometric series: past term t_k it is at most t_k r/(1-r).
  Result evaluate(double x, double y) const {
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("g_alpha: x must be positive");
    if (!(y >= 0.0) || !std::isfinite(y)) throw DomainError("g_alpha: y must be nonnegative");
    Result res;
    const double lx = std::log(x);
    if (y == 0.0) {
      res.value = std::exp((alpha_ - 1.0) * lx - x - lg_shift_[0]);
      res.terms = 1;
      return res;
    }
    const double xy = x * y;
    const double ly = std::log(y);
    auto ratio = [&](double k) { return xy / ((k + alpha_) * (k + 1.0)); };

    const double disc = (alpha_ - 1.0) * (alpha_ - 1.0) + 4.0 * xy;
    const double kreal = 0.5 * (-(alpha_ + 1.0) + std::sqrt(disc));
    std::size_t mode = kreal > 0.0 ? static_cast<std::size_t>(std::ceil(kreal)) : 0;
    while (mode > 0 && ratio(static_cast<double>(mode - 1)) < 1.0) --mode;
    while (ratio(static_cast<double>(mode)) >= 1.0) ++mode;

    const double km = static_cast<double>(mode);
    const double log_anchor =
        (km + alpha_ - 1.0) * lx + km * ly - lg_shift(mode) - lg_factorial(mode) - x - y;

    const double half_tol = 0.5 * tol_;
    double sum = 1.0;
    std::size_t terms = 1;
    double upper_tail = 0.0, lower_tail = 0.0;

    double t = 1.0;
    for (std::size_t k = mode;; ++k) {
      const double r = ratio(static_cast<double>(k));
      const double tail = t * r / (1.0 - r);
      if (tail <= half_tol * sum) {
        upper_tail = tail;
        break;
      }
      if (terms >= kMaxTerms) {
        upper_tail = tail;
        res.capped = true;
        break;
      }
      t *= r;
      sum += t;
      ++terms;
    }

    t = 1.0;
    for (std::size_t k = mode; k > 0; --k) {
      const double kk = static_cast<double>(k);
      const double q = (kk - 1.0 + alpha_) * kk / xy;  // t_{k-1} / t_k
      if (q < 1.0) {
        const double tail = t * q / (1.0 - q);
        if (tail <= half_tol * sum) {
          lower_tail = tail;
          break;
        }
      }
      if (terms >= kMaxTerms) {
        lower_tail = std::numeric_limits<double>::infinity();
        res.capped = true;
        break;
      }
      t *= q;
      sum += t;
      ++terms;
    }

    res.value = std::exp(log_anchor + std::log(sum));
    res.terms = terms;
    res.tail_bound = (upper_tail + lower_tail) / sum;
    return res;
  }

 private:
  static constexpr std::size_t kTable = 64;

  double lg_shift(std::size_t k) const {
    return k < kTable ? lg_shift_[k] : log_gamma(static_cast<double>(k) + alpha_);
  }

  static double lg_factorial(std::size_t k) {
    static const std::array<double, kTable> table = [] {
      std::array<double, kTable> t{};
      for (std::size_t i = 1; i < kTable; ++i) t[i] = t[i - 1] + std::log(static_cast<double>(i));
      return t;
    }();
    return k < kTable ? table[k] : log_gamma(static_cast<double>(k) + 1.0);
  }

  double alpha_;
  double tol_;
  std::array<double, kTable> lg_shift_{};
};

// |central difference (step 1e-5) of g_alpha in x - (g_{alpha-1} - g_alpha)|.
inline double g_alpha_recurrence_residual(const GammaKernel& kern, double x, double y) {
  if (!(kern.alpha() > 1.0)) throw DomainError("recurrence check needs alpha > 1");
  constexpr double h = 1e-5;
  if (!(x > h)) throw DomainError("recurrence check needs x > 1e-5");
  const GammaKernel lower(kern.alpha() - 1.0, kern.tolerance());
  const double fd = (kern(x + h, y) - kern(x - h, y)) / (2.0 * h);
  return std::abs(fd - (lower(x, y) - kern(x, y)));
}

// (1 + mu lambda)^{-alpha} exp(-mu lambda y / (1 + mu lambda)), the Laplace
// transform in x of (1/mu) g_alpha(x/mu, y).
inline double marginal_laplace_factor(double alpha, double mu, double lambda, double y) {
  if (!(alpha > 0.0) || !(mu > 0.0)) throw DomainError("marginal_laplace_factor: alpha, mu must be positive");
  if (!(lambda >= 0.0) || !(y >= 0.0)) throw DomainError("marginal_laplace_factor: lambda, y must be nonnegative");
  const double ml = mu * lambda;
  return std::pow(1.0 + ml, -alpha) * std::exp(-ml * y / (1.0 + ml));
}

// Decomposition C = mu I + A A^T and the mixing vector
//   Y_i = sum_{l<k} ( sum_j a_ij g_j^{(l)} / sqrt(2 mu) )^2.
class MixingSampler {
 public:
  // mu = lambda_min(C) / 2, A = chol(C - mu I).
  explicit MixingSampler(CovMatrix c, unsigned k = 3)
      : MixingSampler(c, 0.5 * c.min_eigenvalue(), k) {}

  MixingSampler(CovMatrix c, double mu, unsigned k) : c_(std::move(c)), mu_(mu), k_(k) {
    if (!(mu_ > 0.0)) throw InputError("MixingSampler: mu must be positive");
    if (k_ < 1) throw InputError("MixingSampler: k must be at least 1");
    const std::size_t n = c_.n();
    if (c_.min_eigenvalue() - mu_ < -1e-12)
      throw InputError("MixingSampler: C - mu I is not positive semidefinite");
    Matrix rest = c_.entries() - mu_ * Matrix::identity(n);
    if (auto l = cholesky(rest, 1e-12)) {
      a_ = std::move(*l);
    } else {
      a_ = spectral_factor(rest);
    }
    if (max_abs_diff(a_ * a_.transpose(), rest) > 1e-10)
      throw ConsistencyError("MixingSampler: A A^T does not reproduce C - mu I");
    scaled_ = (1.0 / std::sqrt(2.0 * mu_)) * a_;
  }

  std::size_t n() const noexcept { return c_.n(); }
  unsigned k() const noexcept { return k_; }
  double mu() const noexcept { return mu_; }
  const CovMatrix& cov() const noexcept { return c_; }
  const Matrix& loading() const noexcept { return a_; }

  // Draws k * n standard normals. scratch needs n entries.
  void sample(RandomStream& rng, std::span<double> y, std::span<double> scratch) const {
    const std::size_t n = c_.n();
    std::fill(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n), 0.0);
    for (unsigned l = 0; l < k_; ++l) {
      rng.normals(scratch.first(n));
      for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += scaled_(i, j) * scratch[j];
        y[i] += s * s;
      }
    }
  }

  Vector sample(RandomStream& rng) const {
    Vector y(n()), z(n());
    sample(rng, y, z);
    return y;
  }

 private:
  // V diag(sqrt(max(d, 0))) for a positive semidefinite matrix.
  static Matrix spectral_factor(const Matrix& m) {
    const auto eig = jacobi_eigen(m);
    const std::size_t n = m.rows();
    Matrix f(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) f(i, k) = eig.vectors(i, k) * std::sqrt(std::max(0.0, eig.values[k]));
    return f;
  }

  CovMatrix c_;
  double mu_;
  unsigned k_;
  Matrix a_;
  Matrix scaled_;
};

// h_{k,C}: every shape equals k/2.
class HDensity {
 public:
  explicit HDensity(MixingSampler sampler)
      : sampler_(std::move(sampler)), kernel_(0.5 * sampler_.k()) {}

  explicit HDensity(const CovMatrix& c, unsigned k = 3) : HDensity(MixingSampler(c, k)) {}

  const MixingSampler& sampler() const noexcept { return sampler_; }
  double alpha() const noexcept { return kernel_.alpha(); }
  double mu() const noexcept { return sampler_.mu(); }
  std::size_t n() const noexcept { return sampler_.n(); }
  const GammaKernel& kernel() const noexcept { return kernel_; }

 private:
  MixingSampler sampler_;
  GammaKernel kernel_;
};

namespace detail {
inline void check_positive_point(std::span<const double> x, std::size_t n, const char* who) {
  if (x.size() != n) throw InputError(std::string(who) + ": point has wrong dimension");
  for (double v : x)
    if (!(v > 0.0)) throw DomainError(std::string(who) + ": coordinates must be positive");
}
}  // namespace detail

// Monte Carlo estimate of h(x) over `samples` draws of Y.
inline Estimate h_eval(const HDensity& h, std::span<const double> x, std::size_t samples,
                       std::uint64_t seed) {
  const std::size_t n = h.n();
  detail::check_positive_point(x, n, "h_eval");
  const double mu = h.mu();
  Vector scaled(n);
  for (std::size_t i = 0; i < n; ++i) scaled[i] = x[i] / mu;
  return monte_carlo_mean(samples, seed, [&] {
    return [&, y = Vector(n), z = Vector(n)](RandomStream& rng) mutable {
      h.sampler().sample(rng, y, z);
      double p = 1.0;
      for (std::size_t i = 0; i < n; ++i) p *= h.kernel()(scaled[i], y[i]) / mu;
      return p;
    };
  });
}

// (2/mu)^n prod_i (x_i/mu)^{alpha-1} (1 + x_i/mu), a pointwise bound on h.
inline double h_upper_bound(const HDensity& h, std::span<const double> x) {
  const std::size_t n = h.n();
  detail::check_positive_point(x, n, "h_upper_bound");
  const double mu = h.mu();
  double b = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = x[i] / mu;
    b *= (2.0 / mu) * std::pow(u, h.alpha() - 1.0) * (1.0 + u);
  }
  return b;
}

// E_Y prod_i marginal_laplace_factor(k/2, mu, lambda_i, Y_i) minus
// |I + Lambda C|^{-k/2}; the standard error is that of the Monte Carlo mean.
inline Estimate h_laplace_check(const HDensity& h, std::span<const double> lambda, std::size_t samples,
                                std::uint64_t seed) {
  const std::size_t n = h.n();
  if (lambda.size() != n) throw InputError("h_laplace_check: lambda has wrong length");
  for (double l : lambda)
    if (!(l >= 0.0)) throw InputError("h_laplace_check: lambda entries must be nonnegative");
  const double mu = h.mu(), alpha = h.alpha();
  Vector front(n), rate(n);
  for (std::size_t i = 0; i < n; ++i) {
    front[i] = std::pow(1.0 + mu * lambda[i], -alpha);
    rate[i] = mu * lambda[i] / (1.0 + mu * lambda[i]);
  }
  Estimate e = monte_carlo_mean(samples, seed, [&] {
    return [&, y = Vector(n), z = Vector(n)](RandomStream& rng) mutable {
      h.sampler().sample(rng, y, z);
      double p = 1.0, expo = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        p *= front[i];
        expo += rate[i] * y[i];
      }
      return p * std::exp(-expo);
    };
  });
  const double closed = std::pow(det_identity_plus_scaled(h.sampler().cov(), lambda), -alpha);
  e.value -= closed;
  return e;
}

// Mixed partial d^{|J|} h / dx_J. Differentiating (1/mu) g_alpha(x/mu, y) in x
// gives (1/mu^2)(g_{alpha-1} - g_alpha)(x/mu, y), so per draw of Y the
// alternating sum over shape shifts delta in {0,1}^J collapses to a product of
// differences; all 2^{|J|} terms share the same Y.
inline Estimate h_partial(const HDensity& h, const IndexSet& j, std::span<const double> x,
                          std::size_t samples, std::uint64_t seed) {
  const std::size_t n = h.n();
  if (h.sampler().k() < 3) throw DomainError("h_partial: needs k >= 3 so that every shape stays above 1");
  detail::check_positive_point(x, n, "h_partial");
  j.check_within(n);
  const double mu = h.mu();
  const GammaKernel lower(h.alpha() - 1.0, h.kernel().tolerance());
  Vector scaled(n);
  for (std::size_t i = 0; i < n; ++i) scaled[i] = x[i] / mu;
  std::vector<char> differentiated(n, 0);
  for (std::size_t i : j) differentiated[i] = 1;
  return monte_carlo_mean(samples, seed, [&] {
    return [&, y = Vector(n), z = Vector(n)](RandomStream& rng) mutable {
      h.sampler().sample(rng, y, z);
      double p = 1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double g = h.kernel()(scaled[i], y[i]);
        p *= differentiated[i] ? (lower(scaled[i], y[i]) - g) / (mu * mu) : g / mu;
      }
      return p;
    };
  });
}

}  // namespace gci
