#pragma once

// Gauss-Legendre rules, fixed and adaptive 1-d integration, and tensor rules
// over boxes.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include "gci/errors.hpp"

namespace gci {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const noexcept { return nodes.size(); }

  // The same rule moved from [-1, 1] onto [a, b].
  QuadratureRule mapped(double a, double b) const {
    QuadratureRule r;
    r.nodes.resize(size());
    r.weights.resize(size());
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (std::size_t i = 0; i < size(); ++i) {
      r.nodes[i] = mid + half * nodes[i];
      r.weights[i] = half * weights[i];
    }
    return r;
  }
};

namespace detail {
inline QuadratureRule compute_gauss_legendre(std::size_t n) {
  QuadratureRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const std::size_t m = (n + 1) / 2;
  for (std::size_t i = 0; i < m; ++i) {
    // Tricomi initial guess, then Newton on P_n.
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = p2;
      }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0, p1 = x;
    for (std::size_t k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
      p0 = p1;
      p1 = p2;
    }
    dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) r.nodes[n / 2] = 0.0;
  return r;
}
}  // namespace detail

// n-point Gauss-Legendre rule on [-1, 1], nodes ascending. Rules are cached.
inline const QuadratureRule& gauss_legendre(std::size_t n) {
  if (n == 0) throw InputError("gauss_legendre: need at least one node");
  static std::mutex mutex;
  static std::map<std::size_t, std::unique_ptr<QuadratureRule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<QuadratureRule>(detail::compute_gauss_legendre(n));
  return *slot;
}

template <class Fn>
double integrate(Fn&& f, double a, double b, std::size_t nodes = 64) {
  const auto& r = gauss_legendre(nodes);
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * f(mid + half * r.nodes[i]);
  return half * s;
}

struct AdaptiveResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t evaluations = 0;
};

namespace detail {
template <class Fn>
void adaptive_step(Fn& f, double a, double b, double whole, double tol, int depth, AdaptiveResult& out) {
  const double mid = 0.5 * (a + b);
  const double left = integrate(f, a, mid, 15);
  const double right = integrate(f, mid, b, 15);
  out.evaluations += 30;
  const double diff = std::abs(left + right - whole);
  if (diff <= tol || diff <= 1e-15 * std::abs(left + right) || depth >= 30) {
    out.value += left + right;
    out.error += diff;
    return;
  }
  adaptive_step(f, a, mid, left, 0.5 * tol, depth + 1, out);
  adaptive_step(f, mid, b, right, 0.5 * tol, depth + 1, out);
}
}  // namespace detail

// Adaptive bisection with 15-point Gauss-Legendre panels; stops when a panel
// and its two halves agree within the panel's share of abs_tol.
template <class Fn>
AdaptiveResult integrate_adaptive(Fn&& f, double a, double b, double abs_tol = 1e-12) {
  AdaptiveResult out;
  const double whole = integrate(f, a, b, 15);
  out.evaluations = 15;
  detail::adaptive_step(f, a, b, whole, abs_tol, 0, out);
  return out;
}

// Integral over [a, inf) of an integrable function: adaptive panels on
// [a, a+1], [a+1, a+3], [a+3, a+7], ... until a panel contributes less than
// abs_tol and the integrand has decayed.
template <class Fn>
AdaptiveResult integrate_to_infinity(Fn&& f, double a = 0.0, double abs_tol = 1e-12) {
  AdaptiveResult out;
  double lo = a, width = 1.0;
  for (int panel = 0; panel < 200; ++panel) {
    const double hi = lo + width;
    auto part = integrate_adaptive(f, lo, hi, abs_tol);
    out.value += part.value;
    out.error += part.error;
    out.evaluations += part.evaluations;
    if (panel > 2 && std::abs(part.value) < abs_tol * 1e-2 && std::abs(f(hi)) * width < abs_tol * 1e-2)
      break;
    lo = hi;
    width *= 2.0;
  }
  return out;
}

// Tensor-product rule over the box prod_i [lower_i, upper_i]; f receives the
// node as std::span<const double>.
template <class Fn>
double integrate_box(Fn&& f, std::span<const double> lower, std::span<const double> upper,
                     std::size_t nodes_per_axis) {
  const std::size_t n = lower.size();
  if (upper.size() != n) throw InputError("integrate_box: bound length mismatch");
  if (n == 0) return f(std::span<const double>());
  const auto& base = gauss_legendre(nodes_per_axis);
  std::vector<QuadratureRule> axes;
  axes.reserve(n);
  for (std::size_t i = 0; i < n; ++i) axes.push_back(base.mapped(lower[i], upper[i]));

  std::vector<std::size_t> idx(n, 0);
  std::vector<double> point(n);
  double total = 0.0;
  while (true) {
    double w = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      point[i] = axes[i].nodes[idx[i]];
      w *= axes[i].weights[idx[i]];
    }
    total += w * f(std::span<const double>(point));
    std::size_t d = 0;
    while (d < n && ++idx[d] == nodes_per_axis) idx[d++] = 0;
    if (d == n) break;
  }
  return total;
}

}  // namespace gci
