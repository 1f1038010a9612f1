#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gci/parallel.hpp"
#include "gci/random.hpp"

namespace gci {

// A numerical value with its uncertainty. Monte Carlo results carry a standard
// error; deterministic quadrature leaves std_error at 0 and reports an error
// estimate in `bound`.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  double bound = 0.0;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const Estimate&, const Estimate&) = default;
};

// Running count/mean/M2 with Chan's pairwise merge.
struct Moments {
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++count;
    const double d = x - mean;
    mean += d / static_cast<double>(count);
    m2 += d * (x - mean);
  }

  void merge(const Moments& o) {
    if (o.count == 0) return;
    if (count == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(count), nb = static_cast<double>(o.count);
    const double n = na + nb;
    const double d = o.mean - mean;
    mean += d * nb / n;
    m2 += o.m2 + d * d * na * nb / n;
    count += o.count;
  }

  double variance() const { return count > 1 ? std::max(0.0, m2 / static_cast<double>(count - 1)) : 0.0; }
  double std_error() const { return count > 0 ? std::sqrt(variance() / static_cast<double>(count)) : 0.0; }

  Estimate estimate(std::uint64_t seed) const { return {mean, std_error(), 0.0, count, seed}; }
};

// Sample means of `width` per-draw quantities. `make_draw()` is called once
// per chunk and returns a callable `draw(stream, out)` that fills one sample;
// chunk c of the sample range reads from RandomStream(seed, c). Each chunk owns
// its callable, so per-draw scratch space lives inside it.
template <class MakeDraw>
std::vector<Moments> monte_carlo_moments(std::size_t samples, std::uint64_t seed, std::size_t width,
                                         MakeDraw&& make_draw) {
  auto partials = map_chunks<std::vector<Moments>>(
      samples, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        RandomStream stream(seed, chunk);
        auto draw = make_draw();
        std::vector<Moments> acc(width);
        std::vector<double> out(width);
        for (std::size_t i = begin; i < end; ++i) {
          draw(stream, std::span<double>(out));
          for (std::size_t k = 0; k < width; ++k) acc[k].add(out[k]);
        }
        return acc;
      });
  std::vector<Moments> total(width);
  for (const auto& p : partials)
    for (std::size_t k = 0; k < width; ++k) total[k].merge(p[k]);
  return total;
}

// Scalar version: `make_draw()` returns `draw(stream) -> double`.
template <class MakeDraw>
Estimate monte_carlo_mean(std::size_t samples, std::uint64_t seed, MakeDraw&& make_draw) {
  auto m = monte_carlo_moments(samples, seed, 1, [&] {
    return [draw = make_draw()](RandomStream& s, std::span<double> out) mutable { out[0] = draw(s); };
  });
  return m[0].estimate(seed);
}

}  // namespace gci
