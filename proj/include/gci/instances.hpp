#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "gci/matrix_core.hpp"
#include "gci/random.hpp"

namespace gci {

// G G^T + 0.1 I with standard normal G, rescaled to unit diagonal.
inline CovMatrix random_spd(std::size_t dim, std::uint64_t seed) {
  if (dim < 1) throw InputError("random_spd: dimension must be positive");
  RandomStream rng(seed, 0xC0FFEE);
  Matrix g(dim, dim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) g(i, j) = rng.normal();
  Matrix c = g * g.transpose() + 0.1 * Matrix::identity(dim);
  std::vector<double> scale(dim);
  for (std::size_t i = 0; i < dim; ++i) scale[i] = 1.0 / std::sqrt(c(i, i));
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) c(i, j) *= scale[i] * scale[j];
  for (std::size_t i = 0; i < dim; ++i) c(i, i) = 1.0;
  return CovMatrix(symmetrized(std::move(c)));
}

// Uniform draws on [lo, hi).
inline std::vector<double> random_uniform_vector(std::size_t dim, double lo, double hi, std::uint64_t seed) {
  RandomStream rng(seed, 0xBEEF);
  std::vector<double> v(dim);
  for (double& x : v) x = lo + (hi - lo) * rng.uniform();
  return v;
}

}  // namespace gci
