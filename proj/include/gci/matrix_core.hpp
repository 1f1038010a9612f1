#pragma once

// Dense symmetric linear algebra for small covariance matrices (n <= ~20):
// Cholesky, LU determinants, cyclic Jacobi eigensolver, principal minors,
// symmetric inverse square roots and the two determinant identities
//
//   |I + A| = 1 + sum_{J != {}} |A_J|
//   |A| = |A11| |A22| |I - A11^{-1/2} A12 A22^{-1} A21 A11^{-1/2}|

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gci/errors.hpp"

namespace gci {

using Vector = std::vector<double>;

// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw InputError("Matrix: ragged initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix diagonal(std::span<const double> d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }

  const std::vector<double>& data() const noexcept { return data_; }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  double max_abs() const noexcept {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  double frobenius() const noexcept {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw InputError("Matrix product: shape mismatch");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

inline Matrix operator+(Matrix a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InputError("Matrix sum: shape mismatch");
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) += b(i, j);
  return a;
}

inline Matrix operator-(Matrix a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InputError("Matrix difference: shape mismatch");
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) -= b(i, j);
  return a;
}

inline Matrix operator*(double s, Matrix a) {
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) *= s;
  return a;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InputError("shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

// Averages A and A^T. Used after products that are symmetric in exact arithmetic.
inline Matrix symmetrized(Matrix a) {
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j) {
      const double v = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = v;
      a(j, i) = v;
    }
  return a;
}

// ---------------------------------------------------------------------------
// IndexSet

// A subset J of the coordinates, stored zero-based and strictly increasing.
// Bitmask form: bit i set <=> coordinate i (zero-based) is a member.
class IndexSet {
 public:
  IndexSet() = default;
  IndexSet(std::initializer_list<std::size_t> members) : members_(members) { normalize(); }
  explicit IndexSet(std::vector<std::size_t> members) : members_(std::move(members)) {
    normalize();
  }

  static IndexSet from_mask(std::uint64_t mask) {
    IndexSet s;
    for (std::size_t i = 0; mask != 0; ++i, mask >>= 1)
      if (mask & 1u) s.members_.push_back(i);
    return s;
  }

  static IndexSet range(std::size_t first, std::size_t last) {
    IndexSet s;
    for (std::size_t i = first; i < last; ++i) s.members_.push_back(i);
    return s;
  }

  std::uint64_t mask() const {
    std::uint64_t m = 0;
    for (std::size_t i : members_) {
      if (i >= 64) throw InputError("IndexSet: member too large for bitmask");
      m |= std::uint64_t{1} << i;
    }
    return m;
  }

  std::size_t size() const noexcept { return members_.size(); }
  bool empty() const noexcept { return members_.empty(); }
  std::size_t operator[](std::size_t k) const noexcept { return members_[k]; }
  auto begin() const noexcept { return members_.begin(); }
  auto end() const noexcept { return members_.end(); }

  bool contains(std::size_t i) const {
    return std::binary_search(members_.begin(), members_.end(), i);
  }

  // Throws InputError unless every member lies in [0, n).
  void check_within(std::size_t n) const {
    if (!members_.empty() && members_.back() >= n)
      throw InputError("IndexSet: index " + std::to_string(members_.back()) +
                       " out of range for dimension " + std::to_string(n));
  }

  IndexSet complement(std::size_t n) const {
    IndexSet c;
    for (std::size_t i = 0; i < n; ++i)
      if (!contains(i)) c.members_.push_back(i);
    return c;
  }

  bool disjoint(const IndexSet& other) const {
    for (std::size_t i : members_)
      if (other.contains(i)) return false;
    return true;
  }

  friend bool operator==(const IndexSet&, const IndexSet&) = default;

 private:
  void normalize() {
    std::sort(members_.begin(), members_.end());
    if (std::adjacent_find(members_.begin(), members_.end()) != members_.end())
      throw InputError("IndexSet: duplicate member");
  }

  std::vector<std::size_t> members_;
};

// A_{I,K}: rows from I, columns from K.
inline Matrix submatrix(const Matrix& a, const IndexSet& rows, const IndexSet& cols) {
  rows.check_within(a.rows());
  cols.check_within(a.cols());
  Matrix s(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) s(i, j) = a(rows[i], cols[j]);
  return s;
}

inline Matrix submatrix(const Matrix& a, const IndexSet& j) { return submatrix(a, j, j); }

// ---------------------------------------------------------------------------
// Factorizations

// Lower-triangular L with L L^T = A. Fails (nullopt) when any pivot drops to
// rel_pivot_tol * max diagonal entry or below.
inline std::optional<Matrix> cholesky(const Matrix& a, double rel_pivot_tol = 1e-12) {
  if (!a.square()) throw InputError("cholesky: matrix is not square");
  const std::size_t n = a.rows();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, a(i, i));
  if (!(max_diag > 0.0)) return std::nullopt;
  const double floor = rel_pivot_tol * max_diag;

  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > floor)) return std::nullopt;
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

// Determinant by LU with partial pivoting. Exactly singular input gives 0.
inline double det(const Matrix& a) {
  if (!a.square()) throw InputError("det: matrix is not square");
  const std::size_t n = a.rows();
  Matrix lu = a;
  double d = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(lu(r, c)) > std::abs(lu(p, c))) p = r;
    if (lu(p, c) == 0.0) return 0.0;
    if (p != c) {
      for (std::size_t k = 0; k < n; ++k) std::swap(lu(p, k), lu(c, k));
      d = -d;
    }
    const double piv = lu(c, c);
    d *= piv;
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = lu(r, c) / piv;
      if (f == 0.0) continue;
      for (std::size_t k = c + 1; k < n; ++k) lu(r, k) -= f * lu(c, k);
    }
  }
  return d;
}

struct SymmetricEigen {
  Vector values;  // ascending
  Matrix vectors; // column k belongs to values[k]
  int sweeps = 0;
};

// Cyclic Jacobi. Converged once the off-diagonal Frobenius norm falls below
// 1e-14 times the Frobenius norm of the input.
inline SymmetricEigen jacobi_eigen(const Matrix& input, int max_sweeps = 100) {
  if (!input.square()) throw InputError("jacobi_eigen: matrix is not square");
  const std::size_t n = input.rows();
  Matrix a = symmetrized(input);
  Matrix v = Matrix::identity(n);
  const double target = 1e-14 * a.frobenius();

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  int sweep = 0;
  for (; sweep < max_sweeps && off_norm() > target; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::hypot(theta, 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });
  SymmetricEigen out{Vector(n), Matrix(n, n), sweep};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

// V f(D) V^T for a symmetric matrix with eigen-decomposition V D V^T.
template <class Fn>
Matrix spectral_function(const SymmetricEigen& eig, Fn&& fn) {
  const std::size_t n = eig.values.size();
  Matrix out(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double fk = fn(eig.values[k]);
    for (std::size_t i = 0; i < n; ++i) {
      const double vik = eig.vectors(i, k) * fk;
      for (std::size_t j = 0; j < n; ++j) out(i, j) += vik * eig.vectors(j, k);
    }
  }
  return symmetrized(std::move(out));
}

// Symmetric B with B A B = I.
inline Matrix inv_sqrt(const Matrix& a) {
  if (!a.square()) throw InputError("inv_sqrt: matrix is not square");
  if (!cholesky(a)) throw InputError("inv_sqrt: matrix is not positive definite");
  return spectral_function(jacobi_eigen(a), [](double d) { return 1.0 / std::sqrt(d); });
}

// Inverse of an SPD matrix through its Cholesky factor.
inline Matrix spd_inverse(const Matrix& l) {
  const std::size_t n = l.rows();
  Matrix linv(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    linv(j, j) = 1.0 / l(j, j);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = j; k < i; ++k) s -= l(i, k) * linv(k, j);
      linv(i, j) = s / l(i, i);
    }
  }
  return symmetrized(linv.transpose() * linv);
}

inline double principal_minor(const Matrix& a, const IndexSet& j) {
  if (!a.square()) throw InputError("principal_minor: matrix is not square");
  j.check_within(a.rows());
  if (j.empty()) return 1.0;
  return det(submatrix(a, j));
}

// ---------------------------------------------------------------------------
// CovMatrix

// Symmetric strictly positive definite covariance. Symmetry is made exact at
// construction; the Cholesky factor and the ascending spectrum are computed
// once and never change afterwards.
class CovMatrix {
 public:
  static constexpr double kSymmetryTolerance = 1e-12;
  static constexpr double kPivotTolerance = 1e-12;

  explicit CovMatrix(Matrix entries) : entries_(std::move(entries)) {
    if (!entries_.square() || entries_.rows() == 0)
      throw InputError("CovMatrix: matrix must be square and non-empty");
    const std::size_t n = entries_.rows();
    for (double v : entries_.data())
      if (!std::isfinite(v)) throw InputError("CovMatrix: non-finite entry");
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (std::abs(entries_(i, j) - entries_(j, i)) > kSymmetryTolerance)
          throw InputError("CovMatrix: matrix is not symmetric");
    entries_ = symmetrized(std::move(entries_));
    auto l = cholesky(entries_, kPivotTolerance);
    if (!l) throw InputError("CovMatrix: matrix is not positive definite");
    chol_ = std::move(*l);
    spectrum_ = jacobi_eigen(entries_).values;
    if (!(spectrum_.front() > 0.0))
      throw InputError("CovMatrix: smallest eigenvalue is not positive");
  }

  CovMatrix(std::initializer_list<std::initializer_list<double>> rows) : CovMatrix(Matrix(rows)) {}

  std::size_t n() const noexcept { return entries_.rows(); }
  const Matrix& entries() const noexcept { return entries_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return entries_(i, j); }
  const Matrix& chol() const noexcept { return chol_; }
  const Vector& spectrum() const noexcept { return spectrum_; }
  double min_eigenvalue() const noexcept { return spectrum_.front(); }

  double det() const noexcept {
    double d = 1.0;
    for (std::size_t i = 0; i < n(); ++i) d *= chol_(i, i) * chol_(i, i);
    return d;
  }

  double log_det() const noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < n(); ++i) s += 2.0 * std::log(chol_(i, i));
    return s;
  }

  Matrix inverse() const { return spd_inverse(chol_); }

  CovMatrix sub(const IndexSet& j) const {
    if (j.empty()) throw InputError("CovMatrix::sub: empty index set");
    return CovMatrix(submatrix(entries_, j));
  }

 private:
  Matrix entries_;
  Matrix chol_;
  Vector spectrum_;
};

// |I + diag(lambda) C| through the SPD form I + L^{1/2} C L^{1/2}.
inline double det_identity_plus_scaled(const CovMatrix& c, std::span<const double> lambda) {
  const std::size_t n = c.n();
  if (lambda.size() != n) throw InputError("lambda has wrong length");
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(lambda[i] >= 0.0)) throw InputError("lambda entries must be nonnegative");
    for (std::size_t j = 0; j < n; ++j)
      m(i, j) = std::sqrt(lambda[i]) * c(i, j) * std::sqrt(lambda[j]);
    m(i, i) += 1.0;
  }
  auto l = cholesky(m, 0.0);
  if (!l) return det(m);
  double d = 1.0;
  for (std::size_t i = 0; i < n; ++i) d *= (*l)(i, i) * (*l)(i, i);
  return d;
}

// ---------------------------------------------------------------------------
// Determinant identities

inline constexpr std::size_t kMaxExpansionDim = 20;

// |det(I+A) - (1 + sum_J |A_J|)| / max(1, |det(I+A)|), subsets in bitmask order.
inline double det_expansion_check(const Matrix& a) {
  if (!a.square()) throw InputError("det_expansion_check: matrix is not square");
  const std::size_t n = a.rows();
  if (n > kMaxExpansionDim)
    throw InputError("det_expansion_check: dimension exceeds " + std::to_string(kMaxExpansionDim));
  const double lhs = det(Matrix::identity(n) + a);
  double rhs = 1.0;
  const std::uint64_t count = std::uint64_t{1} << n;
  for (std::uint64_t mask = 1; mask < count; ++mask)
    rhs += principal_minor(a, IndexSet::from_mask(mask));
  return std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs));
}

inline constexpr double kSchurClampTolerance = 1e-10;

// Eigenvalues (ascending) of C_{J1}^{-1/2} C_{J1 J2} C_{J2}^{-1} C_{J2 J1} C_{J1}^{-1/2}.
// Values within 1e-10 outside [0,1] are clamped; anything further out is
// returned unchanged so callers can report it.
inline Vector block_schur_eigs(const CovMatrix& c, const IndexSet& j1, const IndexSet& j2) {
  if (j1.empty() || j2.empty()) throw InputError("block_schur_eigs: index sets must be non-empty");
  if (!j1.disjoint(j2)) throw InputError("block_schur_eigs: index sets overlap");
  j1.check_within(c.n());
  j2.check_within(c.n());
  const Matrix& e = c.entries();
  const Matrix r1 = inv_sqrt(submatrix(e, j1));
  const Matrix r2 = inv_sqrt(submatrix(e, j2));
  // B = C_{J2}^{-1/2} C_{J2 J1} C_{J1}^{-1/2}; the target matrix is B^T B.
  const Matrix b = r2 * submatrix(e, j2, j1) * r1;
  Vector mu = jacobi_eigen(symmetrized(b.transpose() * b)).values;
  for (double& m : mu) {
    if (m < 0.0 && m >= -kSchurClampTolerance) m = 0.0;
    if (m > 1.0 && m <= 1.0 + kSchurClampTolerance) m = 1.0;
  }
  return mu;
}

// Relative difference between |A| and the block form of it for the split n1.
inline double block_det_check(const CovMatrix& a, std::size_t n1) {
  const std::size_t n = a.n();
  if (n1 < 1 || n1 >= n) throw InputError("block_det_check: need 1 <= n1 < n");
  const IndexSet first = IndexSet::range(0, n1);
  const IndexSet second = IndexSet::range(n1, n);
  const Matrix& e = a.entries();
  const Matrix a11 = submatrix(e, first);
  const Matrix a22 = submatrix(e, second);
  const Matrix r11 = inv_sqrt(a11);
  const Matrix a22inv = spd_inverse(*cholesky(a22));
  const Matrix inner = r11 * submatrix(e, first, second) * a22inv * submatrix(e, second, first) * r11;
  const double rhs = det(a11) * det(a22) * det(Matrix::identity(n1) - inner);
  const double lhs = det(e);
  return std::abs(lhs - rhs) / std::abs(lhs);
}

}  // namespace gci
