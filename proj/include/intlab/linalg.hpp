#pragma once

// Small dense linear algebra for N <= ~10: role-typed symmetric/skew
// matrices, a cyclic Jacobi eigensolver, PSD square roots, determinants,
// characteristic polynomials and their complex roots.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <vector>

#include "errors.hpp"

namespace intlab {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline Vec operator+(Vec a, const Vec& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

inline Vec operator-(Vec a, const Vec& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
  return a;
}

inline Vec operator*(double s, Vec a) {
  for (double& x : a) x *= s;
  return a;
}

/// Dense row-major matrix, general shape.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), a_(rows * cols, 0.0) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  Matrix transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  Vec col(std::size_t j) const {
    Vec v(rows_);
    for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
    return v;
  }

  double frobenius() const {
    double s = 0.0;
    for (double x : a_) s += x * x;
    return std::sqrt(s);
  }

  Matrix& operator+=(const Matrix& o) {
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
    return *this;
  }
  Matrix& operator*=(double s) {
    for (double& x : a_) x *= s;
    return *this;
  }

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(double s, Matrix a) { return a *= s; }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const double aik = a(i, k);
        if (aik == 0.0) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  friend Vec operator*(const Matrix& a, const Vec& x) {
    Vec y(a.rows_, 0.0);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t j = 0; j < a.cols_; ++j) y[i] += a(i, j) * x[j];
    return y;
  }

private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> a_;
};

/// Symmetric matrix; packed upper triangle, so S(i,j) == S(j,i) exactly.
class SymMatrix {
public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t n) : n_(n), a_(n * (n + 1) / 2, 0.0) {}

  static SymMatrix diagonal(const Vec& d) {
    SymMatrix s(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) s.set(i, i, d[i]);
    return s;
  }

  static SymMatrix identity(std::size_t n) {
    return diagonal(Vec(n, 1.0));
  }

  /// Symmetrizes (A + A^T)/2 when the input is only approximately symmetric.
  static SymMatrix from_dense(const Matrix& m) {
    SymMatrix s(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t j = i; j < m.cols(); ++j)
        s.set(i, j, 0.5 * (m(i, j) + m(j, i)));
    return s;
  }

  std::size_t dim() const { return n_; }

  double operator()(std::size_t i, std::size_t j) const {
    return a_[index(i, j)];
  }
  void set(std::size_t i, std::size_t j, double v) { a_[index(i, j)] = v; }

  Matrix dense() const {
    Matrix m(n_, n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) m(i, j) = (*this)(i, j);
    return m;
  }

  double frobenius() const { return dense().frobenius(); }

private:
  std::size_t index(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    return i * n_ - i * (i + 1) / 2 + j;
  }
  std::size_t n_ = 0;
  std::vector<double> a_;
};

/// Skew-symmetric matrix; packed strict upper triangle, so M(i,j) == -M(j,i)
/// exactly and the diagonal is exactly zero.
class SkewMatrix {
public:
  SkewMatrix() = default;
  explicit SkewMatrix(std::size_t n) : n_(n), a_(n * (n - 1) / 2, 0.0) {}

  std::size_t dim() const { return n_; }
  std::size_t packed_size() const { return a_.size(); }

  double operator()(std::size_t i, std::size_t j) const {
    if (i == j) return 0.0;
    return i < j ? a_[index(i, j)] : -a_[index(j, i)];
  }
  /// Sets M(i,j) = v and M(j,i) = -v; requires i != j.
  void set(std::size_t i, std::size_t j, double v) {
    if (i < j)
      a_[index(i, j)] = v;
    else
      a_[index(j, i)] = -v;
  }

  const std::vector<double>& packed() const { return a_; }
  std::vector<double>& packed() { return a_; }

  static SkewMatrix from_packed(std::size_t n, const double* p) {
    SkewMatrix m(n);
    std::copy(p, p + m.a_.size(), m.a_.begin());
    return m;
  }

  Matrix dense() const {
    Matrix m(n_, n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) m(i, j) = (*this)(i, j);
    return m;
  }

  double frobenius() const {
    double s = 0.0;
    for (double x : a_) s += x * x;
    return std::sqrt(2.0 * s);
  }

private:
  std::size_t index(std::size_t i, std::size_t j) const {
    // strict upper triangle, row-major
    return i * n_ - i * (i + 1) / 2 - i - 1 + j;
  }
  std::size_t n_ = 0;
  std::vector<double> a_;
};

struct EigenDecomposition {
  Vec values;      // ascending
  Matrix vectors;  // orthonormal columns, vectors.col(k) <-> values[k]
};

/// Cyclic Jacobi eigensolver for symmetric matrices. Matrices here are tiny
/// (n <= ~10), so simplicity wins over speed.
inline EigenDecomposition sym_eigen(const SymMatrix& s) {
  const std::size_t n = s.dim();
  Matrix a = s.dense();
  Matrix q = Matrix::identity(n);

  const double scale = std::max(a.frobenius(), 1e-300);
  auto off_diag = [&]() {
    double r = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) r += a(i, j) * a(i, j);
    return std::sqrt(2.0 * r);
  };

  const int max_sweeps = 64;
  int sweep = 0;
  while (off_diag() > 1e-15 * scale) {
    if (++sweep > max_sweeps) throw EigenNonConvergence(off_diag());
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t r = p + 1; r < n; ++r) {
        const double apr = a(p, r);
        if (std::abs(apr) <= 1e-18 * scale) continue;
        const double theta = (a(r, r) - a(p, p)) / (2.0 * apr);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = t * c;
        // rows/cols p and r of A
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akr = a(k, r);
          a(k, p) = c * akp - sn * akr;
          a(k, r) = sn * akp + c * akr;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), ark = a(r, k);
          a(p, k) = c * apk - sn * ark;
          a(r, k) = sn * apk + c * ark;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double qkp = q(k, p), qkr = q(k, r);
          q(k, p) = c * qkp - sn * qkr;
          q(k, r) = sn * qkp + c * qkr;
        }
      }
  }

  EigenDecomposition e;
  e.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) e.values[i] = a(i, i);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return e.values[i] < e.values[j]; });
  Vec sorted(n);
  Matrix vecs(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    sorted[k] = e.values[order[k]];
    for (std::size_t i = 0; i < n; ++i) vecs(i, k) = q(i, order[k]);
  }
  e.values = std::move(sorted);
  e.vectors = std::move(vecs);
  return e;
}

/// Symmetric PSD square root via eigendecomposition. Throws
/// PositiveDefinitenessViolation when an eigenvalue dips below eps = 1e-12
/// (e.g. a modulation f(t) drove J0^2 + f(t) I out of the PD cone).
inline SymMatrix sym_sqrt_psd(const SymMatrix& s, double eps = 1e-12) {
  EigenDecomposition e = sym_eigen(s);
  const std::size_t n = s.dim();
  for (double v : e.values)
    if (v <= eps) throw PositiveDefinitenessViolation(e.values.front());
  Matrix root(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double sq = std::sqrt(e.values[k]);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        root(i, j) += sq * e.vectors(i, k) * e.vectors(j, k);
  }
  return SymMatrix::from_dense(root);
}

/// Determinant by LU with partial pivoting (destroys a local copy).
inline double det(Matrix a) {
  const std::size_t n = a.rows();
  double d = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      d = -d;
    }
    const double akk = a(k, k);
    if (akk == 0.0) return 0.0;
    d *= akk;
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a(i, k) / akk;
      for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
    }
  }
  return d;
}

/// Solves A x = b by Gaussian elimination with partial pivoting.
inline Vec solve(Matrix a, Vec b) {
  const std::size_t n = a.rows();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    if (std::abs(a(piv, k)) < 1e-300)
      throw Error("singular linear system in solve()");
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      std::swap(b[k], b[piv]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      b[i] -= f * b[k];
      for (std::size_t j = k; j < n; ++j) a(i, j) -= f * a(k, j);
    }
  }
  Vec x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
    x[i] = s / a(i, i);
  }
  return x;
}

/// Characteristic polynomial coefficients of a general real matrix by the
/// Faddeev-LeVerrier recursion: returns c with
///   det(A - mu I) = c[0] + c[1] mu + ... + c[n] mu^n.
inline Vec char_poly(const Matrix& a) {
  const std::size_t n = a.rows();
  // p(mu) = det(mu I - A) = mu^n + b_{n-1} mu^{n-1} + ... + b_0
  Matrix m = Matrix::identity(n);
  Vec b(n + 1, 0.0);
  b[n] = 1.0;
  for (std::size_t k = 1; k <= n; ++k) {
    m = a * m;
    double tr = 0.0;
    for (std::size_t i = 0; i < n; ++i) tr += m(i, i);
    const double bk = -tr / static_cast<double>(k);
    b[n - k] = bk;
    for (std::size_t i = 0; i < n; ++i) m(i, i) += bk;
  }
  // det(A - mu I) = (-1)^n det(mu I - A)
  if (n % 2 == 1)
    for (double& x : b) x = -x;
  return b;
}

/// All complex roots of a real polynomial (ascending coefficients) by the
/// Durand-Kerner iteration. Fine for the tiny degrees used here (n <= 6).
inline std::vector<std::complex<double>> poly_roots(const Vec& coeffs) {
  Vec c = coeffs;
  while (c.size() > 1 && c.back() == 0.0) c.pop_back();
  const std::size_t deg = c.size() - 1;
  std::vector<std::complex<double>> z(deg);
  if (deg == 0) return z;

  double radius = 0.0;
  for (std::size_t k = 0; k < deg; ++k)
    radius = std::max(radius, std::abs(c[k] / c[deg]));
  radius = 1.0 + radius;

  const std::complex<double> seed(0.4, 0.9);
  std::complex<double> w(1.0, 0.0);
  for (std::size_t i = 0; i < deg; ++i) {
    w *= seed;
    z[i] = radius * w;
  }
  auto eval = [&](std::complex<double> x) {
    std::complex<double> v = c[deg];
    for (std::size_t k = deg; k-- > 0;) v = v * x + c[k];
    return v;
  };
  for (int iter = 0; iter < 500; ++iter) {
    double moved = 0.0;
    for (std::size_t i = 0; i < deg; ++i) {
      std::complex<double> denom = c[deg];
      for (std::size_t j = 0; j < deg; ++j)
        if (j != i) denom *= (z[i] - z[j]);
      const std::complex<double> dz = eval(z[i]) / denom;
      z[i] -= dz;
      moved = std::max(moved, std::abs(dz));
    }
    if (moved < 1e-15 * radius) break;
  }
  std::sort(z.begin(), z.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return z;
}

/// Eigenvalues of a general real matrix (sorted by (re, im)).
inline std::vector<std::complex<double>> eigenvalues(const Matrix& a) {
  return poly_roots(char_poly(a));
}

} // namespace intlab
