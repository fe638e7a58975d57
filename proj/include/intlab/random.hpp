#pragma once

// Seeded random test fixtures (matrices, quadric states). Every randomized
// experiment takes an explicit seed; mt19937_64 keeps runs reproducible.

#include <random>

#include "linalg.hpp"

namespace intlab {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline SkewMatrix random_skew(std::size_t n, std::mt19937_64& rng,
                              double scale = 1.0) {
  SkewMatrix m(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      m.set(i, j, uniform(rng, -scale, scale));
  return m;
}

inline SymMatrix random_sym(std::size_t n, std::mt19937_64& rng,
                            double scale = 1.0) {
  SymMatrix s(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) s.set(i, j, uniform(rng, -scale, scale));
  return s;
}

/// Random rotation as a product of seeded Givens rotations.
inline Matrix random_orthogonal(std::size_t n, std::mt19937_64& rng) {
  Matrix q = Matrix::identity(n);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t r = p + 1; r < n; ++r) {
      const double th = uniform(rng, 0.0, 2.0 * M_PI);
      const double c = std::cos(th), s = std::sin(th);
      for (std::size_t k = 0; k < n; ++k) {
        const double a = q(k, p), b = q(k, r);
        q(k, p) = c * a - s * b;
        q(k, r) = s * a + c * b;
      }
    }
  return q;
}

/// Positive definite with eigenvalues in [lo, hi]: Q diag(d) Q^T.
inline SymMatrix random_pd(std::size_t n, std::mt19937_64& rng, double lo = 0.5,
                           double hi = 4.0) {
  const Matrix q = random_orthogonal(n, rng);
  Vec d(n);
  for (auto& v : d) v = uniform(rng, lo, hi);
  Matrix m(n, n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) m(i, j) += d[k] * q(i, k) * q(j, k);
  return SymMatrix::from_dense(m);
}

inline Vec random_unit(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec v(n);
  double r2 = 0.0;
  do {
    r2 = 0.0;
    for (auto& x : v) {
      x = gauss(rng);
      r2 += x * x;
    }
  } while (r2 < 1e-12);
  const double r = std::sqrt(r2);
  for (auto& x : v) x /= r;
  return v;
}

} // namespace intlab
