#pragma once

// Hyperbolic toral automorphisms, their cotangent-bundle extension, and the
// two momenta-only first integrals F1 = p_u p_v and
// F2 = exp(-1/(p_u^2 p_v^2)) sin(2 pi log p_u^2 / log lambda^2).
//
// Eigen momenta are kept as (sign, log|p|): the dominant eigenvalue of a cat
// map is ~2.6, so plain doubles overflow after ~740 iterations while the log
// representation iterates exactly by adding +-log lambda.

#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>

#include "errors.hpp"
#include "linalg.hpp"

namespace intlab::catmap {

struct ToralAutomorphism {
  std::int64_t a11, a12, a21, a22;

  ToralAutomorphism(std::int64_t a11, std::int64_t a12, std::int64_t a21,
                    std::int64_t a22)
      : a11(a11), a12(a12), a21(a21), a22(a22) {
    if (det() != 1)
      throw Error("ToralAutomorphism: determinant must be +1");
    if (std::abs(trace()) <= 2)
      throw Error("ToralAutomorphism: |trace| must exceed 2 (hyperbolicity)");
  }

  std::int64_t trace() const { return a11 + a22; }
  std::int64_t det() const { return a11 * a22 - a12 * a21; }
};

struct HyperbolicData {
  double lambda;         // spectral radius, > 1
  double eig_dominant;   // signed dominant eigenvalue; == lambda for trace > 2
  double entropy;        // log lambda
  Matrix eigenbasis;     // columns: unit eigenvectors (dominant, recessive),
                         // positive first component
  Matrix eigenbasis_inv;
};

inline HyperbolicData hyperbolic_data(const ToralAutomorphism& a) {
  const double tr = static_cast<double>(a.trace());
  const double disc = std::sqrt(tr * tr - 4.0);
  const double sign = tr >= 0 ? 1.0 : -1.0;
  const double dominant = 0.5 * (tr + sign * disc);
  const double recessive = 1.0 / dominant;  // det = 1

  auto eigvec = [&](double e) {
    Vec v(2);
    if (a.a12 != 0) {
      v = {static_cast<double>(a.a12), e - static_cast<double>(a.a11)};
    } else {
      v = {e - static_cast<double>(a.a22), static_cast<double>(a.a21)};
    }
    double nrm = std::sqrt(v[0] * v[0] + v[1] * v[1]);
    if (v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0)) nrm = -nrm;
    v[0] /= nrm;
    v[1] /= nrm;
    return v;
  };

  HyperbolicData h;
  h.eig_dominant = dominant;
  h.lambda = std::abs(dominant);
  h.entropy = std::log(h.lambda);
  h.eigenbasis = Matrix(2, 2);
  const Vec vp = eigvec(dominant), vm = eigvec(recessive);
  h.eigenbasis(0, 0) = vp[0];
  h.eigenbasis(1, 0) = vp[1];
  h.eigenbasis(0, 1) = vm[0];
  h.eigenbasis(1, 1) = vm[1];
  const double d = vp[0] * vm[1] - vm[0] * vp[1];
  h.eigenbasis_inv = Matrix(2, 2);
  h.eigenbasis_inv(0, 0) = vm[1] / d;
  h.eigenbasis_inv(0, 1) = -vm[0] / d;
  h.eigenbasis_inv(1, 0) = -vp[1] / d;
  h.eigenbasis_inv(1, 1) = vp[0] / d;
  return h;
}

inline double mod1(double x) {
  double v = x - std::floor(x);
  if (v >= 1.0) v -= 1.0;
  return v;
}

/// One application of A on the torus, componentwise into [0, 1).
inline std::pair<double, double> torus_step(const ToralAutomorphism& a,
                                            double x1, double x2) {
  return {mod1(static_cast<double>(a.a11) * x1 + static_cast<double>(a.a12) * x2),
          mod1(static_cast<double>(a.a21) * x1 + static_cast<double>(a.a22) * x2)};
}

/// Point of T*T^2. Base point in [0,1)^2; covector stored through its eigen
/// components in (sign, log|.|) form, with the standard components derived.
struct ExtendedTorusState {
  double x1 = 0.0, x2 = 0.0;
  double log_pu = -std::numeric_limits<double>::infinity();
  double log_pv = -std::numeric_limits<double>::infinity();
  int sign_pu = 0, sign_pv = 0;

  static ExtendedTorusState from_standard(const HyperbolicData& h, double x1,
                                          double x2, double p1, double p2) {
    // covectors transform through E^T
    const Matrix& e = h.eigenbasis;
    const double pu = e(0, 0) * p1 + e(1, 0) * p2;
    const double pv = e(0, 1) * p1 + e(1, 1) * p2;
    return from_eigen(x1, x2, pu, pv);
  }

  static ExtendedTorusState from_eigen(double x1, double x2, double pu,
                                       double pv) {
    ExtendedTorusState s;
    s.x1 = mod1(x1);
    s.x2 = mod1(x2);
    s.sign_pu = pu > 0 ? 1 : (pu < 0 ? -1 : 0);
    s.sign_pv = pv > 0 ? 1 : (pv < 0 ? -1 : 0);
    if (s.sign_pu != 0) s.log_pu = std::log(std::abs(pu));
    if (s.sign_pv != 0) s.log_pv = std::log(std::abs(pv));
    return s;
  }

  double pu() const { return sign_pu == 0 ? 0.0 : sign_pu * std::exp(log_pu); }
  double pv() const { return sign_pv == 0 ? 0.0 : sign_pv * std::exp(log_pv); }

  /// Standard covector components (finite only while representable).
  std::pair<double, double> p_standard(const HyperbolicData& h) const {
    const Matrix& ei = h.eigenbasis_inv;  // p = E^{-T} (pu, pv)
    const double u = pu(), v = pv();
    return {ei(0, 0) * u + ei(1, 0) * v, ei(0, 1) * u + ei(1, 1) * v};
  }

  /// Eigen coordinates of the base-point representative.
  std::pair<double, double> uv(const HyperbolicData& h) const {
    const Matrix& ei = h.eigenbasis_inv;
    return {ei(0, 0) * x1 + ei(0, 1) * x2, ei(1, 0) * x1 + ei(1, 1) * x2};
  }
};

/// Cotangent lift of the cat map: base by A mod 1, covector by (A^{-1})^T,
/// i.e. (p_u, p_v) -> (p_u / e, e p_v) with e the dominant eigenvalue.
inline ExtendedTorusState extended_step(const ToralAutomorphism& a,
                                        const HyperbolicData& h,
                                        const ExtendedTorusState& s) {
  ExtendedTorusState out = s;
  std::tie(out.x1, out.x2) = torus_step(a, s.x1, s.x2);
  const double le = std::log(h.lambda);
  const int esign = h.eig_dominant >= 0 ? 1 : -1;
  out.log_pu = s.log_pu - le;
  out.log_pv = s.log_pv + le;
  out.sign_pu = s.sign_pu * esign;
  out.sign_pv = s.sign_pv * esign;
  return out;
}

/// F1 = p_u p_v (exactly invariant under the extended step).
inline double integral_F1(const ExtendedTorusState& s) {
  if (s.sign_pu == 0 || s.sign_pv == 0) return 0.0;
  return s.sign_pu * s.sign_pv * std::exp(s.log_pu + s.log_pv);
}

/// F2 = exp(-1/(p_u^2 p_v^2)) sin(2 pi log p_u^2 / log lambda^2), extended
/// by 0 at the critical level p_u = 0 or p_v = 0. The log of p_u^2 shifts by
/// exactly -log lambda^2 per step, so the sine argument moves by -2 pi.
inline double integral_F2(const ExtendedTorusState& s, const HyperbolicData& h) {
  if (s.sign_pu == 0 || s.sign_pv == 0) return 0.0;
  const double flat = std::exp(-std::exp(-2.0 * (s.log_pu + s.log_pv)));
  const double arg = 2.0 * M_PI * s.log_pu / std::log(h.lambda);
  return flat * std::sin(arg);
}

/// Plain-double forms of the integrals, for derivative probes in tests.
inline double f1_of(double pu, double pv) { return pu * pv; }
inline double f2_of(double pu, double pv, double lambda) {
  if (pu == 0.0 || pv == 0.0) return 0.0;
  const double s = pu * pu * pv * pv;
  return std::exp(-1.0 / s) *
         std::sin(2.0 * M_PI * std::log(pu * pu) / std::log(lambda * lambda));
}

// -- exact rational orbits ---------------------------------------------------

/// (n1/q, n2/q) with 0 <= ni < q. Float iteration of a hyperbolic map loses
/// all digits after ~50 steps; exact residue tracking keeps periods honest.
struct RationalTorusPoint {
  std::int64_t n1, n2, q;

  RationalTorusPoint(std::int64_t n1, std::int64_t n2, std::int64_t q)
      : n1(((n1 % q) + q) % q), n2(((n2 % q) + q) % q), q(q) {
    if (q <= 0) throw Error("RationalTorusPoint: denominator must be positive");
  }
  bool operator==(const RationalTorusPoint& o) const {
    return n1 == o.n1 && n2 == o.n2 && q == o.q;
  }
};

inline RationalTorusPoint rational_torus_step(const ToralAutomorphism& a,
                                              const RationalTorusPoint& p) {
  auto md = [&](std::int64_t v) { return ((v % p.q) + p.q) % p.q; };
  return RationalTorusPoint(md(md(a.a11) * p.n1 + md(a.a12) * p.n2),
                            md(md(a.a21) * p.n1 + md(a.a22) * p.n2), p.q);
}

/// Exact orbit period of a rational point (pigeonhole: at most q^2 states).
inline std::int64_t rational_orbit_period(const ToralAutomorphism& a,
                                          const RationalTorusPoint& p0) {
  RationalTorusPoint p = rational_torus_step(a, p0);
  std::int64_t k = 1;
  const std::int64_t limit = p0.q * p0.q + 1;
  while (!(p == p0)) {
    p = rational_torus_step(a, p);
    if (++k > limit) throw Error("rational_orbit_period: no return within q^2");
  }
  return k;
}

/// Multiplicative order of A acting on (Z/qZ)^2, by brute force.
inline std::int64_t matrix_order_mod(const ToralAutomorphism& a, std::int64_t q) {
  auto md = [&](std::int64_t v) { return ((v % q) + q) % q; };
  std::int64_t m11 = md(a.a11), m12 = md(a.a12), m21 = md(a.a21), m22 = md(a.a22);
  std::int64_t c11 = m11, c12 = m12, c21 = m21, c22 = m22;
  std::int64_t k = 1;
  const std::int64_t limit = q * q * q * q + 1;
  while (!(c11 == 1 % q && c22 == 1 % q && c12 == 0 && c21 == 0)) {
    const std::int64_t n11 = md(c11 * m11 + c12 * m21);
    const std::int64_t n12 = md(c11 * m12 + c12 * m22);
    const std::int64_t n21 = md(c21 * m11 + c22 * m21);
    const std::int64_t n22 = md(c21 * m12 + c22 * m22);
    c11 = n11; c12 = n12; c21 = n21; c22 = n22;
    if (++k > limit) throw Error("matrix_order_mod: no identity within bound");
  }
  return k;
}

} // namespace intlab::catmap
