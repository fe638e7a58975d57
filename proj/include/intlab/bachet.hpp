#pragma once

// Exact arithmetic on the elliptic curve y^2 - x^3 = c: the duplication
// (Bachet) map, chord-tangent group law, division polynomials, and the
// commuting multiplication-by-n family B_n with psi(n z) ... i.e.
// x(nP) = B_n(x(P)), B_2 = B.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "polynomial.hpp"
#include "rational.hpp"

namespace intlab::bachet {

/// Parameter of y^2 - x^3 = c. c = 0 is the singular cusp cubic and is
/// rejected: the duplication structure degenerates there.
struct Curve {
  BigRational c;
  explicit Curve(BigRational c_) : c(std::move(c_)) {
    if (c == 0) throw Error("curve parameter c must be nonzero");
  }
};

struct CurvePoint {
  bool infinity = true;
  BigRational x, y;

  static CurvePoint at_infinity() { return CurvePoint{}; }

  static CurvePoint affine(BigRational x, BigRational y, const Curve& curve) {
    if (y * y - x * x * x != curve.c)
      throw Error("point (" + to_string(x) + ", " + to_string(y) +
                  ") is not on y^2 - x^3 = " + to_string(curve.c));
    return CurvePoint{false, std::move(x), std::move(y)};
  }

  bool operator==(const CurvePoint& o) const {
    if (infinity || o.infinity) return infinity == o.infinity;
    return x == o.x && y == o.y;
  }
};

/// The Bachet map B(x) = (x^4 - 8 c x) / (4 (x^3 + c)) on the x-line;
/// poles (x^3 + c = 0) go to infinity.
inline std::optional<BigRational> bachet_x(const BigRational& x,
                                           const BigRational& c) {
  const BigRational den = 4 * (x * x * x + c);
  if (den == 0) return std::nullopt;
  return (x * x * x * x - 8 * c * x) / den;
}

/// Point version, using the displayed duplication formulas
///   x' = (x^4 - 8 c x) / (4 y^2),
///   y' = (-x^6 - 20 c x^3 + 8 c^2) / (8 y^3).
/// Note y' is the *negative* of the chord-tangent double's ordinate; both
/// signs give points of the curve.
inline CurvePoint bachet_point(const CurvePoint& p, const Curve& curve) {
  if (p.infinity || p.y == 0) return CurvePoint::at_infinity();
  const BigRational& x = p.x;
  const BigRational& y = p.y;
  const BigRational y2 = y * y;
  const BigRational x3 = x * x * x;
  const BigRational xn = (x * x3 - 8 * curve.c * x) / (4 * y2);
  const BigRational yn =
      (-x3 * x3 - 20 * curve.c * x3 + 8 * curve.c * curve.c) / (8 * y2 * y);
  return CurvePoint::affine(xn, yn, curve);
}

// -- chord-tangent group law (the independent oracle for B_n) ---------------

inline CurvePoint point_double(const CurvePoint& p, const Curve& curve) {
  if (p.infinity || p.y == 0) return CurvePoint::at_infinity();
  const BigRational s = (3 * p.x * p.x) / (2 * p.y);
  const BigRational x3 = s * s - 2 * p.x;
  const BigRational y3 = s * (p.x - x3) - p.y;
  return CurvePoint::affine(x3, y3, curve);
}

inline CurvePoint point_add(const CurvePoint& p, const CurvePoint& q,
                            const Curve& curve) {
  if (p.infinity) return q;
  if (q.infinity) return p;
  if (p.x == q.x) {
    if (p.y == -q.y) return CurvePoint::at_infinity();
    return point_double(p, curve);
  }
  const BigRational s = (q.y - p.y) / (q.x - p.x);
  const BigRational x3 = s * s - p.x - q.x;
  const BigRational y3 = s * (p.x - x3) - p.y;
  return CurvePoint::affine(x3, y3, curve);
}

inline CurvePoint point_mul(unsigned n, const CurvePoint& p, const Curve& curve) {
  CurvePoint acc = CurvePoint::at_infinity();
  for (unsigned i = 0; i < n; ++i) acc = point_add(acc, p, curve);
  return acc;
}

// -- division polynomials ----------------------------------------------------

namespace detail {

/// Element a(x) + b(x) y of Q[x, y]/(y^2 - x^3 - c).
struct CurveElem {
  Poly a, b;

  static CurveElem from_poly(Poly p) { return {std::move(p), Poly()}; }
  static CurveElem y_times(Poly p) { return {Poly(), std::move(p)}; }

  CurveElem mul(const CurveElem& o, const Poly& y2) const {
    // (a1 + b1 y)(a2 + b2 y) = a1 a2 + b1 b2 y^2 + (a1 b2 + a2 b1) y
    return {a * o.a + (b * o.b) * y2, a * o.b + o.a * b};
  }
  CurveElem mul_scalar(const BigRational& s) const { return {s * a, s * b}; }
  CurveElem sub(const CurveElem& o) const { return {a - o.a, b - o.b}; }
  CurveElem pow(unsigned e, const Poly& y2) const {
    CurveElem r = from_poly(Poly::constant(1));
    for (unsigned i = 0; i < e; ++i) r = r.mul(*this, y2);
    return r;
  }
};

/// psi_0..psi_max for y^2 = x^3 + c: odd indices are plain polynomials in x,
/// even indices are y times one. Seeds through psi_4, then
///   psi_{2m+1} = psi_{m+2} psi_m^3 - psi_{m-1} psi_{m+1}^3,
///   2y psi_{2m} = psi_m (psi_{m+2} psi_{m-1}^2 - psi_{m-2} psi_{m+1}^2).
inline std::vector<CurveElem> division_polys(const BigRational& c, unsigned max_n) {
  const Poly y2 = Poly({c, BigRational(0), BigRational(0), BigRational(1)});
  std::vector<CurveElem> psi(max_n + 1);
  psi[0] = CurveElem::from_poly(Poly());
  psi[1] = CurveElem::from_poly(Poly::constant(BigRational(1)));
  if (max_n >= 2) psi[2] = CurveElem::y_times(Poly::constant(BigRational(2)));
  if (max_n >= 3)
    psi[3] = CurveElem::from_poly(
        Poly({BigRational(0), 12 * c, BigRational(0), BigRational(0), BigRational(3)}));
  if (max_n >= 4)
    psi[4] = CurveElem::y_times(Poly({-32 * c * c, BigRational(0), BigRational(0),
                                      80 * c, BigRational(0), BigRational(0),
                                      BigRational(4)}));
  for (unsigned n = 5; n <= max_n; ++n) {
    const unsigned m = n / 2;
    if (n % 2 == 1) {
      psi[n] = psi[m + 2].mul(psi[m].pow(3, y2), y2)
                   .sub(psi[m - 1].mul(psi[m + 1].pow(3, y2), y2));
      if (!psi[n].b.is_zero())
        throw Error("division_polys: odd psi has a y part");
    } else {
      CurveElem t = psi[m].mul(
          psi[m + 2].mul(psi[m - 1].pow(2, y2), y2)
              .sub(psi[m - 2].mul(psi[m + 1].pow(2, y2), y2)),
          y2);
      // t is a plain polynomial; psi_n = t/(2y) = (t y)/(2 y^2)
      if (!t.b.is_zero()) throw Error("division_polys: even recursion parity");
      psi[n] = CurveElem::y_times(t.a.exact_div(BigRational(2) * y2));
    }
  }
  return psi;
}

} // namespace detail

/// x-coordinate multiplication-by-n map for y^2 = x^3 + c:
///   x_n = x - psi_{n-1} psi_{n+1} / psi_n^2,
/// an honest one-variable rational map after the y^2 reduction. B_2 equals
/// the Bachet map exactly as a reduced rational function.
inline RationalMap1D division_poly_map(int n, const BigRational& c) {
  if (n < 2 || n > 6) throw UnsupportedDegree(n);
  Curve curve(c);  // validates c != 0
  const auto psi = detail::division_polys(c, static_cast<unsigned>(n) + 1);
  const Poly y2 = Poly({c, BigRational(0), BigRational(0), BigRational(1)});

  auto as_poly = [&](const detail::CurveElem& e) -> Poly {
    // products below pair equal parities, so the result is y-free
    if (!e.b.is_zero()) throw Error("division_poly_map: unexpected y part");
    return e.a;
  };
  const Poly u = as_poly(psi[n - 1].mul(psi[n + 1], y2));
  const Poly v = as_poly(psi[n].mul(psi[n], y2));
  return RationalMap1D(Poly::x() * v - u, v);
}

// -- chains -------------------------------------------------------------------

struct Chain {
  Curve curve;
  std::vector<CurvePoint> points;
  std::vector<std::size_t> bit_lengths;  // max(num, den) bits of x per point
};

/// k successive images under the duplication formulas. Heights square each
/// step (~4x bit growth), so the total size is budgeted.
inline Chain chain(const CurvePoint& p0, const Curve& curve, int k,
                   std::size_t bit_budget = 1'000'000) {
  Chain out{curve, {p0}, {}};
  auto bits = [](const CurvePoint& p) -> std::size_t {
    if (p.infinity) return 1;
    return std::max(bit_size(p.x), bit_size(p.y));
  };
  out.bit_lengths.push_back(bits(p0));
  std::size_t total = out.bit_lengths.back();
  for (int i = 0; i < k; ++i) {
    out.points.push_back(bachet_point(out.points.back(), curve));
    out.bit_lengths.push_back(bits(out.points.back()));
    total += out.bit_lengths.back();
    if (total > bit_budget) throw BudgetExceeded(total, bit_budget);
  }
  return out;
}

inline nlohmann::ordered_json chain_to_json(const Chain& chain) {
  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["c_num"] = numerator(chain.curve.c).str();
  j["c_den"] = denominator(chain.curve.c).str();
  j["points"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < chain.points.size(); ++i) {
    const CurvePoint& p = chain.points[i];
    nlohmann::ordered_json jp;
    if (p.infinity) {
      jp["infinity"] = true;
    } else {
      jp["infinity"] = false;
      jp["x_num"] = numerator(p.x).str();
      jp["x_den"] = denominator(p.x).str();
      jp["y_num"] = numerator(p.y).str();
      jp["y_den"] = denominator(p.y).str();
    }
    jp["bits"] = chain.bit_lengths[i];
    j["points"].push_back(jp);
  }
  return j;
}

} // namespace intlab::bachet
