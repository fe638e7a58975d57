#pragma once

// Univariate polynomials over exact rationals and one-variable rational
// maps with gcd reduction: the arithmetic behind the duplication map and
// its commuting family.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rational.hpp"

namespace intlab::bachet {

class Poly {
public:
  Poly() = default;
  explicit Poly(std::vector<BigRational> coeffs) : c_(std::move(coeffs)) {
    trim();
  }
  static Poly constant(const BigRational& v) { return Poly({v}); }
  static Poly x() { return Poly({BigRational(0), BigRational(1)}); }

  /// degree of the zero polynomial is -1
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  bool is_zero() const { return c_.empty(); }

  const BigRational& operator[](std::size_t i) const { return c_[i]; }
  const std::vector<BigRational>& coeffs() const { return c_; }
  const BigRational& leading() const { return c_.back(); }

  bool operator==(const Poly& o) const { return c_ == o.c_; }

  friend Poly operator+(const Poly& a, const Poly& b) {
    std::vector<BigRational> r(std::max(a.c_.size(), b.c_.size()));
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i < a.c_.size()) r[i] += a.c_[i];
      if (i < b.c_.size()) r[i] += b.c_[i];
    }
    return Poly(std::move(r));
  }

  friend Poly operator-(const Poly& a, const Poly& b) {
    std::vector<BigRational> r(std::max(a.c_.size(), b.c_.size()));
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i < a.c_.size()) r[i] += a.c_[i];
      if (i < b.c_.size()) r[i] -= b.c_[i];
    }
    return Poly(std::move(r));
  }

  friend Poly operator*(const Poly& a, const Poly& b) {
    if (a.is_zero() || b.is_zero()) return Poly();
    std::vector<BigRational> r(a.c_.size() + b.c_.size() - 1);
    for (std::size_t i = 0; i < a.c_.size(); ++i) {
      if (a.c_[i] == 0) continue;
      for (std::size_t j = 0; j < b.c_.size(); ++j)
        r[i + j] += a.c_[i] * b.c_[j];
    }
    return Poly(std::move(r));
  }

  friend Poly operator*(const BigRational& s, const Poly& p) {
    if (s == 0) return Poly();
    std::vector<BigRational> r = p.c_;
    for (auto& v : r) v *= s;
    return Poly(std::move(r));
  }

  BigRational eval(const BigRational& x) const {
    BigRational acc = 0;
    for (std::size_t i = c_.size(); i-- > 0;) acc = acc * x + c_[i];
    return acc;
  }

  Poly pow(unsigned e) const {
    Poly r = constant(1);
    for (unsigned i = 0; i < e; ++i) r = r * (*this);
    return r;
  }

  Poly monic() const {
    if (is_zero()) return *this;
    return (BigRational(1) / leading()) * (*this);
  }

  /// Euclidean division: returns (quotient, remainder).
  std::pair<Poly, Poly> divmod(const Poly& d) const {
    if (d.is_zero()) throw Error("polynomial division by zero");
    Poly q, r = *this;
    std::vector<BigRational> qc(std::max<int>(degree() - d.degree() + 1, 0));
    while (!r.is_zero() && r.degree() >= d.degree()) {
      const BigRational f = r.leading() / d.leading();
      const int shift = r.degree() - d.degree();
      qc[shift] = f;
      std::vector<BigRational> rc = r.c_;
      for (std::size_t i = 0; i < d.c_.size(); ++i)
        rc[i + shift] -= f * d.c_[i];
      rc.pop_back();  // leading term cancels exactly
      r = Poly(std::move(rc));
    }
    return {Poly(std::move(qc)), r};
  }

  /// Division known to be exact; throws if a remainder appears.
  Poly exact_div(const Poly& d) const {
    auto [q, r] = divmod(d);
    if (!r.is_zero()) throw Error("exact_div: nonzero remainder");
    return q;
  }

  std::size_t max_coeff_bits() const {
    std::size_t bits = 1;
    for (const auto& v : c_) bits = std::max(bits, bit_size(v));
    return bits;
  }

  std::string str(const std::string& var = "x") const {
    if (is_zero()) return "0";
    std::string out;
    for (std::size_t i = c_.size(); i-- > 0;) {
      if (c_[i] == 0) continue;
      if (!out.empty()) out += " + ";
      out += to_string(c_[i]);
      if (i >= 1) out += "*" + var;
      if (i >= 2) out += "^" + std::to_string(i);
    }
    return out;
  }

private:
  void trim() {
    while (!c_.empty() && c_.back() == 0) c_.pop_back();
  }
  std::vector<BigRational> c_;  // ascending powers, no trailing zeros
};

/// Monic gcd by the Euclidean algorithm (coefficients stay canonical since
/// every remainder is re-normalized to monic form).
inline Poly poly_gcd_euclid(Poly a, Poly b) {
  a = a.monic();
  b = b.monic();
  while (!b.is_zero()) {
    Poly r = a.divmod(b).second;
    a = std::move(b);
    b = r.monic();
  }
  return a;
}

namespace detail {

/// Image of the polynomial in F_p (coefficients as num * den^-1 mod p);
/// empty optional when a denominator vanishes mod p (prime unusable).
inline std::optional<std::vector<std::uint64_t>> poly_mod(const Poly& poly,
                                                          std::uint64_t p) {
  auto mod_of = [p](const BigInt& v) {
    BigInt r = v % static_cast<long long>(p);
    if (r < 0) r += static_cast<long long>(p);
    return r.convert_to<std::uint64_t>();
  };
  auto pow_mod = [p](std::uint64_t base, std::uint64_t e) {
    std::uint64_t acc = 1;
    while (e) {
      if (e & 1) acc = acc * base % p;
      base = base * base % p;
      e >>= 1;
    }
    return acc;
  };
  std::vector<std::uint64_t> out(poly.coeffs().size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::uint64_t den = mod_of(denominator(poly[i]));
    if (den == 0) return std::nullopt;
    out[i] = mod_of(numerator(poly[i])) * pow_mod(den, p - 2) % p;
  }
  while (!out.empty() && out.back() == 0) out.pop_back();
  return out;
}

inline std::size_t gcd_degree_mod(std::vector<std::uint64_t> a,
                                  std::vector<std::uint64_t> b,
                                  std::uint64_t p) {
  auto pow_mod = [p](std::uint64_t base, std::uint64_t e) {
    std::uint64_t acc = 1;
    while (e) {
      if (e & 1) acc = acc * base % p;
      base = base * base % p;
      e >>= 1;
    }
    return acc;
  };
  while (!b.empty()) {
    // a mod b
    const std::uint64_t inv = pow_mod(b.back(), p - 2);
    while (a.size() >= b.size()) {
      const std::uint64_t f = a.back() * inv % p;
      const std::size_t shift = a.size() - b.size();
      for (std::size_t i = 0; i < b.size(); ++i) {
        const std::uint64_t sub = f * b[i] % p;
        a[i + shift] = (a[i + shift] + p - sub) % p;
      }
      while (!a.empty() && a.back() == 0) a.pop_back();
      if (a.empty()) break;
    }
    std::swap(a, b);
  }
  return a.empty() ? 0 : a.size() - 1;
}

} // namespace detail

/// gcd with a modular shortcut: if the images in F_p are coprime, so are the
/// rationals (deg gcd_Q <= deg gcd_Fp) and the expensive rational remainder
/// sequence is skipped. Compositions of coprime maps hit this path.
inline Poly poly_gcd(const Poly& a, const Poly& b) {
  if (a.is_zero() || b.is_zero()) return poly_gcd_euclid(a, b);
  static constexpr std::uint64_t primes[] = {2147483647ull, 2147483629ull,
                                             2147483587ull};
  for (std::uint64_t p : primes) {
    const auto am = detail::poly_mod(a, p);
    const auto bm = detail::poly_mod(b, p);
    if (!am || !bm) continue;
    // leading coefficients must survive for the degree bound to hold
    if (am->size() != a.coeffs().size() || bm->size() != b.coeffs().size())
      continue;
    if (detail::gcd_degree_mod(*am, *bm, p) == 0)
      return Poly::constant(BigRational(1));
    break;
  }
  return poly_gcd_euclid(a, b);
}

/// One-variable rational map num/den, kept reduced (gcd = 1) with a monic
/// denominator.
struct RationalMap1D {
  Poly num, den;

  RationalMap1D() : num(Poly::x()), den(Poly::constant(1)) {}
  RationalMap1D(Poly n, Poly d) : num(std::move(n)), den(std::move(d)) {
    if (den.is_zero()) throw Error("RationalMap1D: zero denominator");
    normalize();
  }

  static RationalMap1D identity() { return RationalMap1D(); }

  void normalize() {
    const Poly g = poly_gcd(num, den);
    if (g.degree() > 0) {
      num = num.exact_div(g);
      den = den.exact_div(g);
    }
    const BigRational lead = den.leading();
    num = (BigRational(1) / lead) * num;
    den = (BigRational(1) / lead) * den;
  }

  bool operator==(const RationalMap1D& o) const {
    return num == o.num && den == o.den;
  }

  /// Evaluation; poles map to infinity (unset optional).
  std::optional<BigRational> eval(const BigRational& x) const {
    const BigRational d = den.eval(x);
    if (d == 0) return std::nullopt;
    return num.eval(x) / d;
  }

  std::size_t max_coeff_bits() const {
    return std::max(num.max_coeff_bits(), den.max_coeff_bits());
  }
};

/// Exact composition (f o g)(x) = f(g(x)), gcd-reduced. Substituting
/// g = p/q into f clears denominators by q^max(deg num, deg den).
inline RationalMap1D compose_maps(const RationalMap1D& f, const RationalMap1D& g,
                                  std::size_t bit_budget = (1u << 22)) {
  const int dn = f.num.degree(), dd = f.den.degree();
  const int dmax = std::max(dn, dd);

  // powers of p and q up to dmax
  std::vector<Poly> pp(dmax + 1), qq(dmax + 1);
  pp[0] = Poly::constant(1);
  qq[0] = Poly::constant(1);
  for (int k = 1; k <= dmax; ++k) {
    pp[k] = pp[k - 1] * g.num;
    qq[k] = qq[k - 1] * g.den;
  }
  auto substitute = [&](const Poly& poly) {
    Poly acc;
    for (int k = 0; k <= poly.degree(); ++k) {
      if (poly[k] == 0) continue;
      acc = acc + poly[k] * (pp[k] * qq[dmax - k]);
    }
    return acc;
  };
  Poly num = substitute(f.num);
  Poly den = substitute(f.den);
  if (num.max_coeff_bits() > bit_budget || den.max_coeff_bits() > bit_budget)
    throw BudgetExceeded(std::max(num.max_coeff_bits(), den.max_coeff_bits()),
                         bit_budget);
  return RationalMap1D(std::move(num), std::move(den));
}

} // namespace intlab::bachet
