#pragma once

// Geodesics x'' = lambda B x on the quadric (Bx, x) = 1, the Joachimsthal
// integral F = |Bx|^2 (Bx', x'), the Gauss-map/reparametrization transform
// to the Neumann system q'' = -Bq + mu q on the unit sphere, and geodesic
// equivalence of the induced metric with dr^2 = (B dx, dx)/|Bx|^2 including
// its projective-chart extension across y0 = 0.

#include <cmath>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "constraints.hpp"
#include "linalg.hpp"
#include "ode.hpp"
#include "quadrature.hpp"

namespace intlab::quadrics {

/// Diagonal quadric data: b = diag(B), B = A^{-1}, all entries nonzero.
/// The quadric is (Bx, x) = 1; an ellipsoid iff all b_i > 0.
struct Quadric {
  Vec b;

  explicit Quadric(Vec b_) : b(std::move(b_)) {
    for (double v : b)
      if (v == 0.0 || !std::isfinite(v))
        throw Error("Quadric: diagonal entries of B must be finite and nonzero");
  }

  std::size_t ambient_dim() const { return b.size(); }  // n + 1
  bool is_ellipsoid() const {
    for (double v : b)
      if (v <= 0.0) return false;
    return true;
  }

  Vec bx(const Vec& x) const {
    Vec y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = b[i] * x[i];
    return y;
  }
  /// (Bu, v)
  double bform(const Vec& u, const Vec& v) const {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += b[i] * u[i] * v[i];
    return s;
  }
  /// (Au, v) with A = B^{-1}
  double aform(const Vec& u, const Vec& v) const {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i] / b[i];
    return s;
  }
};

struct GeodesicState {
  Vec x;   // position on the quadric
  Vec xp;  // unit-speed velocity, tangent: (Bx, xp) = 0
  double s = 0.0;
};

struct NeumannState {
  Vec q;   // unit vector
  Vec qp;  // tangent velocity: (q, qp) = 0
  double tau = 0.0;
};

inline double geodesic_state_defect(const GeodesicState& g, const Quadric& q) {
  const double c1 = std::abs(q.bform(g.x, g.x) - 1.0);
  const double c2 = std::abs(q.bform(g.x, g.xp));
  const double c3 = std::abs(norm(g.xp) - 1.0);
  return std::max({c1, c2, c3});
}

/// lambda = -(Bx', x') / |Bx|^2 (the multiplier enforcing (Bx, x) = 1).
inline double lagrange_multiplier(const GeodesicState& g, const Quadric& q) {
  const Vec bx = q.bx(g.x);
  const double r2 = dot(bx, bx);
  if (r2 <= 1e-24)
    throw DegeneratePoint("lagrange_multiplier: |Bx| vanishes");
  return -q.bform(g.xp, g.xp) / r2;
}

/// Joachimsthal integral F = |Bx|^2 (Bx', x'); constant along geodesics,
/// and lambda = -F / |Bx|^4.
inline double joachimsthal(const GeodesicState& g, const Quadric& q) {
  const Vec bx = q.bx(g.x);
  return dot(bx, bx) * q.bform(g.xp, g.xp);
}

inline std::pair<Vec, Vec> geodesic_rhs(const GeodesicState& g, const Quadric& q) {
  const double lambda = lagrange_multiplier(g, q);
  Vec acc = q.bx(g.x);
  for (double& v : acc) v *= lambda;
  return {g.xp, acc};
}

inline std::vector<Constraint> geodesic_constraints(const Quadric& q,
                                                    std::size_t dim) {
  auto split = [dim](const Vec& y) {
    return std::pair<Vec, Vec>(Vec(y.begin(), y.begin() + dim),
                               Vec(y.begin() + dim, y.end()));
  };
  Constraint on_quadric{
      [q, split](const Vec& y) {
        auto [x, xp] = split(y);
        return q.bform(x, x) - 1.0;
      },
      [q, split, dim](const Vec& y) {
        auto [x, xp] = split(y);
        Vec g(2 * dim, 0.0);
        for (std::size_t i = 0; i < dim; ++i) g[i] = 2.0 * q.b[i] * x[i];
        return g;
      }};
  Constraint tangency{
      [q, split](const Vec& y) {
        auto [x, xp] = split(y);
        return q.bform(x, xp);
      },
      [q, split, dim](const Vec& y) {
        auto [x, xp] = split(y);
        Vec g(2 * dim, 0.0);
        for (std::size_t i = 0; i < dim; ++i) {
          g[i] = q.b[i] * xp[i];
          g[dim + i] = q.b[i] * x[i];
        }
        return g;
      }};
  Constraint unit_speed{
      [split](const Vec& y) {
        auto [x, xp] = split(y);
        return dot(xp, xp) - 1.0;
      },
      [split, dim](const Vec& y) {
        auto [x, xp] = split(y);
        Vec g(2 * dim, 0.0);
        for (std::size_t i = 0; i < dim; ++i) g[dim + i] = 2.0 * xp[i];
        return g;
      }};
  return {on_quadric, tangency, unit_speed};
}

struct GeodesicTrajectory {
  std::vector<double> s;
  std::vector<Vec> x, xp;
  std::size_t steps = 0;
};

/// Integrates the geodesic with post-step projection back onto
/// {(Bx,x)=1, (Bx,x')=0, |x'|=1}.
inline GeodesicTrajectory integrate_geodesic(const GeodesicState& g0,
                                             const Quadric& q, double s_end,
                                             IntegratorConfig cfg) {
  const std::size_t dim = q.ambient_dim();
  if (geodesic_state_defect(g0, q) > 1e-8)
    throw Error("integrate_geodesic: initial state violates the constraints");

  auto rhs = [&q, dim](double, const Vec& y, Vec& dy) {
    GeodesicState g{Vec(y.begin(), y.begin() + dim),
                    Vec(y.begin() + dim, y.end()), 0.0};
    auto [dx, dxp] = geodesic_rhs(g, q);
    std::copy(dx.begin(), dx.end(), dy.begin());
    std::copy(dxp.begin(), dxp.end(), dy.begin() + dim);
  };
  cfg.post_step = projection_hook(geodesic_constraints(q, dim));

  Vec y0 = g0.x;
  y0.insert(y0.end(), g0.xp.begin(), g0.xp.end());
  Trajectory traj = integrate(rhs, y0, g0.s, g0.s + s_end, cfg);

  GeodesicTrajectory out;
  out.s = traj.times;
  out.steps = traj.steps;
  out.x.reserve(traj.size());
  out.xp.reserve(traj.size());
  for (const auto& y : traj.states) {
    out.x.emplace_back(y.begin(), y.begin() + dim);
    out.xp.emplace_back(y.begin() + dim, y.end());
  }
  return out;
}

// -- Neumann system -----------------------------------------------------------

/// mu = (Bq, q) - |q'|^2, the multiplier keeping |q| = 1.
inline double neumann_mu(const Vec& q, const Vec& qp, const Quadric& quad) {
  return quad.bform(q, q) - dot(qp, qp);
}

struct NeumannTrajectory {
  std::vector<double> tau;
  std::vector<Vec> q, qp;
  std::size_t steps = 0;

  NeumannState state_at(std::size_t i) const { return {q[i], qp[i], tau[i]}; }
};

inline std::vector<Constraint> neumann_constraints(std::size_t dim) {
  auto split = [dim](const Vec& y) {
    return std::pair<Vec, Vec>(Vec(y.begin(), y.begin() + dim),
                               Vec(y.begin() + dim, y.end()));
  };
  Constraint unit{[split](const Vec& y) {
                    auto [q, qp] = split(y);
                    return dot(q, q) - 1.0;
                  },
                  [split, dim](const Vec& y) {
                    auto [q, qp] = split(y);
                    Vec g(2 * dim, 0.0);
                    for (std::size_t i = 0; i < dim; ++i) g[i] = 2.0 * q[i];
                    return g;
                  }};
  Constraint tangent{[split](const Vec& y) {
                       auto [q, qp] = split(y);
                       return dot(q, qp);
                     },
                     [split, dim](const Vec& y) {
                       auto [q, qp] = split(y);
                       Vec g(2 * dim, 0.0);
                       for (std::size_t i = 0; i < dim; ++i) {
                         g[i] = qp[i];
                         g[dim + i] = q[i];
                       }
                       return g;
                     }};
  return {unit, tangent};
}

/// q'' = -Bq + mu q on |q| = 1, with post-step projection.
inline NeumannTrajectory integrate_neumann(const NeumannState& n0,
                                           const Quadric& quad, double tau_end,
                                           IntegratorConfig cfg) {
  const std::size_t dim = quad.ambient_dim();
  auto rhs = [&quad, dim](double, const Vec& y, Vec& dy) {
    const Vec q(y.begin(), y.begin() + dim);
    const Vec qp(y.begin() + dim, y.end());
    const double mu = neumann_mu(q, qp, quad);
    for (std::size_t i = 0; i < dim; ++i) {
      dy[i] = qp[i];
      dy[dim + i] = -quad.b[i] * q[i] + mu * q[i];
    }
  };
  cfg.post_step = projection_hook(neumann_constraints(dim));
  Vec y0 = n0.q;
  y0.insert(y0.end(), n0.qp.begin(), n0.qp.end());
  Trajectory traj = integrate(rhs, y0, n0.tau, n0.tau + tau_end, cfg);

  NeumannTrajectory out;
  out.tau = traj.times;
  out.steps = traj.steps;
  for (const auto& y : traj.states) {
    out.q.emplace_back(y.begin(), y.begin() + dim);
    out.qp.emplace_back(y.begin() + dim, y.end());
  }
  return out;
}

/// Neumann energy E = (1/2)|q'|^2 + (1/2)(Bq, q).
inline double neumann_energy(const Vec& q, const Vec& qp, const Quadric& quad) {
  return 0.5 * dot(qp, qp) + 0.5 * quad.bform(q, q);
}

// -- Knoerrer transform ---------------------------------------------------------

/// Moser's Psi_0(u, v) = (1 - (Au, u)) (Av, v) + (Au, v)^2 with A = B^{-1};
/// vanishes on transformed geodesics (for the F > 0 regime) and is conserved
/// along Neumann orbits.
inline double psi0(const Vec& u, const Vec& v, const Quadric& q) {
  return (1.0 - q.aform(u, u)) * q.aform(v, v) +
         q.aform(u, v) * q.aform(u, v);
}

/// Central projection y -> y/|y| (the Gauss map on the dual quadric).
inline Vec central_projection(const Vec& y) {
  const double r = norm(y);
  if (r <= 0.0) throw Error("central_projection: zero vector");
  Vec q = y;
  for (double& v : q) v /= r;
  return q;
}

struct KnoerrerSamples {
  std::vector<double> tau;   // reparametrized time, d tau = alpha ds
  std::vector<Vec> q;        // Gauss map Bx/|Bx|
  std::vector<Vec> dq;       // dq/dtau
  double F = 0.0;            // Joachimsthal value (sign fixes the regime)
  double regime = 1.0;       // sign(F): B_eff = regime * B
  Quadric effective;         // B_eff, the matrix of the target Neumann system

  NeumannState initial_state() const { return {q.front(), dq.front(), 0.0}; }
};

/// Applies the Gauss map q = Bx/|Bx| and the reparametrization
/// d tau = alpha ds, alpha = sqrt(-lambda) = sqrt(|F|)/|Bx|^2, to a sampled
/// geodesic. The sign regime is fixed once per trajectory from sign(-F):
/// for F > 0 the image solves q'' = -Bq + mu q; for F < 0 it solves the
/// Neumann system of B_eff = -B. Straight-line generators (F = 0) have
/// lambda = 0 identically and the transform is undefined.
inline KnoerrerSamples knoerrer_transform(const GeodesicTrajectory& traj,
                                          const Quadric& quad) {
  if (traj.s.size() < 3)
    throw Error("knoerrer_transform: need at least 3 samples");
  const GeodesicState g0{traj.x.front(), traj.xp.front(), traj.s.front()};
  const double F = joachimsthal(g0, quad);
  if (std::abs(F) <= 1e-12)
    throw KnoerrerUndefined(
        "Joachimsthal integral vanishes (straight-line generator): the "
        "reparametrization dtau = sqrt(-lambda) ds degenerates");

  KnoerrerSamples out{{}, {}, {}, F, F > 0 ? 1.0 : -1.0, quad};
  Vec beff = quad.b;
  for (double& v : beff) v *= out.regime;
  out.effective = Quadric(beff);

  std::vector<double> alpha(traj.s.size());
  for (std::size_t i = 0; i < traj.s.size(); ++i) {
    const GeodesicState g{traj.x[i], traj.xp[i], traj.s[i]};
    const double lambda = lagrange_multiplier(g, quad);
    alpha[i] = std::sqrt(std::abs(lambda));
    const Vec bx = quad.bx(g.x);
    const double r = norm(bx);
    Vec q = bx;
    for (double& v : q) v /= r;
    // dq/ds = Bx'/r - q (q . Bx')/r, then dq/dtau = (dq/ds)/alpha
    const Vec bxp = quad.bx(g.xp);
    const double proj = dot(q, bxp);
    Vec dq(q.size());
    for (std::size_t k = 0; k < q.size(); ++k)
      dq[k] = (bxp[k] - proj * q[k]) / (r * alpha[i]);
    out.q.push_back(std::move(q));
    out.dq.push_back(std::move(dq));
  }
  out.tau = cumulative_quadrature(traj.s, alpha);
  return out;
}

/// Max centered-difference residual ||d^2q/dtau^2 + B_eff q - mu q|| over
/// interior samples, mu = (B_eff q, q) - |dq/dtau|^2. Second derivatives use
/// the nonuniform 3-point formula; the error is O(h^2) on smoothly graded
/// grids, halving ~4x under 2x refinement.
inline double neumann_residual(const KnoerrerSamples& k) {
  const Quadric& quad = k.effective;
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < k.tau.size(); ++i) {
    const double h0 = k.tau[i] - k.tau[i - 1];
    const double h1 = k.tau[i + 1] - k.tau[i];
    const double mu = neumann_mu(k.q[i], k.dq[i], quad);
    double res2 = 0.0;
    for (std::size_t c = 0; c < k.q[i].size(); ++c) {
      const double qdd = 2.0 * (k.q[i - 1][c] / (h0 * (h0 + h1)) -
                                k.q[i][c] / (h0 * h1) +
                                k.q[i + 1][c] / (h1 * (h0 + h1)));
      const double r = qdd + quad.b[c] * k.q[i][c] - mu * k.q[i][c];
      res2 += r * r;
    }
    worst = std::max(worst, std::sqrt(res2));
  }
  return worst;
}

/// Psi_0 along the transformed samples: .first with the plain A = B^{-1} of
/// the source quadric, .second with A_eff = B_eff^{-1} (they agree for
/// F > 0; only the regime-adjusted one vanishes on F < 0 orbits).
inline std::pair<double, double> knoerrer_psi0_max(const KnoerrerSamples& k,
                                                   const Quadric& quad) {
  double plain = 0.0, adjusted = 0.0;
  for (std::size_t i = 0; i < k.q.size(); ++i) {
    plain = std::max(plain, std::abs(psi0(k.dq[i], k.q[i], quad)));
    adjusted = std::max(adjusted, std::abs(psi0(k.dq[i], k.q[i], k.effective)));
  }
  return {plain, adjusted};
}

// -- geodesic equivalence: dr^2 = (B dx, dx)/|Bx|^2 -----------------------------

namespace detail {

/// Graph chart over coordinate k: x_k = sgn * sqrt((1 - sum_{i!=k} b_i u_i^2)/b_k).
struct Chart {
  int k = 0;
  double sgn = 1.0;
};

inline double chart_quality(const Quadric& q, const Vec& x, int k) {
  return std::abs(q.b[k] * x[k] * x[k]);
}

inline Chart best_chart(const Quadric& q, const Vec& x) {
  Chart c;
  double best = -1.0;
  for (int k = 0; k < static_cast<int>(x.size()); ++k) {
    const double quality = chart_quality(q, x, k);
    if (quality > best) {
      best = quality;
      c.k = k;
      c.sgn = x[k] >= 0 ? 1.0 : -1.0;
    }
  }
  if (best <= 1e-14)
    throw ChartSwitch("no valid graph chart at the current point");
  return c;
}

inline Vec chart_drop(const Vec& x, int k) {
  Vec u;
  u.reserve(x.size() - 1);
  for (std::size_t i = 0; i < x.size(); ++i)
    if (static_cast<int>(i) != k) u.push_back(x[i]);
  return u;
}

inline Vec chart_lift(const Quadric& q, const Chart& c, const Vec& u) {
  double rest = 0.0;
  std::size_t m = 0;
  Vec x(q.ambient_dim());
  for (std::size_t i = 0; i < x.size(); ++i)
    if (static_cast<int>(i) != c.k) {
      x[i] = u[m++];
      rest += q.b[i] * x[i] * x[i];
    }
  const double rho = (1.0 - rest) / q.b[c.k];
  if (rho <= 0.0)
    throw ChartSwitch("left the validity region of the current chart");
  x[c.k] = c.sgn * std::sqrt(rho);
  return x;
}

/// d x / d u, with dx_k/du_i = -b_i u_i / (b_k x_k).
inline Matrix chart_jacobian(const Quadric& q, const Chart& c, const Vec& u,
                             const Vec& x) {
  const std::size_t n = u.size();
  Matrix j(n + 1, n);
  std::size_t m = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (static_cast<int>(i) != c.k) {
      j(i, m) = 1.0;
      j(c.k, m) = -q.b[i] * u[m] / (q.b[c.k] * x[c.k]);
      ++m;
    }
  return j;
}

/// Pullback of dr^2 to the chart: g = J^T B J / |Bx|^2.
inline Matrix dr2_chart_metric(const Quadric& q, const Chart& c, const Vec& u) {
  const Vec x = chart_lift(q, c, u);
  const Matrix j = chart_jacobian(q, c, u, x);
  const Vec bx = q.bx(x);
  const double r2 = dot(bx, bx);
  const std::size_t n = u.size();
  Matrix g(n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t bcol = 0; bcol < n; ++bcol) {
      double s = 0.0;
      for (std::size_t i = 0; i <= n; ++i) s += j(i, a) * q.b[i] * j(i, bcol);
      g(a, bcol) = s / r2;
    }
  return g;
}

/// Christoffel symbols of the chart metric by central differences.
inline std::vector<Matrix> christoffel(const Quadric& q, const Chart& c,
                                       const Vec& u, double fd_h) {
  const std::size_t n = u.size();
  const Matrix g = dr2_chart_metric(q, c, u);
  std::vector<Matrix> dg(n, Matrix(n, n));  // dg[j] = d g / d u_j
  for (std::size_t j = 0; j < n; ++j) {
    const double h = fd_h * std::max(1.0, std::abs(u[j]));
    Vec up = u, um = u;
    up[j] += h;
    um[j] -= h;
    const Matrix gp = dr2_chart_metric(q, c, up);
    const Matrix gm = dr2_chart_metric(q, c, um);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        dg[j](a, b) = (gp(a, b) - gm(a, b)) / (2.0 * h);
  }
  // Gamma^i_{jk} = (1/2) g^{il} (d_j g_lk + d_k g_jl - d_l g_jk)
  std::vector<Matrix> gamma(n, Matrix(n, n));
  Matrix ginv(n, n);
  {
    Matrix id = Matrix::identity(n);
    for (std::size_t col = 0; col < n; ++col) {
      Vec e(n, 0.0);
      e[col] = 1.0;
      Vec sol = solve(g, e);
      for (std::size_t row = 0; row < n; ++row) ginv(row, col) = sol[row];
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t kk = 0; kk < n; ++kk) {
        double s = 0.0;
        for (std::size_t l = 0; l < n; ++l)
          s += ginv(i, l) * (dg[j](l, kk) + dg[kk](j, l) - dg[l](j, kk));
        gamma[i](j, kk) = 0.5 * s;
      }
  return gamma;
}

} // namespace detail

struct UnparametrizedCurve {
  std::vector<double> sigma;  // affine parameter of the dr^2 geodesic
  std::vector<Vec> x;         // ambient-space trace
  int chart_switches = 0;
};

/// Integrates the geodesic of the second metric dr^2 restricted to the
/// quadric, from the same initial point/direction as a standard geodesic,
/// in graph charts with automatic switching (largest |b_k x_k^2| chart).
/// Stops once the trace's Euclidean length reaches euclid_length.
inline UnparametrizedCurve equiv_metric_geodesic(const GeodesicState& g0,
                                                 const Quadric& quad,
                                                 double euclid_length,
                                                 IntegratorConfig cfg,
                                                 double fd_h = 1e-5) {
  const std::size_t dim = quad.ambient_dim();
  const std::size_t n = dim - 1;
  if (cfg.sample_dt <= 0.0) cfg.sample_dt = 2e-3;

  UnparametrizedCurve out;
  Vec x = g0.x;
  Vec v = g0.xp;
  double sigma = 0.0, length = 0.0;

  detail::Chart chart = detail::best_chart(quad, x);
  Vec u = detail::chart_drop(x, chart.k);
  Vec ud = detail::chart_drop(v, chart.k);
  {
    // affine-normalize: |g(ud, ud)| = 1
    const Matrix g = detail::dr2_chart_metric(quad, chart, u);
    double s = 0.0;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) s += g(a, b) * ud[a] * ud[b];
    const double speed = std::sqrt(std::abs(s));
    if (!(speed > 0.0))
      throw Error("equiv_metric_geodesic: null initial direction");
    for (double& c : ud) c /= speed;
  }

  out.sigma.push_back(0.0);
  out.x.push_back(x);

  const int max_segments = 1000;
  for (int seg = 0; seg < max_segments && length < euclid_length; ++seg) {
    auto rhs = [&](double, const Vec& y, Vec& dy) {
      const Vec uu(y.begin(), y.begin() + n);
      const Vec vv(y.begin() + n, y.end());
      const auto gamma = detail::christoffel(quad, chart, uu, fd_h);
      for (std::size_t i = 0; i < n; ++i) {
        dy[i] = vv[i];
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t kk = 0; kk < n; ++kk)
            acc += gamma[i](j, kk) * vv[j] * vv[kk];
        dy[n + i] = -acc;
      }
    };
    auto needs_switch = [&](double, const Vec& y) {
      Vec uu(y.begin(), y.begin() + n);
      Vec xx;
      try {
        xx = detail::chart_lift(quad, chart, uu);
      } catch (const ChartSwitch&) {
        return true;
      }
      double best = 0.0;
      for (int k = 0; k < static_cast<int>(dim); ++k)
        best = std::max(best, detail::chart_quality(quad, xx, k));
      return detail::chart_quality(quad, xx, chart.k) < 0.5 * best;
    };

    Vec y0 = u;
    y0.insert(y0.end(), ud.begin(), ud.end());
    IntegratorConfig seg_cfg = cfg;
    seg_cfg.stop_when = needs_switch;
    // generous horizon; the segment ends on chart switch or length target
    Trajectory traj;
    try {
      traj = integrate(rhs, y0, 0.0, 10.0 * euclid_length + 1.0, seg_cfg);
    } catch (const ChartSwitch&) {
      throw ChartSwitch("equiv_metric_geodesic: chart lost mid-step");
    }

    bool done = false;
    for (std::size_t i = 1; i < traj.size() && !done; ++i) {
      const Vec uu(traj.states[i].begin(), traj.states[i].begin() + n);
      const Vec xx = detail::chart_lift(quad, chart, uu);
      length += norm(xx - out.x.back());
      out.sigma.push_back(sigma + traj.times[i]);
      out.x.push_back(xx);
      if (length >= euclid_length) done = true;
      if (done || i + 1 == traj.size()) {
        // hand over (x, xdot) to the next segment
        const Vec vv(traj.states[i].begin() + n, traj.states[i].end());
        const Matrix jac = detail::chart_jacobian(quad, chart, uu, xx);
        Vec xd(dim, 0.0);
        for (std::size_t r = 0; r < dim; ++r)
          for (std::size_t cidx = 0; cidx < n; ++cidx)
            xd[r] += jac(r, cidx) * vv[cidx];
        x = xx;
        v = xd;
        sigma += traj.times[i];
      }
    }
    if (done) break;
    if (!traj.stopped_early)
      throw Error("equiv_metric_geodesic: segment ended before the length target");
    chart = detail::best_chart(quad, x);
    u = detail::chart_drop(x, chart.k);
    ud = detail::chart_drop(v, chart.k);
    ++out.chart_switches;
  }
  if (length < euclid_length)
    throw Error("equiv_metric_geodesic: did not reach the requested length");
  return out;
}

// -- projective chart of the second metric --------------------------------------

/// Chart coordinates across infinity: for chart index k (b_k != 0), the
/// point (y0; y_j, j != k) represents the affine point x_k = 1/y0,
/// x_j = y_j/y0, and the closure of Q is b_k + sum_j b_j y_j^2 = y0^2.
/// Layout: yc[0] = y0, then the y_j in ascending ambient order.
struct ProjectiveChartPoint {
  int k = 0;
  Vec yc;
};

inline double projective_constraint(const ProjectiveChartPoint& p,
                                    const Quadric& q) {
  double s = q.b[p.k] - p.yc[0] * p.yc[0];
  std::size_t m = 1;
  for (std::size_t j = 0; j < q.ambient_dim(); ++j)
    if (static_cast<int>(j) != p.k) {
      s += q.b[j] * p.yc[m] * p.yc[m];
      ++m;
    }
  return s;
}

/// The extended metric d r~^2 = (-dy0^2 + sum_j b_j dy_j^2) /
/// (b_k^2 + sum_j b_j^2 y_j^2), evaluated on a chart tangent vector. Regular
/// at y0 = 0, which is what extends dr^2 across the projective closure.
inline double projective_chart_metric(const ProjectiveChartPoint& p,
                                      const Vec& w, const Quadric& q) {
  double den = q.b[p.k] * q.b[p.k];
  double num = -w[0] * w[0];
  std::size_t m = 1;
  for (std::size_t j = 0; j < q.ambient_dim(); ++j)
    if (static_cast<int>(j) != p.k) {
      den += q.b[j] * q.b[j] * p.yc[m] * p.yc[m];
      num += q.b[j] * w[m] * w[m];
      ++m;
    }
  if (den <= 1e-14) throw DegenerateChartPoint("projective chart denominator vanishes");
  return num / den;
}

/// Affine point -> projective chart coords (requires x_k != 0).
inline ProjectiveChartPoint to_projective_chart(int k, const Vec& x) {
  if (x[k] == 0.0)
    throw DegenerateChartPoint("to_projective_chart: x_k = 0");
  ProjectiveChartPoint p{k, Vec(x.size())};
  p.yc[0] = 1.0 / x[k];
  std::size_t m = 1;
  for (std::size_t j = 0; j < x.size(); ++j)
    if (static_cast<int>(j) != k) p.yc[m++] = x[j] / x[k];
  return p;
}

/// Pushforward of an ambient tangent vector at x to the chart coords.
inline Vec to_projective_tangent(int k, const Vec& x, const Vec& v) {
  Vec w(x.size());
  const double xk = x[k];
  w[0] = -v[k] / (xk * xk);
  std::size_t m = 1;
  for (std::size_t j = 0; j < x.size(); ++j)
    if (static_cast<int>(j) != k) {
      w[m] = (v[j] * xk - x[j] * v[k]) / (xk * xk);
      ++m;
    }
  return w;
}

/// dr^2 evaluated on an affine tangent vector (for chart cross-checks).
inline double dr2_value(const Vec& x, const Vec& v, const Quadric& q) {
  const Vec bx = q.bx(x);
  return q.bform(v, v) / dot(bx, bx);
}

} // namespace intlab::quadrics
