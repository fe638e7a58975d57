#pragma once

// Post-step projection of a state onto a set of scalar constraints
// c_i(y) = 0. The correction is restricted to the span of the constraint
// gradients at the entry point and solved for by Newton iteration.

#include <functional>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"

namespace intlab {

struct Constraint {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
};

/// Projects y onto {c_i = 0}. Requires the entry residual to be inside the
/// Newton basin (|c_i| < 0.1); converges to 1e-12 or throws
/// ProjectionFailure after 20 iterations.
inline Vec project_to_constraints(const Vec& y0,
                                  const std::vector<Constraint>& constraints,
                                  double tol = 1e-12, int max_iter = 20) {
  const std::size_t m = constraints.size();
  if (m == 0) return y0;
  const std::size_t n = y0.size();

  // Direction space: gradients at the entry point.
  std::vector<Vec> g0(m);
  for (std::size_t i = 0; i < m; ++i) g0[i] = constraints[i].gradient(y0);

  Vec y = y0;
  double res = 0.0;
  for (int iter = 0; iter <= max_iter; ++iter) {
    Vec c(m);
    res = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      c[i] = constraints[i].value(y);
      res = std::max(res, std::abs(c[i]));
    }
    if (res <= tol) return y;
    if (iter == max_iter) break;

    // Newton step for lambda in c(y + sum_j lambda_j g0_j) = 0:
    //   [grad c_i(y) . g0_j] dlambda = -c
    Matrix jac(m, m);
    for (std::size_t i = 0; i < m; ++i) {
      Vec gi = constraints[i].gradient(y);
      for (std::size_t j = 0; j < m; ++j) jac(i, j) = dot(gi, g0[j]);
    }
    for (std::size_t i = 0; i < m; ++i) c[i] = -c[i];
    const Vec dl = solve(jac, c);
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < n; ++k) y[k] += dl[j] * g0[j][k];
  }
  throw ProjectionFailure(res);
}

/// Convenience: an IntegratorConfig post-step hook projecting onto the
/// given constraints.
inline std::function<void(double, Vec&)> projection_hook(
    std::vector<Constraint> constraints) {
  return [cs = std::move(constraints)](double, Vec& y) {
    y = project_to_constraints(y, cs);
  };
}

} // namespace intlab
