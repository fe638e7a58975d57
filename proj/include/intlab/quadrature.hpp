#pragma once

// Cumulative trapezoid-rule quadrature over sampled integrands; exact for
// piecewise-linear data. Used for time reparametrizations tau = int g dt.

#include <cstddef>
#include <vector>

#include "errors.hpp"

namespace intlab {

/// Given time-ordered samples (t_i, g_i), returns G with
/// G_i ~= int_{t_0}^{t_i} g dt (trapezoid rule, G_0 = 0).
inline std::vector<double> cumulative_quadrature(const std::vector<double>& t,
                                                 const std::vector<double>& g) {
  if (t.size() != g.size())
    throw InvalidSampling("cumulative_quadrature: size mismatch");
  if (t.empty()) throw InvalidSampling("cumulative_quadrature: empty input");
  std::vector<double> acc(t.size(), 0.0);
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double dt = t[i] - t[i - 1];
    if (!(dt > 0.0))
      throw InvalidSampling("cumulative_quadrature: times must be strictly increasing");
    acc[i] = acc[i - 1] + 0.5 * dt * (g[i] + g[i - 1]);
  }
  return acc;
}

} // namespace intlab
