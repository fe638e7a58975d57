#pragma once

// Fixed-step RK4 and adaptive Dormand-Prince 5(4) with optional post-step
// hooks (used for constraint projection) and exact-time sampling.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "errors.hpp"

namespace intlab {

struct IntegratorConfig {
  enum class Method { rk4_fixed, rk45_adaptive };

  Method method = Method::rk45_adaptive;
  double dt = 1e-3;        // rk4_fixed step
  double abs_tol = 1e-10;  // rk45 tolerances
  double rel_tol = 1e-10;
  std::size_t max_steps = 20'000'000;

  // When > 0, the trajectory is sampled exactly at t0 + k*sample_dt (steps
  // are capped to land on sample times); otherwise every accepted step is
  // recorded.
  double sample_dt = 0.0;

  // Applied to the state after every accepted step (constraint projection).
  std::function<void(double t, std::vector<double>& y)> post_step;

  // When set, integration stops cleanly at the first recorded sample for
  // which this returns true.
  std::function<bool(double t, const std::vector<double>& y)> stop_when;

  void validate() const {
    if (max_steps == 0) throw Error("IntegratorConfig: max_steps must be > 0");
    if (method == Method::rk4_fixed) {
      if (!(dt > 0.0)) throw Error("IntegratorConfig: dt must be > 0");
    } else {
      if (!(abs_tol > 0.0) || !(rel_tol > 0.0))
        throw Error("IntegratorConfig: tolerances must be > 0");
    }
  }
};

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
  std::size_t steps = 0;      // accepted steps
  std::size_t rhs_evals = 0;
  bool stopped_early = false;

  std::size_t size() const { return times.size(); }
  const std::vector<double>& front_state() const { return states.front(); }
  const std::vector<double>& back_state() const { return states.back(); }
};

namespace detail {

inline bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

// Dormand-Prince 5(4) tableau.
struct Dopri5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                          c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // embedded 4th-order weights
  static constexpr double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695,
                          e4 = 393.0 / 640, e5 = -92097.0 / 339200,
                          e6 = 187.0 / 2100, e7 = 1.0 / 40;
};

} // namespace detail

/// Integrates dy/dt = rhs(t, y) over [t0, t1] (t1 > t0). The trajectory
/// always contains both endpoints. Deterministic for a fixed config.
template <typename Rhs>
Trajectory integrate(Rhs&& rhs, const std::vector<double>& y0, double t0,
                     double t1, const IntegratorConfig& cfg) {
  cfg.validate();
  if (!(t1 > t0)) throw Error("integrate: t_span must satisfy t1 > t0");
  if (!std::isfinite(t0) || !std::isfinite(t1))
    throw Error("integrate: t_span must be finite");

  const std::size_t n = y0.size();
  Trajectory traj;
  std::vector<double> y = y0;
  double t = t0;

  auto record = [&](double tt, const std::vector<double>& yy) {
    traj.times.push_back(tt);
    traj.states.push_back(yy);
    return cfg.stop_when && cfg.stop_when(tt, yy);
  };
  if (record(t, y)) {
    traj.stopped_early = true;
    return traj;
  }

  // Next exact sample target; also used as a step cap.
  std::size_t sample_idx = 1;
  auto next_target = [&]() {
    if (cfg.sample_dt > 0.0) {
      const double ts = t0 + static_cast<double>(sample_idx) * cfg.sample_dt;
      return std::min(ts, t1);
    }
    return t1;
  };

  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
  std::vector<double> ytmp(n), y5(n), y4(n);

  auto eval = [&](double tt, const std::vector<double>& yy,
                  std::vector<double>& out) {
    rhs(tt, yy, out);
    ++traj.rhs_evals;
    if (!detail::all_finite(out) || !detail::all_finite(yy))
      throw NumericalBlowup(traj.times.back());
  };

  const double t_eps = 1e-12 * std::max({1.0, std::abs(t0), std::abs(t1)});

  if (cfg.method == IntegratorConfig::Method::rk4_fixed) {
    while (t < t1 - t_eps) {
      if (traj.steps >= cfg.max_steps) throw StepBudgetExceeded(cfg.max_steps, t);
      const double target = next_target();
      const double h = std::min(cfg.dt, target - t);
      eval(t, y, k1);
      for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + 0.5 * h * k1[i];
      eval(t + 0.5 * h, ytmp, k2);
      for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + 0.5 * h * k2[i];
      eval(t + 0.5 * h, ytmp, k3);
      for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * k3[i];
      eval(t + h, ytmp, k4);
      for (std::size_t i = 0; i < n; ++i)
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      t += h;
      ++traj.steps;
      if (cfg.post_step) cfg.post_step(t, y);
      const bool at_sample = cfg.sample_dt <= 0.0 || t >= target - t_eps;
      if (at_sample) {
        if (cfg.sample_dt > 0.0 && t >= target - t_eps) ++sample_idx;
        if (record(t, y)) {
          traj.stopped_early = true;
          return traj;
        }
      }
    }
    return traj;
  }

  // rk45_adaptive
  using T = detail::Dopri5;
  double h = std::min((t1 - t0) / 100.0, 1e-2);
  if (cfg.sample_dt > 0.0) h = std::min(h, cfg.sample_dt);

  while (t < t1 - t_eps) {
    if (traj.steps >= cfg.max_steps) throw StepBudgetExceeded(cfg.max_steps, t);
    const double target = next_target();
    bool capped = false;
    double hs = h;
    if (t + hs >= target) {
      hs = target - t;
      capped = true;
    }

    eval(t, y, k1);
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + hs * T::a21 * k1[i];
    eval(t + T::c2 * hs, ytmp, k2);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + hs * (T::a31 * k1[i] + T::a32 * k2[i]);
    eval(t + T::c3 * hs, ytmp, k3);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + hs * (T::a41 * k1[i] + T::a42 * k2[i] + T::a43 * k3[i]);
    eval(t + T::c4 * hs, ytmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + hs * (T::a51 * k1[i] + T::a52 * k2[i] + T::a53 * k3[i] +
                             T::a54 * k4[i]);
    eval(t + T::c5 * hs, ytmp, k5);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + hs * (T::a61 * k1[i] + T::a62 * k2[i] + T::a63 * k3[i] +
                             T::a64 * k4[i] + T::a65 * k5[i]);
    eval(t + hs, ytmp, k6);
    for (std::size_t i = 0; i < n; ++i)
      y5[i] = y[i] + hs * (T::b1 * k1[i] + T::b3 * k3[i] + T::b4 * k4[i] +
                           T::b5 * k5[i] + T::b6 * k6[i]);
    eval(t + hs, y5, k7);
    for (std::size_t i = 0; i < n; ++i)
      y4[i] = y[i] + hs * (T::e1 * k1[i] + T::e3 * k3[i] + T::e4 * k4[i] +
                           T::e5 * k5[i] + T::e6 * k6[i] + T::e7 * k7[i]);

    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sc =
          cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y[i]), std::abs(y5[i]));
      const double e = (y5[i] - y4[i]) / sc;
      err += e * e;
    }
    err = std::sqrt(err / static_cast<double>(n));

    if (err <= 1.0) {
      t += hs;
      y = y5;
      ++traj.steps;
      if (cfg.post_step) cfg.post_step(t, y);
      const bool at_sample = cfg.sample_dt <= 0.0 || t >= target - t_eps;
      if (at_sample) {
        if (cfg.sample_dt > 0.0 && t >= target - t_eps) ++sample_idx;
        if (record(t, y)) {
          traj.stopped_early = true;
          return traj;
        }
      }
      const double grow =
          err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      if (!capped)
        h = hs * grow;
      else
        h = std::max(h, hs * grow);  // keep the uncapped step size
    } else {
      h = hs * std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
      if (!(h > 0.0) || t + h == t) throw NumericalBlowup(t);
    }
  }
  return traj;
}

} // namespace intlab
