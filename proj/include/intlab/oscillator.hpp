#pragma once

// Time-modulated harmonic oscillator H = (1/2) w(t) (p^2 + q^2). For this
// form every modulation w(t) leaves the action I = (1/2)(p^2 + q^2)
// conserved, and the angle advances by tau(t) = int w dt.

#include <cmath>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "ode.hpp"
#include "quadrature.hpp"

namespace intlab {

/// A scalar modulation f(t) with an optional declared period. Periodicity
/// is asserted on a sampled grid, never inferred.
struct ModulationProfile {
  std::function<double(double)> f;
  std::optional<double> period;

  double operator()(double t) const { return f(t); }

  /// Max |f(t + T) - f(t)| over a sampled grid; 0 when aperiodic.
  double periodicity_defect(double t0, double t1, int samples = 257) const {
    if (!period) return 0.0;
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
      const double t = t0 + (t1 - t0) * i / (samples - 1);
      worst = std::max(worst, std::abs(f(t + *period) - f(t)));
    }
    return worst;
  }

  static ModulationProfile constant(double value) {
    return {[value](double) { return value; }, std::nullopt};
  }

  /// eps * sin(2 pi t / T), the default periodic family for experiments.
  static ModulationProfile sinusoid(double eps, double T) {
    return {[eps, T](double t) { return eps * std::sin(2.0 * M_PI * t / T); }, T};
  }
};

namespace osc {

struct OscillatorState {
  double p = 0.0;
  double q = 0.0;
  double t = 0.0;
};

/// dp/dt = -w(t) q,  dq/dt = w(t) p.
inline std::pair<double, double> oscillator_rhs(
    const OscillatorState& s, const std::function<double(double)>& omega) {
  const double w = omega(s.t);
  return {-w * s.q, w * s.p};
}

/// Action variable I = (1/2)(p^2 + q^2).
inline double oscillator_action(const OscillatorState& s) {
  return 0.5 * (s.p * s.p + s.q * s.q);
}

/// Instantaneous Hamiltonian H = (1/2) w(t) (p^2 + q^2); not a first
/// integral, but T-periodic in t when the modulation is.
inline double oscillator_energy(const OscillatorState& s,
                                const ModulationProfile& omega) {
  return omega(s.t) * oscillator_action(s);
}

struct OscillatorFlow {
  Trajectory traj;          // states are (p, q)
  std::vector<double> tau;  // tau(t_i) = int_0^{t_i} w dt (trapezoid)

  OscillatorState state_at(std::size_t i) const {
    return {traj.states[i][0], traj.states[i][1], traj.times[i]};
  }
};

/// Integrates the modulated oscillator from s0 to t_end and accumulates the
/// reparametrization tau alongside.
inline OscillatorFlow oscillator_flow(const OscillatorState& s0,
                                      const ModulationProfile& omega,
                                      double t_end, IntegratorConfig cfg) {
  if (cfg.sample_dt <= 0.0) cfg.sample_dt = 1e-3;
  auto rhs = [&omega](double t, const std::vector<double>& y,
                      std::vector<double>& dy) {
    const double w = omega(t);
    dy[0] = -w * y[1];
    dy[1] = w * y[0];
  };
  OscillatorFlow flow;
  flow.traj = integrate(rhs, {s0.p, s0.q}, s0.t, t_end, cfg);
  std::vector<double> w(flow.traj.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = omega(flow.traj.times[i]);
  flow.tau = cumulative_quadrature(flow.traj.times, w);
  return flow;
}

/// Angle difference wrapped to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * M_PI);
  if (a > M_PI) a -= 2.0 * M_PI;
  if (a <= -M_PI) a += 2.0 * M_PI;
  return a;
}

/// Max deviation of atan2(q, p) - tau(t) from its initial value, mod 2 pi.
/// Constant phase offset is the integrability statement at solution level:
/// p = R cos(tau + phi0), q = R sin(tau + phi0).
inline double phase_defect(const OscillatorFlow& flow) {
  const auto& y0 = flow.traj.states.front();
  const double delta0 = std::atan2(y0[1], y0[0]) - flow.tau.front();
  double worst = 0.0;
  for (std::size_t i = 0; i < flow.traj.size(); ++i) {
    const auto& y = flow.traj.states[i];
    const double delta = std::atan2(y[1], y[0]) - flow.tau[i];
    worst = std::max(worst, std::abs(wrap_angle(delta - delta0)));
  }
  return worst;
}

/// Max action drift |I(t) - I(0)| / (1 + |I(0)|) along the flow.
inline double action_drift(const OscillatorFlow& flow) {
  const auto& y0 = flow.traj.states.front();
  const double i0 = 0.5 * (y0[0] * y0[0] + y0[1] * y0[1]);
  double worst = 0.0;
  for (const auto& y : flow.traj.states) {
    const double ii = 0.5 * (y[0] * y[0] + y[1] * y[1]);
    worst = std::max(worst, std::abs(ii - i0));
  }
  return worst / (1.0 + std::abs(i0));
}

} // namespace osc
} // namespace intlab
