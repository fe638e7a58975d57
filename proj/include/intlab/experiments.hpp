#pragma once

// Canned, reproducible experiment runners behind the CLI subcommands. Each
// takes a flat config (defaults reproduce the reference experiments), runs
// the construction, and returns a drift report plus data files.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bachet.hpp"
#include "catmap.hpp"
#include "config.hpp"
#include "euler_top.hpp"
#include "oscillator.hpp"
#include "quadrics.hpp"
#include "random.hpp"
#include "report.hpp"

namespace intlab::experiments {

struct RunOutput {
  DriftReport report;
  // file name -> content; written below the CLI output directory
  std::map<std::string, std::string> data_files;
};

// -- shared helpers -----------------------------------------------------------

/// Complete elliptic integral K(kappa) (modulus convention) via AGM.
inline double elliptic_k(double kappa) {
  double a = 1.0, b = std::sqrt(1.0 - kappa * kappa);
  for (int i = 0; i < 60 && std::abs(a - b) > 1e-16 * a; ++i) {
    const double am = 0.5 * (a + b);
    b = std::sqrt(a * b);
    a = am;
  }
  return M_PI / (2.0 * a);
}

inline IntegratorConfig integrator_from_config(const ExperimentConfig& cfg) {
  IntegratorConfig ic;
  const std::string method = cfg.get_string("method", "rk45");
  if (method == "rk4")
    ic.method = IntegratorConfig::Method::rk4_fixed;
  else if (method == "rk45")
    ic.method = IntegratorConfig::Method::rk45_adaptive;
  else
    throw ConfigError("unknown method '" + method + "'");
  ic.dt = cfg.get_double("dt", 1e-3);
  ic.abs_tol = cfg.get_double("abs_tol", 1e-10);
  ic.rel_tol = cfg.get_double("rel_tol", 1e-10);
  ic.max_steps = static_cast<std::size_t>(cfg.get_int("max_steps", 20'000'000));
  ic.sample_dt = cfg.get_double("sample_dt", 0.0);
  return ic;
}

inline double max_pointwise(const Vec& a, const Vec& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

// -- oscillator ----------------------------------------------------------------

struct OscProfile {
  std::string name;
  ModulationProfile omega;
};

inline std::vector<OscProfile> default_oscillator_profiles() {
  return {
      {"const1", ModulationProfile::constant(1.0)},
      {"one_plus_half_sin",
       {[](double t) { return 1.0 + 0.5 * std::sin(t); }, 2.0 * M_PI}},
      {"two_plus_03cos3t",
       {[](double t) { return 2.0 + 0.3 * std::cos(3.0 * t); }, 2.0 * M_PI / 3.0}},
      {"slow_strong",
       {[](double t) { return 1.0 + 0.9 * std::sin(0.2 * t); }, 10.0 * M_PI}},
      {"sign_changing",
       {[](double t) { return std::sin(2.0 * t); }, M_PI}},
  };
}

inline RunOutput run_oscillator(const ExperimentConfig& cfg) {
  RunOutput out;
  out.report.experiment = "oscillator";
  const double t_end = cfg.get_double("t_end", 100.0);
  const double action_tol = cfg.get_double("tol", 1e-8);
  const double phase_tol = cfg.get_double("phase_tol", 1e-6);
  const double p0 = cfg.get_double("p0", 1.0);
  const double q0 = cfg.get_double("q0", 0.0);

  std::vector<OscProfile> profiles;
  if (cfg.has("omega_a")) {
    const double a = cfg.get_double("omega_a");
    const double b = cfg.get_double("omega_b", 0.0);
    const double w = cfg.get_double("omega_w", 1.0);
    ModulationProfile m{[a, b, w](double t) { return a + b * std::sin(w * t); },
                        std::nullopt};
    if (b != 0.0 || cfg.has("omega_period")) m.period = 2.0 * M_PI / w;
    if (cfg.has("omega_period")) m.period = cfg.get_double("omega_period");
    profiles.push_back({"custom", std::move(m)});
  } else {
    profiles = default_oscillator_profiles();
  }

  IntegratorConfig ic = integrator_from_config(cfg);
  bool first = true;
  for (const auto& prof : profiles) {
    IntegratorConfig pic = ic;
    std::size_t stride = 0;
    if (pic.sample_dt <= 0.0) {
      double dt = 2e-3;
      if (prof.omega.period) {
        stride = static_cast<std::size_t>(std::ceil(*prof.omega.period / dt));
        dt = *prof.omega.period / static_cast<double>(stride);
      }
      pic.sample_dt = dt;
    }
    const auto flow =
        osc::oscillator_flow({p0, q0, 0.0}, prof.omega, t_end, pic);
    out.report.steps += flow.traj.steps;
    out.report.add(prof.name + "_action_drift", 0.5 * (p0 * p0 + q0 * q0),
                   action_tol)
        .max_drift = osc::action_drift(flow);
    out.report.add(prof.name + "_phase_defect", 0.0, phase_tol).max_drift =
        osc::phase_defect(flow);
    if (prof.omega.period && stride > 0 && stride < flow.traj.size()) {
      const double h0 = osc::oscillator_energy(flow.state_at(0), prof.omega);
      double worst = 0.0;
      for (std::size_t i = 0; i + stride < flow.traj.size(); ++i) {
        const double a = osc::oscillator_energy(flow.state_at(i), prof.omega);
        const double b =
            osc::oscillator_energy(flow.state_at(i + stride), prof.omega);
        worst = std::max(worst, std::abs(b - a));
      }
      out.report
          .add(prof.name + "_energy_period_defect", h0,
               cfg.get_double("energy_period_tol", 1e-8))
          .max_drift = worst / (1.0 + std::abs(h0));
    }
    if (first) {
      std::string csv = "t,p,q,tau,action\n";
      for (std::size_t i = 0; i < flow.traj.size(); ++i) {
        const auto& y = flow.traj.states[i];
        csv += format_double(flow.traj.times[i]) + ',' + format_double(y[0]) +
               ',' + format_double(y[1]) + ',' + format_double(flow.tau[i]) +
               ',' + format_double(0.5 * (y[0] * y[0] + y[1] * y[1])) + '\n';
      }
      out.data_files["trajectory.csv"] = std::move(csv);
      first = false;
    }
  }
  return out;
}

// -- euler top -----------------------------------------------------------------

struct EulerSetup {
  euler::InertiaSpec inertia;
  SkewMatrix m0;
  double t_end;
  double period;  // 0 when unmodulated
};

inline EulerSetup euler_setup_from_config(const ExperimentConfig& cfg) {
  const std::size_t n = static_cast<std::size_t>(cfg.get_int("n", 3));
  SymMatrix j0(n);
  if (cfg.has("j0")) {
    j0 = SymMatrix::from_dense(cfg.get_matrix("j0"));
  } else if (cfg.has("j0_diag")) {
    j0 = SymMatrix::diagonal(cfg.get_vector("j0_diag"));
  } else {
    Vec d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = static_cast<double>(i + 1);
    j0 = SymMatrix::diagonal(d);
  }
  SkewMatrix m0(n);
  if (cfg.has("m0")) {
    m0 = euler::skew_from_dense(cfg.get_matrix("m0"));
  } else {
    std::mt19937_64 rng(static_cast<std::uint64_t>(cfg.get_int("seed", 0)));
    m0 = random_skew(n, rng);
  }
  const double eps = cfg.get_double("f_eps", 0.3);
  const double period = cfg.get_double("f_period", 1.0);
  std::optional<ModulationProfile> mod;
  if (eps != 0.0) mod = ModulationProfile::sinusoid(eps, period);
  return {euler::InertiaSpec(j0, mod), m0, cfg.get_double("t_end", 20.0),
          eps != 0.0 ? period : 0.0};
}

inline RunOutput run_euler_top(const ExperimentConfig& cfg) {
  RunOutput out;
  out.report.experiment = "euler-top";
  EulerSetup setup = euler_setup_from_config(cfg);
  const double inv_tol = cfg.get_double("tol", 1e-7);

  IntegratorConfig ic = integrator_from_config(cfg);
  std::size_t stride = 0;
  if (ic.sample_dt <= 0.0) {
    if (setup.period > 0.0) {
      stride = 20;
      ic.sample_dt = setup.period / static_cast<double>(stride);
    } else {
      ic.sample_dt = 0.05;
    }
  } else if (setup.period > 0.0) {
    stride = static_cast<std::size_t>(std::llround(setup.period / ic.sample_dt));
    if (std::abs(stride * ic.sample_dt - setup.period) > 1e-12) stride = 0;
  }

  euler::RigidBodyState s0{setup.m0, 0.0, std::nullopt};
  if (cfg.get_int("with_frame", 0) != 0)
    s0.X = Matrix::identity(setup.inertia.dim());
  const auto samples = euler::modulated_flow(s0, setup.inertia, setup.t_end, ic);

  DriftTracker tracker = euler::rigid_invariant_trace(samples, setup.inertia);
  tracker.append_rows(out.report, inv_tol);
  // the skew/orthogonality rows carry their own thresholds
  for (auto& row : out.report.rows) {
    if (row.name == "skewness") row.threshold = 1e-10;
    if (row.name == "frame_orthogonality") row.threshold = 1e-7;
  }

  std::vector<double> energy(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    energy[i] = euler::hamiltonian(samples[i].M, setup.inertia, samples[i].t);
  if (setup.period > 0.0 && stride > 0 && stride < samples.size()) {
    double worst = 0.0;
    for (std::size_t i = 0; i + stride < samples.size(); ++i)
      worst = std::max(worst, std::abs(energy[i + stride] - energy[i]));
    out.report
        .add("hamiltonian_period_defect", energy[0],
             cfg.get_double("h_period_tol", 1e-7))
        .max_drift = worst / (1.0 + std::abs(energy[0]));
  }
  if (setup.period == 0.0) {
    double worst = 0.0;
    for (double e : energy) worst = std::max(worst, std::abs(e - energy[0]));
    out.report.add("energy_drift", energy[0], cfg.get_double("energy_tol", 1e-8))
        .max_drift = worst / (1.0 + std::abs(energy[0]));
  }

  std::string csv = "t";
  const std::size_t n = setup.inertia.dim();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      csv += ",m_" + std::to_string(i) + std::to_string(j);
  csv += ",hamiltonian\n";
  for (std::size_t k = 0; k < samples.size(); ++k) {
    csv += format_double(samples[k].t);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        csv += ',' + format_double(samples[k].M(i, j));
    csv += ',' + format_double(energy[k]) + '\n';
  }
  out.data_files["trajectory.csv"] = std::move(csv);
  return out;
}

inline RunOutput run_tshift(const ExperimentConfig& cfg) {
  RunOutput out;
  out.report.experiment = "tshift";
  EulerSetup setup = euler_setup_from_config(cfg);
  if (setup.period <= 0.0)
    throw ConfigError("tshift requires a periodic modulation (f_eps != 0)");
  const int iterations = static_cast<int>(cfg.get_int("iterations", 50));
  const double tol = cfg.get_double("tol", 5e-6);

  IntegratorConfig ic = integrator_from_config(cfg);
  const SymMatrix j0sq = setup.inertia.j0_squared();
  DriftTracker tracker;
  SkewMatrix m = setup.m0;
  for (int k = 0; k <= iterations; ++k) {
    const auto inv = euler::SpectralInvariants::compute_from_j0sq(m, j0sq);
    for (const auto& [a, b] : inv.tracked)
      tracker.observe("P0_coeff_l" + std::to_string(a) + "_m" + std::to_string(b),
                      inv.at(a, b));
    if (k < iterations) m = euler::t_shift_map(setup.inertia, m, ic);
  }
  tracker.append_rows(out.report, tol);
  return out;
}

// -- catmap ----------------------------------------------------------------------

inline RunOutput run_catmap(const ExperimentConfig& cfg) {
  RunOutput out;
  out.report.experiment = "catmap";
  const catmap::ToralAutomorphism a(
      cfg.get_int("a11", 2), cfg.get_int("a12", 1), cfg.get_int("a21", 1),
      cfg.get_int("a22", 1));
  const auto h = catmap::hyperbolic_data(a);
  const int n_steps = static_cast<int>(cfg.get_int("steps", 10000));
  const int n_states = static_cast<int>(cfg.get_int("states", 100));
  const double step_tol = cfg.get_double("tol", 1e-10);
  std::mt19937_64 rng(static_cast<std::uint64_t>(cfg.get_int("seed", 0)));

  double worst_f1_step = 0.0, worst_f2_step = 0.0, worst_f1_cum = 0.0;
  std::string csv;
  for (int s = 0; s < n_states; ++s) {
    auto pick = [&rng](double lo, double hi) {
      const double v = uniform(rng, lo, hi);
      return uniform(rng, 0.0, 1.0) < 0.5 ? -v : v;
    };
    catmap::ExtendedTorusState st = catmap::ExtendedTorusState::from_eigen(
        uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 1.0), pick(0.5, 2.0),
        pick(0.5, 2.0));
    double f1_prev = catmap::integral_F1(st);
    double f2_prev = catmap::integral_F2(st, h);
    const double f1_0 = f1_prev;
    const bool dump = (s == 0);
    if (dump) csv = "step,x1,x2,log_pu,log_pv,F1,F2\n";
    for (int k = 0; k < n_steps; ++k) {
      if (dump)
        csv += std::to_string(k) + ',' + format_double(st.x1) + ',' +
               format_double(st.x2) + ',' + format_double(st.log_pu) + ',' +
               format_double(st.log_pv) + ',' + format_double(f1_prev) + ',' +
               format_double(f2_prev) + '\n';
      st = catmap::extended_step(a, h, st);
      const double f1 = catmap::integral_F1(st);
      const double f2 = catmap::integral_F2(st, h);
      worst_f1_step = std::max(
          worst_f1_step, std::abs(f1 - f1_prev) / (1.0 + std::abs(f1_prev)));
      worst_f2_step = std::max(
          worst_f2_step, std::abs(f2 - f2_prev) / (1.0 + std::abs(f2_prev)));
      worst_f1_cum =
          std::max(worst_f1_cum, std::abs(f1 - f1_0) / (1.0 + std::abs(f1_0)));
      f1_prev = f1;
      f2_prev = f2;
    }
  }
  out.report.add("f1_step_invariance", 0.0, step_tol).max_drift = worst_f1_step;
  out.report.add("f2_step_invariance", 0.0, step_tol).max_drift = worst_f2_step;
  out.report.add("f1_cumulative", 0.0, cfg.get_double("cumulative_tol", 1e-9))
      .max_drift = worst_f1_cum;

  // exact rational orbit check (defaults to the period-3 orbit of (1/2, 1/2))
  const catmap::RationalTorusPoint p0(cfg.get_int("orbit_num1", 1),
                                      cfg.get_int("orbit_num2", 1),
                                      cfg.get_int("orbit_den", 2));
  const auto period = catmap::rational_orbit_period(a, p0);
  DriftRow& row = out.report.add("rational_orbit_period", static_cast<double>(period), 0.5);
  if (cfg.has("expected_period") || !cfg.has("orbit_den"))
    row.max_drift =
        (period == cfg.get_int("expected_period", 3)) ? 0.0 : 1.0;
  out.report.steps = static_cast<std::uint64_t>(n_steps) * n_states;
  out.data_files["trajectory.csv"] = std::move(csv);
  return out;
}

// -- bachet ----------------------------------------------------------------------

inline RunOutput run_bachet(const ExperimentConfig& cfg) {
  using namespace intlab::bachet;
  RunOutput out;
  out.report.experiment = "bachet";
  const Curve curve(parse_rational(cfg.get_string("c", "-2")));
  const BigRational x0 = parse_rational(cfg.get_string("x0", "3"));
  const BigRational y0 = parse_rational(cfg.get_string("y0", "5"));
  const int steps = static_cast<int>(cfg.get_int("steps", 2));
  const std::size_t budget =
      static_cast<std::size_t>(cfg.get_int("bit_budget", 1'000'000));

  const CurvePoint p0 = CurvePoint::affine(x0, y0, curve);
  const Chain ch = chain(p0, curve, steps, budget);

  // every point is on the curve exactly (construction guarantees it; the row
  // re-checks)
  double on_curve = 0.0;
  for (const auto& p : ch.points)
    if (!p.infinity && p.y * p.y - p.x * p.x * p.x != curve.c) on_curve = 1.0;
  out.report.add("on_curve_exact", 0.0, 0.5).max_drift = on_curve;

  // x-projection compatibility: x(B(P)) == B_x(x(P)) whenever y != 0
  double proj = 0.0;
  for (std::size_t i = 0; i + 1 < ch.points.size(); ++i) {
    const auto& p = ch.points[i];
    if (p.infinity || p.y == 0) continue;
    const auto bx = bachet_x(p.x, curve.c);
    const auto& img = ch.points[i + 1];
    if (!bx.has_value()) {
      if (!img.infinity) proj = 1.0;
    } else if (img.infinity || *bx != img.x) {
      proj = 1.0;
    }
  }
  out.report.add("x_projection_consistency", 0.0, 0.5).max_drift = proj;

  // bit growth of the x denominator quadruples per step once the chain heats up
  if (steps >= 4) {
    const auto& bl = ch.bit_lengths;
    double ratio = static_cast<double>(bl[bl.size() - 1]) /
                   static_cast<double>(bl[bl.size() - 2]);
    out.report.add("bit_growth_ratio_minus4", ratio, 0.75).max_drift =
        std::abs(ratio - 4.0);
  }
  out.data_files["chain.json"] = chain_to_json(ch).dump(2) + "\n";
  return out;
}

// -- quadrics --------------------------------------------------------------------

struct GeodesicSetup {
  quadrics::Quadric quadric;
  quadrics::GeodesicState state;
};

inline GeodesicSetup geodesic_setup_from_config(const ExperimentConfig& cfg) {
  quadrics::Quadric q(cfg.has("b") ? cfg.get_vector("b") : Vec{1.0, 2.0, 3.0});
  Vec x0 = cfg.has("x0") ? cfg.get_vector("x0") : Vec(q.ambient_dim(), 0.0);
  if (!cfg.has("x0")) x0[0] = 1.0 / std::sqrt(std::abs(q.b[0]));
  Vec v0 = cfg.has("v0") ? cfg.get_vector("v0") : Vec(q.ambient_dim(), 0.0);
  if (!cfg.has("v0")) v0[1] = 1.0;
  // enforce the state invariants exactly enough for the integrator
  const double c = q.bform(x0, x0);
  if (c <= 0.0) throw ConfigError("x0 cannot be scaled onto the quadric");
  for (double& v : x0) v /= std::sqrt(c);
  const Vec bx = q.bx(x0);
  const double t = q.bform(x0, v0) / q.bform(x0, x0);
  for (std::size_t i = 0; i < v0.size(); ++i) v0[i] -= t * x0[i];
  const double nv = norm(v0);
  if (nv <= 0.0) throw ConfigError("v0 degenerates after tangent projection");
  for (double& v : v0) v /= nv;
  (void)bx;
  return {q, {x0, v0, 0.0}};
}

inline void append_geodesic_rows(const quadrics::GeodesicTrajectory& traj,
                                 const quadrics::Quadric& q, DriftReport& report,
                                 double f_tol, double lambda_tol) {
  using namespace intlab::quadrics;
  DriftTracker tracker;
  double lambda_defect = 0.0, constraint = 0.0;
  for (std::size_t i = 0; i < traj.s.size(); ++i) {
    const GeodesicState g{traj.x[i], traj.xp[i], traj.s[i]};
    const double f = joachimsthal(g, q);
    tracker.observe("joachimsthal", f);
    const double lambda = lagrange_multiplier(g, q);
    const Vec bx = q.bx(g.x);
    const double r2 = dot(bx, bx);
    lambda_defect =
        std::max(lambda_defect,
                 std::abs(lambda + f / (r2 * r2)) / (1.0 + std::abs(lambda)));
    constraint = std::max(constraint, geodesic_state_defect(g, q));
  }
  tracker.append_rows(report, f_tol);
  report.add("lambda_f_identity", 0.0, lambda_tol).max_drift = lambda_defect;
  report.add("constraint_defect", 0.0, 1e-8).max_drift = constraint;
}

inline RunOutput run_geodesic(const ExperimentConfig& cfg) {
  using namespace intlab::quadrics;
  RunOutput out;
  out.report.experiment = "geodesic";
  GeodesicSetup setup = geodesic_setup_from_config(cfg);
  const double s_end = cfg.get_double("s_end", 50.0);
  IntegratorConfig ic = integrator_from_config(cfg);
  if (ic.sample_dt <= 0.0) ic.sample_dt = 0.01;

  const auto traj = integrate_geodesic(setup.state, setup.quadric, s_end, ic);
  out.report.steps = traj.steps;
  append_geodesic_rows(traj, setup.quadric, out.report,
                       cfg.get_double("tol", 1e-8),
                       cfg.get_double("lambda_tol", 1e-10));

  std::string csv = "s";
  const std::size_t d = setup.quadric.ambient_dim();
  for (std::size_t i = 0; i < d; ++i) csv += ",x" + std::to_string(i);
  for (std::size_t i = 0; i < d; ++i) csv += ",xp" + std::to_string(i);
  csv += ",joachimsthal,lambda\n";
  for (std::size_t i = 0; i < traj.s.size(); ++i) {
    const GeodesicState g{traj.x[i], traj.xp[i], traj.s[i]};
    csv += format_double(traj.s[i]);
    for (double v : traj.x[i]) csv += ',' + format_double(v);
    for (double v : traj.xp[i]) csv += ',' + format_double(v);
    csv += ',' + format_double(joachimsthal(g, setup.quadric)) + ',' +
           format_double(lagrange_multiplier(g, setup.quadric)) + '\n';
  }
  out.data_files["trajectory.csv"] = std::move(csv);
  return out;
}

/// Ellipsoid mode: transform a geodesic, certify the Neumann residual (with
/// a 2x grid refinement ratio), and both Psi_0 readings.
inline RunOutput run_knoerrer_ellipsoid(const ExperimentConfig& cfg) {
  using namespace intlab::quadrics;
  RunOutput out;
  out.report.experiment = "knoerrer";
  GeodesicSetup setup = geodesic_setup_from_config(cfg);
  const double s_end = cfg.get_double("s_end", 5.0);
  const double h = cfg.get_double("grid_h", 0.002);
  IntegratorConfig ic = integrator_from_config(cfg);

  auto run_at = [&](double grid) {
    IntegratorConfig c = ic;
    c.sample_dt = grid;
    const auto traj = integrate_geodesic(setup.state, setup.quadric, s_end, c);
    return knoerrer_transform(traj, setup.quadric);
  };
  const auto k1 = run_at(h);
  const auto k2 = run_at(0.5 * h);
  const double res1 = neumann_residual(k1);
  const double res2 = neumann_residual(k2);
  out.report.add("neumann_residual", 0.0, cfg.get_double("tol", 1e-5))
      .max_drift = res1;
  out.report.add("residual_refinement_ratio_minus4", res1 / res2, 2.0)
      .max_drift = std::abs(res1 / res2 - 4.0);
  const auto [plain, adjusted] = knoerrer_psi0_max(k1, setup.quadric);
  out.report.add("psi0_plain", 0.0, cfg.get_double("psi0_tol", 1e-5)).max_drift =
      plain;
  out.report.add("psi0_regime_adjusted", 0.0, cfg.get_double("psi0_tol", 1e-5))
      .max_drift = adjusted;

  std::string csv = "tau";
  const std::size_t d = setup.quadric.ambient_dim();
  for (std::size_t i = 0; i < d; ++i) csv += ",q" + std::to_string(i);
  for (std::size_t i = 0; i < d; ++i) csv += ",dq" + std::to_string(i);
  csv += ",psi0\n";
  for (std::size_t i = 0; i < k1.tau.size(); ++i) {
    csv += format_double(k1.tau[i]);
    for (double v : k1.q[i]) csv += ',' + format_double(v);
    for (double v : k1.dq[i]) csv += ',' + format_double(v);
    csv += ',' + format_double(psi0(k1.dq[i], k1.q[i], setup.quadric)) + '\n';
  }
  out.data_files["trajectory.csv"] = std::move(csv);
  return out;
}

struct HyperbolaEscape {
  std::vector<double> s;      // concatenated sample arclengths
  std::vector<double> alpha;  // sqrt|lambda| along the way
  std::vector<double> tau;    // cumulative
  std::optional<quadrics::KnoerrerSamples> head;  // transform of the initial stretch
  double tau_infinity = 0.0;
  double fitted_exponent = 0.0;
  double tail_rate = 0.0;  // max alpha(s), s >= 1e3, divided by tau_infinity
};

/// 1-D hyperbola run: integrate the escaping geodesic to s_max, fit the
/// alpha ~ A s^-2 law on the last decade, extrapolate tau(inf) and measure
/// the tail rate beyond s = 10^3.
inline HyperbolaEscape hyperbola_escape(const quadrics::Quadric& q,
                                        const quadrics::GeodesicState& g0,
                                        double s_max,
                                        const IntegratorConfig& base) {
  using namespace intlab::quadrics;
  HyperbolaEscape esc;

  GeodesicState cur = g0;
  struct Segment {
    double until, dt;
  };
  const std::vector<Segment> plan = {
      {10.0, 0.01}, {100.0, 0.1}, {s_max, 1.0}};
  bool head_done = false;
  for (const auto& seg : plan) {
    if (cur.s >= seg.until) continue;
    IntegratorConfig ic = base;
    ic.sample_dt = seg.dt;
    const auto traj = integrate_geodesic(cur, q, seg.until - cur.s, ic);
    if (!head_done) {
      esc.head = knoerrer_transform(traj, q);
      head_done = true;
    }
    const std::size_t from = esc.s.empty() ? 0 : 1;  // drop duplicated joint
    for (std::size_t i = from; i < traj.s.size(); ++i) {
      const GeodesicState g{traj.x[i], traj.xp[i], traj.s[i]};
      esc.s.push_back(traj.s[i]);
      esc.alpha.push_back(std::sqrt(std::abs(lagrange_multiplier(g, q))));
    }
    cur = GeodesicState{traj.x.back(), traj.xp.back(), traj.s.back()};
  }
  esc.tau = cumulative_quadrature(esc.s, esc.alpha);

  // log-log least squares on the last decade: alpha ~ A s^p
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < esc.s.size(); ++i) {
    if (esc.s[i] < s_max / 10.0 || esc.alpha[i] <= 0.0) continue;
    const double lx = std::log(esc.s[i]), ly = std::log(esc.alpha[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++count;
  }
  const double p = (sxy - sx * sy / count) / (sxx - sx * sx / count);
  const double log_a = (sy - p * sx) / count;
  esc.fitted_exponent = p;
  const double amp = std::exp(log_a);
  // remainder of int alpha ds beyond s_max under the fitted law
  const double remainder = amp * std::pow(s_max, p + 1.0) / (-(p + 1.0));
  esc.tau_infinity = esc.tau.back() + remainder;

  double tail = 0.0;
  for (std::size_t i = 0; i < esc.s.size(); ++i)
    if (esc.s[i] >= 1e3) tail = std::max(tail, esc.alpha[i]);
  esc.tail_rate = tail / esc.tau_infinity;
  return esc;
}

/// Pendulum-quadrature oracle for the period of the regularized 1-D Neumann
/// orbit: with energy E and B_eff = diag(beta0, beta1), theta' ^2 =
/// (2E - beta0) (1 - k^2 sin^2 theta), so P = 4 K(1/k) / (k sqrt(2E - beta0)).
inline double circle_neumann_period(const quadrics::Quadric& beff, const Vec& q0,
                                    const Vec& qp0) {
  const double e = quadrics::neumann_energy(q0, qp0, beff);
  const double c0 = 2.0 * e - beff.b[0];
  const double k2 = (beff.b[1] - beff.b[0]) / c0;
  if (!(c0 > 0.0) || !(k2 > 1.0))
    throw Error("circle_neumann_period: orbit is not a libration");
  const double k = std::sqrt(k2);
  return 4.0 * elliptic_k(1.0 / k) / (k * std::sqrt(c0));
}

inline RunOutput run_knoerrer_hyperbola(const ExperimentConfig& cfg) {
  using namespace intlab::quadrics;
  RunOutput out;
  out.report.experiment = "knoerrer";
  const Quadric q(cfg.has("b") ? cfg.get_vector("b") : Vec{1.0, -9.0});
  GeodesicState g0{{1.0 / std::sqrt(q.b[0]), 0.0}, {0.0, 1.0}, 0.0};
  const double s_max = cfg.get_double("s_max", 1e4);
  IntegratorConfig ic = integrator_from_config(cfg);

  const HyperbolaEscape esc = hyperbola_escape(q, g0, s_max, ic);
  out.report.add("tau_tail_rate", esc.tau_infinity, cfg.get_double("tol", 1e-6))
      .max_drift = esc.tail_rate;
  out.report.add("alpha_decay_exponent_plus2", esc.fitted_exponent, 0.1)
      .max_drift = std::abs(esc.fitted_exponent + 2.0);

  // regularized orbit: integrate the effective Neumann system over one
  // oracle period and require the state to close up
  const NeumannState n0 = esc.head->initial_state();
  const double period = circle_neumann_period(esc.head->effective, n0.q, n0.qp);
  IntegratorConfig nic = ic;
  nic.sample_dt = period;
  const auto orbit = integrate_neumann(n0, esc.head->effective, period, nic);
  const double ret = std::max(max_pointwise(orbit.q.back(), n0.q),
                              max_pointwise(orbit.qp.back(), n0.qp));
  out.report.add("periodic_return", period, cfg.get_double("return_tol", 1e-6))
      .max_drift = ret;

  std::string csv = "s,alpha,tau\n";
  for (std::size_t i = 0; i < esc.s.size(); ++i)
    csv += format_double(esc.s[i]) + ',' + format_double(esc.alpha[i]) + ',' +
           format_double(esc.tau[i]) + '\n';
  out.data_files["trajectory.csv"] = std::move(csv);
  return out;
}

inline RunOutput run_knoerrer(const ExperimentConfig& cfg) {
  const bool hyperbola = cfg.get_int("hyperbola", 0) != 0 ||
                         (cfg.has("b") && cfg.get_vector("b").size() == 2);
  return hyperbola ? run_knoerrer_hyperbola(cfg) : run_knoerrer_ellipsoid(cfg);
}

inline RunOutput run_neumann(const ExperimentConfig& cfg) {
  using namespace intlab::quadrics;
  RunOutput out;
  out.report.experiment = "neumann";
  const Quadric q(cfg.has("b") ? cfg.get_vector("b") : Vec{1.0, 2.0});
  Vec q0 = cfg.has("q0") ? cfg.get_vector("q0") : Vec{1.0, 0.0};
  Vec qp0 = cfg.has("qp0") ? cfg.get_vector("qp0") : Vec{0.0, 0.5};
  {
    const double r = norm(q0);
    for (double& v : q0) v /= r;
    const double t = dot(q0, qp0);
    for (std::size_t i = 0; i < qp0.size(); ++i) qp0[i] -= t * q0[i];
  }
  const double tau_end = cfg.get_double("tau_end", 100.0);
  IntegratorConfig ic = integrator_from_config(cfg);
  if (ic.sample_dt <= 0.0) ic.sample_dt = 0.01;

  const auto traj = integrate_neumann({q0, qp0, 0.0}, q, tau_end, ic);
  out.report.steps = traj.steps;
  DriftTracker tracker;
  for (std::size_t i = 0; i < traj.tau.size(); ++i) {
    tracker.observe("energy", neumann_energy(traj.q[i], traj.qp[i], q));
    tracker.observe("psi0", psi0(traj.qp[i], traj.q[i], q));
    tracker.observe_defect("unit_norm", std::abs(norm(traj.q[i]) - 1.0));
  }
  tracker.append_rows(out.report, cfg.get_double("tol", 1e-8));
  for (auto& row : out.report.rows)
    if (row.name == "psi0") row.threshold = cfg.get_double("psi0_tol", 1e-7);

  // shift invariance: B -> B - zI leaves orbits pointwise fixed
  const Vec zs = cfg.has("shifts") ? cfg.get_vector("shifts") : Vec{-1.0, 0.5, 2.0};
  const double shift_end = cfg.get_double("shift_tau_end", 10.0);
  IntegratorConfig sic = ic;
  sic.sample_dt = 0.05;
  const auto base = integrate_neumann({q0, qp0, 0.0}, q, shift_end, sic);
  for (double z : zs) {
    Vec shifted = q.b;
    for (double& v : shifted) v -= z;
    const auto other = integrate_neumann({q0, qp0, 0.0}, Quadric(shifted),
                                         shift_end, sic);
    double worst = 0.0;
    const std::size_t m = std::min(base.tau.size(), other.tau.size());
    for (std::size_t i = 0; i < m; ++i)
      worst = std::max({worst, max_pointwise(base.q[i], other.q[i]),
                        max_pointwise(base.qp[i], other.qp[i])});
    out.report.add("shift_invariance_z=" + format_double(z), 0.0,
                   cfg.get_double("shift_tol", 1e-7))
        .max_drift = worst;
  }

  std::string csv = "tau";
  for (std::size_t i = 0; i < q.ambient_dim(); ++i) csv += ",q" + std::to_string(i);
  for (std::size_t i = 0; i < q.ambient_dim(); ++i) csv += ",qp" + std::to_string(i);
  csv += ",energy,psi0\n";
  for (std::size_t i = 0; i < traj.tau.size(); ++i) {
    csv += format_double(traj.tau[i]);
    for (double v : traj.q[i]) csv += ',' + format_double(v);
    for (double v : traj.qp[i]) csv += ',' + format_double(v);
    csv += ',' + format_double(neumann_energy(traj.q[i], traj.qp[i], q)) + ',' +
           format_double(psi0(traj.qp[i], traj.q[i], q)) + '\n';
  }
  out.data_files["trajectory.csv"] = std::move(csv);
  return out;
}

// -- geodesic equivalence ---------------------------------------------------------

/// Distance from point p to the polyline (projection onto each segment).
inline double point_to_polyline(const Vec& p, const std::vector<Vec>& line) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    const Vec& a = line[i];
    const Vec& b = line[i + 1];
    Vec ab = b;
    for (std::size_t k = 0; k < ab.size(); ++k) ab[k] -= a[k];
    Vec ap = p;
    for (std::size_t k = 0; k < ap.size(); ++k) ap[k] -= a[k];
    const double denom = dot(ab, ab);
    double t = denom > 0 ? dot(ap, ab) / denom : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    double d2 = 0.0;
    for (std::size_t k = 0; k < ab.size(); ++k) {
      const double diff = ap[k] - t * ab[k];
      d2 += diff * diff;
    }
    best = std::min(best, d2);
  }
  return std::sqrt(best);
}

/// Parameter of the projection of p onto the polyline (times[i] interpolated).
inline double polyline_parameter(const Vec& p, const std::vector<Vec>& line,
                                 const std::vector<double>& times) {
  double best = std::numeric_limits<double>::infinity();
  double param = times.front();
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    const Vec& a = line[i];
    const Vec& b = line[i + 1];
    Vec ab = b;
    for (std::size_t k = 0; k < ab.size(); ++k) ab[k] -= a[k];
    Vec ap = p;
    for (std::size_t k = 0; k < ap.size(); ++k) ap[k] -= a[k];
    const double denom = dot(ab, ab);
    double t = denom > 0 ? dot(ap, ab) / denom : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    double d2 = 0.0;
    for (std::size_t k = 0; k < ab.size(); ++k) {
      const double diff = ap[k] - t * ab[k];
      d2 += diff * diff;
    }
    if (d2 < best) {
      best = d2;
      param = times[i] + t * (times[i + 1] - times[i]);
    }
  }
  return param;
}

inline RunOutput run_geodesic_equivalence(const ExperimentConfig& cfg) {
  using namespace intlab::quadrics;
  RunOutput out;
  out.report.experiment = "geodesic-equivalence";
  GeodesicSetup setup = geodesic_setup_from_config(cfg);
  const double length = cfg.get_double("length", 5.0);
  IntegratorConfig ic = integrator_from_config(cfg);

  // standard geodesic (unit-speed, so arclength = time) and its tau = int alpha ds
  IntegratorConfig gic = ic;
  if (gic.sample_dt <= 0.0) gic.sample_dt = 1e-3;
  const auto std_traj =
      integrate_geodesic(setup.state, setup.quadric, length, gic);
  std::vector<double> alpha(std_traj.s.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    const GeodesicState g{std_traj.x[i], std_traj.xp[i], std_traj.s[i]};
    alpha[i] = std::sqrt(std::abs(lagrange_multiplier(g, setup.quadric)));
  }
  const std::vector<double> tau = cumulative_quadrature(std_traj.s, alpha);

  // second-metric geodesic from the same initial point/direction
  IntegratorConfig eic = ic;
  if (eic.sample_dt <= 0.0) eic.sample_dt = 2e-3;
  const UnparametrizedCurve curve = equiv_metric_geodesic(
      setup.state, setup.quadric, length, eic, cfg.get_double("fd_h", 1e-5));

  // unparametrized trace agreement, both directions, away from the loose ends
  const double margin = 0.02 * length;
  auto cumlen = [](const std::vector<Vec>& xs) {
    std::vector<double> l(xs.size(), 0.0);
    for (std::size_t i = 1; i < xs.size(); ++i)
      l[i] = l[i - 1] + norm(xs[i] - xs[i - 1]);
    return l;
  };
  const auto len_b = cumlen(curve.x);
  const auto len_a = cumlen(std_traj.x);
  double worst = 0.0;
  for (std::size_t j = 0; j < curve.x.size(); ++j) {
    if (len_b[j] > length - margin) break;
    worst = std::max(worst, point_to_polyline(curve.x[j], std_traj.x));
  }
  for (std::size_t i = 0; i < std_traj.x.size(); ++i) {
    if (len_a[i] > len_b.back() - margin) break;
    worst = std::max(worst, point_to_polyline(std_traj.x[i], curve.x));
  }
  out.report.add("trace_distance", 0.0, cfg.get_double("tol", 1e-5)).max_drift =
      worst;

  // the dr^2 affine parameter must be an affine function of tau = int alpha ds
  std::vector<double> sig, tau_hat;
  for (std::size_t j = 0; j < curve.x.size(); ++j) {
    if (len_b[j] > length - margin) break;
    sig.push_back(curve.sigma[j]);
    tau_hat.push_back(polyline_parameter(curve.x[j], std_traj.x, tau));
  }
  double corr = 0.0;
  {
    const std::size_t m = sig.size();
    double ms = 0, mt = 0;
    for (std::size_t i = 0; i < m; ++i) {
      ms += sig[i];
      mt += tau_hat[i];
    }
    ms /= m;
    mt /= m;
    double css = 0, ctt = 0, cst = 0;
    for (std::size_t i = 0; i < m; ++i) {
      css += (sig[i] - ms) * (sig[i] - ms);
      ctt += (tau_hat[i] - mt) * (tau_hat[i] - mt);
      cst += (sig[i] - ms) * (tau_hat[i] - mt);
    }
    corr = cst / std::sqrt(css * ctt);
  }
  out.report.add("parameter_correlation_defect", 1.0,
                 cfg.get_double("corr_tol", 1e-6))
      .max_drift = 1.0 - std::abs(corr);

  std::string csv = "sigma";
  for (std::size_t i = 0; i < setup.quadric.ambient_dim(); ++i)
    csv += ",x" + std::to_string(i);
  csv += "\n";
  for (std::size_t j = 0; j < curve.x.size(); ++j) {
    csv += format_double(curve.sigma[j]);
    for (double v : curve.x[j]) csv += ',' + format_double(v);
    csv += '\n';
  }
  out.data_files["trajectory.csv"] = std::move(csv);
  return out;
}

inline RunOutput run_projective_chart(const ExperimentConfig& cfg) {
  using namespace intlab::quadrics;
  RunOutput out;
  out.report.experiment = "projective-chart";
  const Quadric q(cfg.has("b") ? cfg.get_vector("b") : Vec{-1.0, 1.0, 2.0});
  const int k = static_cast<int>(cfg.get_int("chart", 0));
  const int n_affine = static_cast<int>(cfg.get_int("affine_points", 100));
  const int n_inf = static_cast<int>(cfg.get_int("infinity_points", 20));
  std::mt19937_64 rng(static_cast<std::uint64_t>(cfg.get_int("seed", 0)));
  const std::size_t d = q.ambient_dim();

  // affine points: equality of the two quadratic forms under the chart change
  double worst_rel = 0.0;
  int accepted = 0;
  while (accepted < n_affine) {
    const Vec dir = random_unit(d, rng);
    const double c = q.bform(dir, dir);
    if (std::abs(c) < 1e-3 || c < 0.0) continue;
    Vec x = dir;
    for (double& v : x) v /= std::sqrt(c);
    if (std::abs(x[k]) < 0.05) continue;
    Vec v = random_unit(d, rng);
    const double t = q.bform(x, v);
    for (std::size_t i = 0; i < d; ++i) v[i] -= t * x[i];  // (Bx, v) = 0
    if (norm(v) < 1e-6) continue;
    const double lhs = dr2_value(x, v, q);
    const auto p = to_projective_chart(k, x);
    const Vec w = to_projective_tangent(k, x, v);
    const double rhs = projective_chart_metric(p, w, q);
    worst_rel = std::max(worst_rel,
                         std::abs(lhs - rhs) / std::max({1e-30, std::abs(lhs), std::abs(rhs)}));
    ++accepted;
  }
  out.report.add("affine_equality_rel", 0.0, cfg.get_double("tol", 1e-9))
      .max_drift = worst_rel;

  // points at infinity exist iff sum_{j != k} b_j y_j^2 = -b_k has solutions
  bool has_infinity = false;
  for (std::size_t j = 0; j < d; ++j)
    if (static_cast<int>(j) != k && q.b[j] * -q.b[k] > 0.0) has_infinity = true;
  if (has_infinity && n_inf > 0) {
    double worst_inf = 0.0, worst_constraint = 0.0;
    int got = 0;
    while (got < n_inf) {
      // sample y on the conic sum b_j y_j^2 = -b_k, y0 = 0
      Vec yc(d, 0.0);
      Vec dirs = random_unit(d - 1, rng);
      double s = 0.0;
      std::size_t m = 1;
      for (std::size_t j = 0; j < d; ++j)
        if (static_cast<int>(j) != k) {
          yc[m] = dirs[m - 1];
          s += q.b[j] * yc[m] * yc[m];
          ++m;
        }
      if (s * -q.b[k] <= 1e-6) continue;
      const double scale = std::sqrt(-q.b[k] / s);
      for (std::size_t i = 1; i < d; ++i) yc[i] *= scale;
      ProjectiveChartPoint p{k, yc};
      worst_constraint =
          std::max(worst_constraint, std::abs(projective_constraint(p, q)));
      // tangent: grad = (-2 y0, 2 b_j y_j) with y0 = 0
      Vec w = random_unit(d, rng);
      Vec grad(d, 0.0);
      m = 1;
      for (std::size_t j = 0; j < d; ++j)
        if (static_cast<int>(j) != k) {
          grad[m] = 2.0 * q.b[j] * yc[m];
          ++m;
        }
      const double g2 = dot(grad, grad);
      const double proj = dot(grad, w) / g2;
      for (std::size_t i = 0; i < d; ++i) w[i] -= proj * grad[i];
      const double val = projective_chart_metric(p, w, q);
      if (!std::isfinite(val)) worst_inf = 1.0;
      ++got;
    }
    out.report.add("infinity_values_finite", 0.0, 0.5).max_drift = worst_inf;
    out.report.add("infinity_constraint_defect", 0.0, 1e-12).max_drift =
        worst_constraint;
  }
  return out;
}

// -- dispatch -----------------------------------------------------------------------

inline RunOutput run_experiment(const std::string& name,
                                const ExperimentConfig& cfg) {
  if (name == "oscillator") return run_oscillator(cfg);
  if (name == "euler-top") return run_euler_top(cfg);
  if (name == "tshift") return run_tshift(cfg);
  if (name == "catmap") return run_catmap(cfg);
  if (name == "bachet") return run_bachet(cfg);
  if (name == "geodesic") return run_geodesic(cfg);
  if (name == "knoerrer") return run_knoerrer(cfg);
  if (name == "neumann") return run_neumann(cfg);
  if (name == "geodesic-equivalence") return run_geodesic_equivalence(cfg);
  if (name == "projective-chart") return run_projective_chart(cfg);
  throw ConfigError("unknown experiment '" + name + "'");
}

} // namespace intlab::experiments
