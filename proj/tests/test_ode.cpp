#include <catch2/catch_amalgamated.hpp>

#include "intlab/constraints.hpp"
#include "intlab/ode.hpp"
#include "intlab/quadrature.hpp"

using namespace intlab;

namespace {

IntegratorConfig rk45() {
  IntegratorConfig c;
  c.method = IntegratorConfig::Method::rk45_adaptive;
  c.abs_tol = 1e-10;
  c.rel_tol = 1e-10;
  return c;
}

} // namespace

TEST_CASE("integrate: zero field is constant") {
  auto rhs = [](double, const Vec&, Vec& dy) { dy[0] = 0.0; };
  const auto traj = integrate(rhs, {1.0}, 0.0, 1.0, rk45());
  CHECK(traj.times.front() == 0.0);
  CHECK(traj.times.back() == Catch::Approx(1.0));
  for (const auto& y : traj.states) CHECK(y[0] == 1.0);
}

TEST_CASE("integrate: exponential growth hits e") {
  auto rhs = [](double, const Vec& y, Vec& dy) { dy[0] = y[0]; };
  const auto traj = integrate(rhs, {1.0}, 0.0, 1.0, rk45());
  CHECK(traj.back_state()[0] == Catch::Approx(std::exp(1.0)).margin(1e-8));
}

TEST_CASE("integrate: rotation returns after one period") {
  auto rhs = [](double, const Vec& y, Vec& dy) {
    dy[0] = -y[1];
    dy[1] = y[0];
  };
  const auto traj = integrate(rhs, {1.0, 0.0}, 0.0, 2.0 * M_PI, rk45());
  CHECK(traj.back_state()[0] == Catch::Approx(1.0).margin(1e-7));
  CHECK(traj.back_state()[1] == Catch::Approx(0.0).margin(1e-7));
}

TEST_CASE("integrate: rotation conserves the radius over 100 periods") {
  auto rhs = [](double, const Vec& y, Vec& dy) {
    dy[0] = -y[1];
    dy[1] = y[0];
  };
  const auto traj = integrate(rhs, {1.0, 0.0}, 0.0, 200.0 * M_PI, rk45());
  double worst = 0.0;
  for (const auto& y : traj.states)
    worst = std::max(worst, std::abs(y[0] * y[0] + y[1] * y[1] - 1.0));
  CHECK(worst <= 1e-8);
}

TEST_CASE("integrate: rk4 fixed step accuracy scales as dt^4") {
  auto rhs = [](double, const Vec& y, Vec& dy) { dy[0] = y[0]; };
  IntegratorConfig c;
  c.method = IntegratorConfig::Method::rk4_fixed;
  c.dt = 0.1;
  const double e1 = std::abs(integrate(rhs, {1.0}, 0.0, 1.0, c).back_state()[0] -
                             std::exp(1.0));
  c.dt = 0.05;
  const double e2 = std::abs(integrate(rhs, {1.0}, 0.0, 1.0, c).back_state()[0] -
                             std::exp(1.0));
  CHECK(e1 / e2 > 12.0);  // ~16 for order 4
  CHECK(e1 / e2 < 20.0);
}

TEST_CASE("integrate: exact-time sampling grid") {
  auto rhs = [](double, const Vec& y, Vec& dy) { dy[0] = y[0]; };
  IntegratorConfig c = rk45();
  c.sample_dt = 0.125;
  const auto traj = integrate(rhs, {1.0}, 0.0, 1.0, c);
  REQUIRE(traj.times.size() == 9);
  for (std::size_t i = 0; i < traj.times.size(); ++i)
    CHECK(traj.times[i] == Catch::Approx(0.125 * i).margin(1e-12));
}

TEST_CASE("integrate: step budget raises") {
  auto rhs = [](double, const Vec& y, Vec& dy) { dy[0] = -y[0]; };
  IntegratorConfig c = rk45();
  c.max_steps = 5;
  CHECK_THROWS_AS(integrate(rhs, {1.0}, 0.0, 100.0, c), StepBudgetExceeded);
}

TEST_CASE("integrate: NaN in the rhs reports the last valid time") {
  auto rhs = [](double t, const Vec& y, Vec& dy) {
    dy[0] = t < 0.5 ? y[0] : std::numeric_limits<double>::quiet_NaN();
  };
  try {
    integrate(rhs, {1.0}, 0.0, 1.0, rk45());
    FAIL("expected NumericalBlowup");
  } catch (const NumericalBlowup& e) {
    CHECK(e.last_valid_time <= 0.5 + 0.1);
    CHECK(e.last_valid_time >= 0.0);
  }
}

TEST_CASE("integrate: deterministic for a fixed config") {
  auto rhs = [](double t, const Vec& y, Vec& dy) {
    dy[0] = std::sin(t) * y[1];
    dy[1] = y[0] - 0.1 * y[1];
  };
  const auto a = integrate(rhs, {0.3, -0.2}, 0.0, 7.0, rk45());
  const auto b = integrate(rhs, {0.3, -0.2}, 0.0, 7.0, rk45());
  REQUIRE(a.times == b.times);
  REQUIRE(a.states == b.states);
}

TEST_CASE("project_to_constraints: radial scaling onto the unit sphere") {
  std::vector<Constraint> cs{{[](const Vec& y) { return dot(y, y) - 1.0; },
                              [](const Vec& y) { return 2.0 * y; }}};
  const Vec p = project_to_constraints({1.0000001, 0.0, 0.0}, cs);
  CHECK(p[0] == Catch::Approx(1.0).margin(1e-12));
  CHECK(p[1] == 0.0);
  CHECK(p[2] == 0.0);

  // a point already on the constraint is a fixed point
  const Vec q = project_to_constraints({0.0, 1.0, 0.0}, cs);
  CHECK(q[0] == 0.0);
  CHECK(q[1] == 1.0);

  // idempotence
  const Vec p2 = project_to_constraints(p, cs);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(p2[i] - p[i]) <= 1e-12);
}

TEST_CASE("project_to_constraints: quadric constraint residual") {
  // (A^{-1} x, x) = 1 with A = diag(1, 4), i.e. B = diag(1, 1/4)
  const Vec b{1.0, 0.25};
  std::vector<Constraint> cs{
      {[b](const Vec& y) { return b[0] * y[0] * y[0] + b[1] * y[1] * y[1] - 1.0; },
       [b](const Vec& y) {
         return Vec{2.0 * b[0] * y[0], 2.0 * b[1] * y[1]};
       }}};
  const Vec y0{1.001, 0.002};
  const Vec p = project_to_constraints(y0, cs);
  CHECK(std::abs(b[0] * p[0] * p[0] + b[1] * p[1] * p[1] - 1.0) <= 1e-12);
  // displacement lies along the entry gradient
  const Vec g{2.0 * b[0] * y0[0], 2.0 * b[1] * y0[1]};
  const Vec d{p[0] - y0[0], p[1] - y0[1]};
  const double cross = d[0] * g[1] - d[1] * g[0];
  CHECK(std::abs(cross) <= 1e-12 * norm(g));
}

TEST_CASE("project_to_constraints: unreachable constraint fails") {
  std::vector<Constraint> cs{{[](const Vec& y) { return y[0] * y[0] + 1.0; },
                              [](const Vec& y) {
                                return Vec{2.0 * y[0]};
                              }}};
  CHECK_THROWS_AS(project_to_constraints({0.05}, cs), ProjectionFailure);
}

TEST_CASE("cumulative_quadrature: exact cases") {
  {
    std::vector<double> t, g;
    for (int i = 0; i <= 17; ++i) {
      t.push_back(i / 17.0);
      g.push_back(1.0);
    }
    const auto acc = cumulative_quadrature(t, g);
    CHECK(acc.back() == Catch::Approx(1.0).margin(1e-15));
  }
  {
    std::vector<double> t, g;
    for (int i = 0; i <= 100; ++i) {
      t.push_back(i / 100.0);
      g.push_back(i / 100.0);
    }
    const auto acc = cumulative_quadrature(t, g);
    CHECK(acc.back() == Catch::Approx(0.5).margin(1e-15));
  }
}

TEST_CASE("cumulative_quadrature: 1/(1+t)^2 on a graded grid") {
  std::vector<double> t, g;
  double x = 0.0;
  while (x < 100.0) {
    t.push_back(x);
    g.push_back(1.0 / ((1.0 + x) * (1.0 + x)));
    x += 1e-3 * (1.0 + x);
  }
  t.push_back(100.0);
  g.push_back(1.0 / (101.0 * 101.0));
  const auto acc = cumulative_quadrature(t, g);
  CHECK(acc.back() == Catch::Approx(100.0 / 101.0).margin(1e-6));
}

TEST_CASE("cumulative_quadrature: rejects disordered samples") {
  CHECK_THROWS_AS(cumulative_quadrature({0.0, 1.0, 0.5}, {1.0, 1.0, 1.0}),
                  InvalidSampling);
  CHECK_THROWS_AS(cumulative_quadrature({0.0, 0.0}, {1.0, 1.0}), InvalidSampling);
}
