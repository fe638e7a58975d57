#pragma once

#include <stdexcept>
#include <string>

namespace intlab {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// -- numerics -------------------------------------------------------------

class EigenNonConvergence : public Error {
public:
  EigenNonConvergence(double off_diag_residual)
      : Error("Jacobi eigensolver did not converge; off-diagonal residual = " +
              std::to_string(off_diag_residual)),
        off_diag_residual(off_diag_residual) {}
  double off_diag_residual;
};

class PositiveDefinitenessViolation : public Error {
public:
  PositiveDefinitenessViolation(double min_eigenvalue)
      : Error("matrix is not positive definite; min eigenvalue = " +
              std::to_string(min_eigenvalue)),
        min_eigenvalue(min_eigenvalue) {}
  double min_eigenvalue;
};

class StepBudgetExceeded : public Error {
public:
  StepBudgetExceeded(std::size_t max_steps, double t_reached)
      : Error("integrator exceeded max_steps = " + std::to_string(max_steps) +
              " at t = " + std::to_string(t_reached)),
        max_steps(max_steps), t_reached(t_reached) {}
  std::size_t max_steps;
  double t_reached;
};

class NumericalBlowup : public Error {
public:
  NumericalBlowup(double last_valid_time)
      : Error("non-finite value in right-hand side; last valid t = " +
              std::to_string(last_valid_time)),
        last_valid_time(last_valid_time) {}
  double last_valid_time;
};

class ProjectionFailure : public Error {
public:
  ProjectionFailure(double residual)
      : Error("constraint projection did not converge; residual = " +
              std::to_string(residual)),
        residual(residual) {}
  double residual;
};

class InvalidSampling : public Error {
public:
  explicit InvalidSampling(const std::string& what) : Error(what) {}
};

// -- euler_top ------------------------------------------------------------

class SingularInertia : public Error {
public:
  SingularInertia(double eigenvalue_sum)
      : Error("inertia eigenvalue sum j_i + j_j = " +
              std::to_string(eigenvalue_sum) + " is numerically singular"),
        eigenvalue_sum(eigenvalue_sum) {}
  double eigenvalue_sum;
};

// -- bachet ---------------------------------------------------------------

class UnsupportedDegree : public Error {
public:
  explicit UnsupportedDegree(int n)
      : Error("multiplication-by-n map supported only for 2 <= n <= 6, got " +
              std::to_string(n)),
        n(n) {}
  int n;
};

class BudgetExceeded : public Error {
public:
  BudgetExceeded(std::size_t bits, std::size_t budget)
      : Error("exact-arithmetic size " + std::to_string(bits) +
              " bits exceeds budget of " + std::to_string(budget)),
        bits(bits), budget(budget) {}
  std::size_t bits;
  std::size_t budget;
};

// -- quadrics -------------------------------------------------------------

class DegeneratePoint : public Error {
public:
  explicit DegeneratePoint(const std::string& what) : Error(what) {}
};

class KnoerrerUndefined : public Error {
public:
  explicit KnoerrerUndefined(const std::string& what) : Error(what) {}
};

class ChartSwitch : public Error {
public:
  explicit ChartSwitch(const std::string& what) : Error(what) {}
};

class DegenerateChartPoint : public Error {
public:
  explicit DegenerateChartPoint(const std::string& what) : Error(what) {}
};

// -- cli ------------------------------------------------------------------

class ConfigError : public Error {
public:
  ConfigError(const std::string& what, int line = 0)
      : Error(line > 0 ? "config line " + std::to_string(line) + ": " + what
                       : "config: " + what),
        line(line) {}
  int line;
};

} // namespace intlab
