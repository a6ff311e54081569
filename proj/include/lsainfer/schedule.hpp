#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lsainfer/linalg.hpp"

namespace lsa {

/// Polynomially decaying step sizes alpha_k = c0 / (k + k0)^gamma.
struct StepSchedule {
  double c0 = 1.0;
  double gamma = 2.0 / 3.0;
  std::uint64_t k0 = 0;

  double operator()(std::uint64_t k) const;
  /// Throws ConfigError unless c0 > 0 and gamma in (1/2, 1).
  void validate() const;
};

double step_size(const StepSchedule& schedule, std::uint64_t k);

/// Lyapunov-derived constants for a Hurwitz -Abar.
struct StabilityConstants {
  Mat Q;
  Mat P;
  double a = 0.0;
  double alpha_inf = 0.0;
  double kappa_Q = 1.0;
  double b_Q = 0.0;
  double bA = 0.0;
  double norm_Q = 0.0;         // ||Q||
  double lambda_min_P = 0.0;
  double norm_Abar_Q = 0.0;    // ||Abar||_Q
};

/// Solves Abar^T Q + Q Abar = P through the d^2 x d^2 vectorized system.
/// Throws NotHurwitzError when the system is singular or Q is not SPD.
Mat lyapunov_solve(const Mat& Abar, const Mat& P);

StabilityConstants stability_constants(const Mat& Abar, const Mat& P, double bA);
/// P = I.
StabilityConstants stability_constants(const Mat& Abar, double bA);

struct AssumptionCheck {
  std::string name;
  double required = 0.0;
  double actual = 0.0;
  bool satisfied = false;
  std::string note;
};

/// Report-only assumption evaluation; never thrown, only annotated.
struct AssumptionReport {
  bool passed = true;
  std::vector<AssumptionCheck> checks;

  void add(std::string name, double required, double actual, bool satisfied, std::string note = {});
  void merge(const AssumptionReport& other);
  const AssumptionCheck* find(const std::string& name) const;
  std::vector<std::string> failing() const;
  /// Aligned plain-text table.
  std::string to_table() const;
};

/// max(2, p): the moment order used by the step-size assumption.
double effective_moment_order(double p);
/// max(2, p, ln d).
double effective_moment_order(double p, int d);

/// c0 in (0, alpha_inf], gamma in (1/2, 1) and
/// k0 >= max{(16/(a c0))^{1/(1-gamma)}, (2 p kappa_Q bA^2/(a c0))^{1/gamma}}.
AssumptionReport check_step_size(const StepSchedule& schedule, const StabilityConstants& consts, double p);

/// h(n) = ceil((8 bA sqrt(kappa_Q) (1 + 2 ln(10 n^3 d)) / (a (2 - 2^gamma)))^2).
std::uint64_t block_size_h(std::uint64_t n, int d, const StabilityConstants& consts, const StepSchedule& schedule);

/// sqrt(kappa_Q) (c0 + 2 / (a (1 - gamma))): uniform bound on ||Q_ell||.
double q_bound_constant(const StabilityConstants& consts, const StepSchedule& schedule);

struct BootstrapAssumptionInputs {
  std::uint64_t n = 0;
  int d = 1;
  double eps_sup = 0.0;
  double lambda_min_sigma_inf = 0.0;
  double c_q_bound = 0.0;
  /// Constant of the ||Sigma_n - Sigma_inf|| <= C n^{gamma-1} bound, if known
  /// (analytically or from a Monte-Carlo surrogate).
  std::optional<double> sigma_gap_constant;
};

/// Evaluates the four k0^gamma branches, the sample-size lower bound on
/// lambda_min(Sigma_inf) and the n >= k0 + 1 / n^{1-gamma} conditions.
AssumptionReport check_bootstrap_assumptions(const StepSchedule& schedule, const StabilityConstants& consts,
                                             const BootstrapAssumptionInputs& in);

/// Right-hand side of the lambda_min(Sigma_inf) sample-size constraint.
double sample_size_a5_rhs(std::uint64_t n, int d, double eps_sup, double c_q_bound);

/// Three-branch rate envelope phi_n (branch selected by gamma vs 2/3).
double rate_envelope_phi(std::uint64_t n, const StepSchedule& schedule);

}  // namespace lsa
