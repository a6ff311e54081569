#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "lsainfer/linalg.hpp"
#include "lsainfer/model.hpp"
#include "lsainfer/parallel.hpp"
#include "lsainfer/schedule.hpp"

namespace lsa {

/// Iterates whose norm exceeds this are treated as divergence.
inline constexpr double kDivergenceThreshold = 1e12;

namespace detail {

/// theta <- theta - step * (A theta - b) for column-major A. Every recursion
/// in the library (plain, streaming, bootstrap) goes through this kernel so
/// that unit multiplier weights reproduce the plain run bit-for-bit.
inline void lsa_update(const double* A, const double* b, double* theta, double step, int d, double* residual) {
  for (int i = 0; i < d; ++i) {
    double acc = 0.0;
    for (int j = 0; j < d; ++j) acc += A[i + j * d] * theta[j];
    residual[i] = acc - b[i];
  }
  for (int i = 0; i < d; ++i) theta[i] -= step * residual[i];
}

/// Throws DivergenceError when ||theta|| > kDivergenceThreshold or non-finite.
void check_divergence(const double* theta, int d, std::uint64_t k, const char* origin);

}  // namespace detail

/// A recorded LSA run: observations (A_k, b_k) for k = 1..n-1, iterates
/// theta_k for k = 0..n-1, the Polyak-Ruppert average over k = 0..n-1 and,
/// when the instance is attached, the noises epsilon_k.
struct Trajectory {
  std::shared_ptr<const LsaInstance> instance;  // null for trajectories read from disk
  StepSchedule schedule;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  Vec theta0;
  std::vector<Observation> observations;  // [k-1], k = 1..n-1
  std::vector<Vec> iterates;              // [k],   k = 0..n-1
  Vec average;
  std::vector<Vec> noises;                // [k-1], k = 1..n-1; empty without instance

  int dim() const { return static_cast<int>(theta0.size()); }
  const Observation& observation(std::uint64_t k) const { return observations.at(k - 1); }
  const Vec& noise(std::uint64_t k) const { return noises.at(k - 1); }
  double alpha(std::uint64_t k) const { return schedule(k); }
  bool has_theta_star() const { return instance != nullptr; }
};

/// Runs theta_k = theta_{k-1} - alpha_k (A_k theta_{k-1} - b_k), k = 1..n-1,
/// drawing observations from Rng(seed). Throws DivergenceError.
Trajectory lsa_run(std::shared_ptr<const LsaInstance> instance, const StepSchedule& schedule, std::uint64_t n,
                   const Vec& theta0, std::uint64_t seed);
Trajectory lsa_run(const LsaInstance& instance, const StepSchedule& schedule, std::uint64_t n, const Vec& theta0,
                   std::uint64_t seed);

/// Storage-free run: only running sums are kept.
struct StreamingResult {
  Vec average;
  Vec last;
};

/// Same observation stream and arithmetic as lsa_run.
StreamingResult lsa_run_streaming(const LsaInstance& instance, const StepSchedule& schedule, std::uint64_t n,
                                  const Vec& theta0, std::uint64_t seed);

/// Averages theta_bar_n for every n in an increasing grid, read off one run of
/// length max(grid). Each entry equals lsa_run(..., n, ...).average.
std::vector<Vec> lsa_prefix_averages(const LsaInstance& instance, const StepSchedule& schedule,
                                     const std::vector<std::uint64_t>& n_grid, const Vec& theta0, std::uint64_t seed);

/// Gamma_{m:k} = (I - alpha_k A_k) ... (I - alpha_m A_m); identity for m > k.
Mat gamma_product(const Trajectory& traj, std::uint64_t m, std::uint64_t k);

/// theta_k - theta* = transient_k + sum_{l<=L} J[l][k] + H[L][k].
struct ErrorDecomposition {
  int L = 0;
  std::vector<Vec> transient;           // Gamma_{1:k}(theta0 - theta*), k = 0..n-1
  std::vector<std::vector<Vec>> J;      // J[l][k], l = 0..L
  std::vector<std::vector<Vec>> H;      // H[l][k], l = 0..L
  const std::vector<Vec>& H_last() const { return H.back(); }
};

/// Perturbation expansion of the error up to depth L in {0, 1, 2}.
ErrorDecomposition error_decompose(const Trajectory& traj, int L);

/// max_k ||theta_k - theta* - (transient + sum J + H_L)|| / (1 + ||theta_k - theta*||).
double reconstruction_residual(const Trajectory& traj, const ErrorDecomposition& dec);

/// ||sum_k J_k^(0) + sum_l Q_l eps_l|| / (1 + ||sum_k J_k^(0)||). `q_matrices`
/// and `noises` are indexed [l-1] for l = 1..n-1.
double linear_statistic_identity(const ErrorDecomposition& dec, const std::vector<Mat>& q_matrices,
                                 const std::vector<Vec>& noises);

/// ||(theta_bar - theta*) - n^{-1}[sum_k transient_k + sum J0 + sum H0]|| / (1 + ||theta_bar - theta*||).
double averaged_error_identity(const Trajectory& traj, const ErrorDecomposition& dec);

struct StabilityDiagnostic {
  double empirical = 0.0;  // E^{1/p} ||Gamma_{m:k}||^p
  double stderr_ = 0.0;    // delta-method Monte-Carlo standard error
  double bound = 0.0;      // sqrt(kappa_Q) e prod (1 - a alpha_l / 2)
  double ratio = 0.0;      // empirical / bound
};

/// Monte-Carlo estimate of the p-th moment of ||Gamma_{m:k}|| over R fresh
/// observation streams, against the exponential-stability bound (P = I).
StabilityDiagnostic stability_diagnostic(const LsaInstance& instance, const StepSchedule& schedule, std::uint64_t m,
                                         std::uint64_t k, double p, std::uint64_t R, std::uint64_t seed,
                                         const Parallelism& par = {});

/// Trajectory persistence.
void write_trajectory_binary(const Trajectory& traj, const std::string& path);
Trajectory read_trajectory_binary(const std::string& path);
void write_trajectory_csv(const Trajectory& traj, const std::string& path);
std::string trajectory_csv(const Trajectory& traj);

}  // namespace lsa
