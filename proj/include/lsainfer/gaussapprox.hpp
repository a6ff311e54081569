#pragma once

#include <cstdint>
#include <vector>

#include "lsainfer/bootstrap.hpp"
#include "lsainfer/linalg.hpp"
#include "lsainfer/model.hpp"
#include "lsainfer/parallel.hpp"
#include "lsainfer/schedule.hpp"
#include "lsainfer/series.hpp"

namespace lsa {

double normal_cdf(double x);

/// sup_x |Phi(x / sigma) - Phi(x)|, evaluated at the density crossing
/// x*^2 = 2 sigma^2 ln(sigma) / (sigma^2 - 1).
double kolmogorov_normal_vs_normal_1d(double sigma);

/// sqrt(Sigma_n) for Abar = 1, Sigma_eps = 1.
double lower_bound_sigma_n_1d(const StepSchedule& schedule, std::uint64_t n);

/// d x K matrix of unit columns: the d coordinate axes, then K - d seeded
/// random directions. K < d keeps the first K axes.
Mat direction_set(int d, std::size_t K, std::uint64_t seed);

struct HalfspaceDistance {
  double distance = 0.0;
  double standard_error = 0.0;
  std::vector<double> per_direction;
};

/// max over directions u of the one-sample KS distance between the projected
/// samples (rows of an R x d matrix) and N(0, u^T Sigma u).
HalfspaceDistance halfspace_distance(const Mat& samples, const Mat& reference_cov, const Mat& directions);

/// Two-sample version: max over u of the KS distance between the projections
/// of two empirical laws. Standard error sqrt(1/R_a + 1/R_b).
HalfspaceDistance halfspace_distance_two_sample(const Mat& a, const Mat& b, const Mat& directions);

/// sup over the grid of |P_hat(||X|| <= r) - P(||G|| <= r)|, G ~ N(0, Sigma).
/// Gaussian ball probabilities come from 1e6 seeded reference draws, cached
/// per (Sigma, seed).
double ball_distance(const Mat& samples, const Mat& reference_cov, const std::vector<double>& radii_grid,
                     std::uint64_t reference_seed = 0x5eed);

/// `count` equispaced radii covering [0, max sample norm].
std::vector<double> default_radii_grid(const Mat& samples, std::size_t count = 512);

/// Dvoretzky-Kiefer-Wolfowitz band sqrt(ln(2/delta) / (2R)).
double dkw_band(std::uint64_t R, double delta = 0.05);

struct CltOptions {
  Vec theta0;  // empty -> theta*
  Parallelism par;
};

/// R x d matrices of sqrt(n)(theta_bar_n - theta*), one per grid point.
/// Replication r uses stream derive_seed(seed, r) and supplies every grid
/// point from one run (prefix averages), so each matrix holds R independent
/// draws of the exact law at that n.
std::vector<Mat> clt_samples(const LsaInstance& instance, const StepSchedule& schedule,
                             const std::vector<std::uint64_t>& n_grid, std::uint64_t R, std::uint64_t seed,
                             const CltOptions& options = {});

/// Half-space distance to N(0, Sigma_n), N(0, Sigma_inf) or N(0, I) per n.
/// Adds a note when the smallest distance is within 3 DKW bands of zero.
DistanceSeries clt_rate_experiment(const LsaInstance& instance, const StepSchedule& schedule,
                                   const std::vector<std::uint64_t>& n_grid, std::uint64_t R, std::size_t K,
                                   std::uint64_t seed, ReferenceLaw reference, const CltOptions& options = {});

struct BootValidityOptions {
  Vec theta0;  // empty -> theta*
  WeightKind weights = WeightKind::two_point;
  std::size_t K = 32;
  Parallelism par;
};

struct BootValidityResult {
  DistanceSeries median;
  DistanceSeries p90;
  std::vector<std::vector<double>> per_trajectory;  // [grid][trajectory]
};

/// Per n: real-world law of sqrt(n)(theta_bar_n - theta*) from R_real runs,
/// bootstrap law of sqrt(n)(theta_bar_n^b - theta_bar_n) from M replicates on
/// each of R_outer data trajectories, and the two-sample half-space distance
/// between them. Reports the median and 90th percentile over trajectories.
BootValidityResult bootstrap_validity_experiment(const LsaInstance& instance, const StepSchedule& schedule,
                                                 const std::vector<std::uint64_t>& n_grid, std::size_t M,
                                                 std::uint64_t R_outer, std::uint64_t R_real, std::uint64_t seed,
                                                 const BootValidityOptions& options = {});

}  // namespace lsa
