#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lsainfer/engine.hpp"
#include "lsainfer/model.hpp"
#include "lsainfer/parallel.hpp"
#include "lsainfer/rng.hpp"
#include "lsainfer/schedule.hpp"

namespace lsa {

/// Multiplier laws with mean 1 and variance 1. `unit` (w = 1) is a
/// degenerate diagnostic law that collapses the bootstrap onto the plain run.
enum class WeightKind { two_point, exponential, poisson, unit };

std::string to_string(WeightKind kind);
WeightKind weight_kind_from_string(const std::string& name);

struct WeightScheme {
  WeightKind kind = WeightKind::two_point;

  double mean() const { return 1.0; }
  double variance() const { return kind == WeightKind::unit ? 0.0 : 1.0; }
  /// E|w - 1|^3, exact per law.
  double m3() const;
};

/// Draws one multiplier from a sequential stream.
double sample_weight(const WeightScheme& scheme, Rng& rng);

/// Counter-based multiplier w_k for the stream keyed by `key`; independent of
/// evaluation order, so replicate partitioning never changes results.
double weight_at(WeightKind kind, std::uint64_t key, std::uint64_t k);

/// M perturbed averages theta_bar_n^{b,l} sharing one trajectory's observations.
struct BootstrapEnsemble {
  std::size_t M = 0;
  std::vector<Vec> averages;
  Vec base_average;
  std::uint64_t n = 0;
  WeightScheme scheme;
  std::uint64_t seed = 0;

  /// d x M matrix of theta_bar^{b,l} - theta_bar.
  Mat deviations() const;
};

/// Replays the trajectory's observations with multipliers:
/// theta_k^{b,l} = theta_{k-1}^{b,l} - alpha_k w_k^l (A_k theta_{k-1}^{b,l} - b_k),
/// theta_0^{b,l} = theta_0. Weight stream l is keyed by derive_seed(seed, l).
BootstrapEnsemble bootstrap_run(const Trajectory& traj, std::size_t M, WeightScheme scheme, std::uint64_t seed,
                                const Parallelism& par = {});

/// One streaming pass that updates the base iterate and M replicates
/// step-synchronously, reading off averages at every n in the grid.
struct OnlineBootstrapResult {
  std::vector<Vec> base_averages;       // per grid point
  std::vector<Mat> replicate_averages;  // per grid point, d x M
};

OnlineBootstrapResult online_bootstrap(const LsaInstance& instance, const StepSchedule& schedule,
                                       const std::vector<std::uint64_t>& n_grid, const Vec& theta0,
                                       std::uint64_t data_seed, std::size_t M, WeightKind weights,
                                       std::uint64_t weight_seed);

struct ConfidenceReport {
  double level = 0.9;
  Vec center;
  Vec lo;
  Vec hi;
  double sup_radius = 0.0;
  double ellipsoid_radius = 0.0;
  Mat shape;  // ensemble sample covariance + 1e-10 I
  bool degenerate = false;
  std::optional<bool> contains_target;        // all coordinate intervals
  std::vector<bool> coordinate_contains;      // per coordinate, when target known
  std::optional<bool> sup_contains;
  std::optional<bool> ellipsoid_contains;
};

/// Order statistic at 1-based index ceil(level * M) of `values`.
double order_statistic(std::vector<double> values, double level);

/// Sets centred at the base average. Per-coordinate interval: centre +/- the
/// level-quantile of |deviation_i|. Sup-norm and ellipsoidal radii: level
/// quantiles of max_i |deviation_i| and of the Mahalanobis norm under the
/// ensemble covariance. A degenerate ensemble (lambda_min < 1e-14 before the
/// ridge) is flagged; with `require_ellipsoid` it throws instead.
ConfidenceReport confidence_sets(const BootstrapEnsemble& ensemble, double level,
                                 const std::optional<Vec>& theta_star = std::nullopt,
                                 bool require_ellipsoid = false);

/// Same, from a centre and a d x M deviation matrix.
ConfidenceReport confidence_sets(const Vec& center, const Mat& deviations, double level,
                                 const std::optional<Vec>& theta_star = std::nullopt,
                                 bool require_ellipsoid = false);

struct CoverageOptions {
  Vec theta0;  // empty -> zero vector
  WeightKind weights = WeightKind::two_point;
  Parallelism par;
};

struct CoverageResult {
  double level = 0.0;
  std::vector<double> coordinate_coverage;  // marginal, per coordinate
  std::vector<double> coordinate_stderr;
  double box_coverage = 0.0;                // all coordinates jointly
  double box_stderr = 0.0;
  double sup_coverage = 0.0;
  double sup_stderr = 0.0;
  double ellipsoid_coverage = 0.0;
  double ellipsoid_stderr = 0.0;
  std::uint64_t replications = 0;  // successful outer replications
  std::uint64_t divergences = 0;
  bool degenerate = false;
  Vec mean_coordinate_radius;
};

/// R outer replications of: fresh trajectory, M-replicate bootstrap, check
/// whether theta* lies in each set. Standard errors sqrt(p(1-p)/R).
CoverageResult coverage_experiment(const LsaInstance& instance, const StepSchedule& schedule, std::uint64_t n,
                                   std::size_t M, std::uint64_t R, double level, std::uint64_t seed,
                                   const CoverageOptions& options = {});

std::string ensemble_csv(const BootstrapEnsemble& ensemble);

}  // namespace lsa
