#pragma once

#include <cstdint>
#include <vector>

#include "lsainfer/engine.hpp"
#include "lsainfer/linalg.hpp"
#include "lsainfer/parallel.hpp"
#include "lsainfer/schedule.hpp"
#include "lsainfer/series.hpp"

namespace lsa {

/// G_{m:k} = (I - alpha_k Abar) ... (I - alpha_m Abar); identity for m > k.
Mat det_product_G(const Mat& Abar, const StepSchedule& schedule, std::uint64_t m, std::uint64_t k);

/// Q_l = alpha_l sum_{j=l}^{n-1} G_{l+1:j}, by direct summation (O(n d^3)).
Mat q_matrix(const Mat& Abar, const StepSchedule& schedule, std::uint64_t ell, std::uint64_t n);

/// All Q_l for l = 1..n-1 (returned at index l-1) by the backward recursion
/// Q_l = alpha_l (I + (I - alpha_{l+1} Abar) Q_{l+1} / alpha_{l+1}).
std::vector<Mat> q_matrices(const Mat& Abar, const StepSchedule& schedule, std::uint64_t n);

/// Sigma_n = n^{-1} sum_{k=1}^{n-1} Q_k Sigma_eps Q_k^T.
Mat sigma_n(const Mat& Abar, const Mat& Sigma_eps, const StepSchedule& schedule, std::uint64_t n);

/// Sigma_inf = Abar^{-1} Sigma_eps Abar^{-T}, symmetrized.
Mat sigma_inf(const Mat& Abar, const Mat& Sigma_eps);

/// Plug-in n^{-1} sum_l Q_l eps_l eps_l^T Q_l^T from a trajectory's noises.
/// Diagnostic only: needs theta*.
Mat sigma_n_boot(const Trajectory& traj, const std::vector<Mat>& q_matrices);

struct CovarianceReport {
  Mat Sigma_n;
  Mat Sigma_inf;
  double gap = 0.0;  // ||Sigma_n - Sigma_inf||
  std::uint64_t n = 0;
  StepSchedule schedule;
  double lambda_min_n = 0.0;
  double lambda_min_inf = 0.0;
};

CovarianceReport covariance_report(const Mat& Abar, const Mat& Sigma_eps, const StepSchedule& schedule,
                                   std::uint64_t n);

/// (n, ||Sigma_n - Sigma_inf||) over an increasing grid.
DistanceSeries covariance_gap_series(const Mat& Abar, const Mat& Sigma_eps, const StepSchedule& schedule,
                                     const std::vector<std::uint64_t>& n_grid, const Parallelism& par = {});

}  // namespace lsa
