#include "lsainfer/covariance.hpp"

#include "lsainfer/errors.hpp"

namespace lsa {

Mat det_product_G(const Mat& Abar, const StepSchedule& schedule, std::uint64_t m, std::uint64_t k) {
  if (m < 1) throw ConfigError("covariance.det_product_G", "m must be >= 1");
  const auto d = Abar.rows();
  Mat G = Mat::Identity(d, d);
  for (std::uint64_t l = m; l <= k; ++l) G = (Mat::Identity(d, d) - schedule(l) * Abar) * G;
  return G;
}

Mat q_matrix(const Mat& Abar, const StepSchedule& schedule, std::uint64_t ell, std::uint64_t n) {
  if (ell < 1 || ell + 1 > n) throw ConfigError("covariance.q_matrix", "need 1 <= ell <= n - 1");
  const auto d = Abar.rows();
  Mat G = Mat::Identity(d, d);  // G_{ell+1:ell}
  Mat sum = G;
  for (std::uint64_t j = ell + 1; j <= n - 1; ++j) {
    G = (Mat::Identity(d, d) - schedule(j) * Abar) * G;
    sum += G;
  }
  return schedule(ell) * sum;
}

std::vector<Mat> q_matrices(const Mat& Abar, const StepSchedule& schedule, std::uint64_t n) {
  if (n < 2) throw ConfigError("covariance.q_matrices", "n must be >= 2");
  const auto d = Abar.rows();
  const Mat I = Mat::Identity(d, d);
  std::vector<Mat> Q(n - 1);
  Q[n - 2] = schedule(n - 1) * I;
  for (std::uint64_t l = n - 2; l >= 1; --l) {
    const double a_next = schedule(l + 1);
    Q[l - 1] = schedule(l) * (I + (I - a_next * Abar) * Q[l] / a_next);
  }
  return Q;
}

Mat sigma_n(const Mat& Abar, const Mat& Sigma_eps, const StepSchedule& schedule, std::uint64_t n) {
  if (n < 2) throw ConfigError("covariance.sigma_n", "n must be >= 2");
  const auto d = Abar.rows();
  if (Sigma_eps.rows() != d || Sigma_eps.cols() != d) throw DimensionError("covariance.sigma_n", "shape mismatch");
  const Mat I = Mat::Identity(d, d);
  Mat q = schedule(n - 1) * I;
  Mat acc = q * Sigma_eps * q.transpose();
  for (std::uint64_t l = n - 2; l >= 1; --l) {
    const double a_next = schedule(l + 1);
    q = schedule(l) * (I + (I - a_next * Abar) * q / a_next);
    acc += q * Sigma_eps * q.transpose();
  }
  return symmetrize(acc / static_cast<double>(n));
}

Mat sigma_inf(const Mat& Abar, const Mat& Sigma_eps) {
  const Mat inv = inverse_checked(Abar, "covariance.sigma_inf");
  return symmetrize(inv * Sigma_eps * inv.transpose());
}

Mat sigma_n_boot(const Trajectory& traj, const std::vector<Mat>& q) {
  constexpr const char* origin = "covariance.sigma_n_boot";
  if (traj.noises.empty()) throw ConfigError(origin, "trajectory has no noises (theta* unknown)");
  if (q.size() != traj.noises.size()) throw DimensionError(origin, "Q/noise length mismatch");
  const int d = traj.dim();
  Mat acc = Mat::Zero(d, d);
  for (std::size_t l = 0; l < q.size(); ++l) {
    const Vec v = q[l] * traj.noises[l];
    acc += v * v.transpose();
  }
  return symmetrize(acc / static_cast<double>(traj.n));
}

CovarianceReport covariance_report(const Mat& Abar, const Mat& Sigma_eps, const StepSchedule& schedule,
                                   std::uint64_t n) {
  CovarianceReport r;
  r.Sigma_n = sigma_n(Abar, Sigma_eps, schedule, n);
  r.Sigma_inf = sigma_inf(Abar, Sigma_eps);
  r.gap = spectral_norm(r.Sigma_n - r.Sigma_inf);
  r.n = n;
  r.schedule = schedule;
  r.lambda_min_n = lambda_min_sym(r.Sigma_n);
  r.lambda_min_inf = lambda_min_sym(r.Sigma_inf);
  return r;
}

DistanceSeries covariance_gap_series(const Mat& Abar, const Mat& Sigma_eps, const StepSchedule& schedule,
                                     const std::vector<std::uint64_t>& n_grid, const Parallelism& par) {
  for (std::size_t g = 1; g < n_grid.size(); ++g) {
    if (n_grid[g] <= n_grid[g - 1]) throw ConfigError("covariance.covariance_gap_series", "n_grid must be increasing");
  }
  const Mat Sinf = sigma_inf(Abar, Sigma_eps);
  DistanceSeries s;
  s.metric = DistanceMetric::spectral_gap;
  s.reference = ReferenceLaw::sigma_inf;
  s.points.resize(n_grid.size());
  parallel_for(n_grid.size(), par, [&](std::size_t g) {
    s.points[g] = {n_grid[g], spectral_norm(sigma_n(Abar, Sigma_eps, schedule, n_grid[g]) - Sinf), 0.0};
  });
  return s;
}

}  // namespace lsa
