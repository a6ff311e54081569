#include "lsainfer/gaussapprox.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "lsainfer/covariance.hpp"
#include "lsainfer/engine.hpp"
#include "lsainfer/errors.hpp"
#include "lsainfer/io.hpp"

namespace lsa {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double kolmogorov_normal_vs_normal_1d(double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("gaussapprox.kolmogorov_normal_vs_normal_1d", "sigma must be positive");
  if (sigma == 1.0) return 0.0;
  const double s2 = sigma * sigma;
  const double x = std::sqrt(2.0 * s2 * std::log(sigma) / (s2 - 1.0));
  return std::abs(normal_cdf(x / sigma) - normal_cdf(x));
}

double lower_bound_sigma_n_1d(const StepSchedule& schedule, std::uint64_t n) {
  const Mat one = Mat::Ones(1, 1);
  return std::sqrt(sigma_n(one, one, schedule, n)(0, 0));
}

Mat direction_set(int d, std::size_t K, std::uint64_t seed) {
  if (d < 1 || K < 1) throw ConfigError("gaussapprox.direction_set", "need d >= 1 and K >= 1");
  Mat U = Mat::Zero(d, static_cast<Eigen::Index>(K));
  Rng rng(seed);
  for (std::size_t c = 0; c < K; ++c) {
    const auto col = static_cast<Eigen::Index>(c);
    if (c < static_cast<std::size_t>(d)) {
      U(col, col) = 1.0;
      continue;
    }
    Vec u(d);
    do {
      for (int i = 0; i < d; ++i) u(i) = rng.normal();
    } while (u.norm() < 1e-8);
    U.col(col) = u / u.norm();
  }
  return U;
}

namespace {

void check_directions(const Mat& U, Eigen::Index d, const char* origin) {
  if (U.rows() != d || U.cols() < 1) throw DimensionError(origin, "directions must be a d x K matrix with K >= 1");
  for (Eigen::Index c = 0; c < U.cols(); ++c) {
    const double norm = U.col(c).norm();
    if (norm == 0.0) throw ConfigError(origin, "zero direction");
    if (std::abs(norm - 1.0) > 1e-10) throw ConfigError(origin, "directions must be unit vectors");
  }
}

std::vector<double> sorted_projection(const Mat& samples, const Vec& u) {
  const Vec p = samples * u;
  std::vector<double> v(p.data(), p.data() + p.size());
  std::sort(v.begin(), v.end());
  return v;
}

double ks_two_sample(const std::vector<double>& a, const std::vector<double>& b) {
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double best = 0.0;
  while (i < a.size() || j < b.size()) {
    double v;
    if (j >= b.size()) v = a[i];
    else if (i >= a.size()) v = b[j];
    else v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    best = std::max(best, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return best;
}

double percentile_rank(std::vector<double> v, double level) { return order_statistic(std::move(v), level); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto m = v.size();
  return m % 2 == 1 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

}  // namespace

HalfspaceDistance halfspace_distance(const Mat& samples, const Mat& reference_cov, const Mat& directions) {
  constexpr const char* origin = "gaussapprox.halfspace_distance";
  const auto R = samples.rows();
  const auto d = samples.cols();
  if (R < 1000) throw ConfigError(origin, "R >= 1000 samples are required");
  if (reference_cov.rows() != d || reference_cov.cols() != d) throw DimensionError(origin, "reference shape mismatch");
  if (!is_symmetric(reference_cov, 1e-10) || !(lambda_min_sym(reference_cov) > 0.0)) {
    throw ConfigError(origin, "reference covariance must be symmetric positive definite");
  }
  check_directions(directions, d, origin);

  HalfspaceDistance out;
  out.standard_error = 1.0 / std::sqrt(static_cast<double>(R));
  const double Rd = static_cast<double>(R);
  for (Eigen::Index c = 0; c < directions.cols(); ++c) {
    const Vec u = directions.col(c);
    const double sd = std::sqrt(u.dot(reference_cov * u));
    const auto x = sorted_projection(samples, u);
    double best = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double F = normal_cdf(x[i] / sd);
      best = std::max({best, static_cast<double>(i + 1) / Rd - F, F - static_cast<double>(i) / Rd});
    }
    out.per_direction.push_back(best);
    out.distance = std::max(out.distance, best);
  }
  return out;
}

HalfspaceDistance halfspace_distance_two_sample(const Mat& a, const Mat& b, const Mat& directions) {
  constexpr const char* origin = "gaussapprox.halfspace_distance_two_sample";
  if (a.cols() != b.cols()) throw DimensionError(origin, "sample dimension mismatch");
  if (a.rows() < 1000 || b.rows() < 1000) throw ConfigError(origin, "both samples need >= 1000 rows");
  check_directions(directions, a.cols(), origin);
  HalfspaceDistance out;
  out.standard_error = std::sqrt(1.0 / static_cast<double>(a.rows()) + 1.0 / static_cast<double>(b.rows()));
  for (Eigen::Index c = 0; c < directions.cols(); ++c) {
    const Vec u = directions.col(c);
    const double dist = ks_two_sample(sorted_projection(a, u), sorted_projection(b, u));
    out.per_direction.push_back(dist);
    out.distance = std::max(out.distance, dist);
  }
  return out;
}

namespace {

constexpr std::size_t kBallReferenceDraws = 1000000;

std::shared_ptr<const std::vector<double>> gaussian_norms(const Mat& cov, std::uint64_t seed) {
  static std::mutex mutex;
  static std::map<std::string, std::shared_ptr<const std::vector<double>>> cache;
  std::string key(reinterpret_cast<const char*>(cov.data()), sizeof(double) * static_cast<std::size_t>(cov.size()));
  key.append(reinterpret_cast<const char*>(&seed), sizeof seed);
  {
    std::lock_guard<std::mutex> lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  const Eigen::LLT<Mat> llt(cov);
  const Mat L = llt.matrixL();
  const auto d = cov.rows();
  auto norms = std::make_shared<std::vector<double>>(kBallReferenceDraws);
  Rng rng(seed);
  Vec z(d);
  for (auto& v : *norms) {
    for (Eigen::Index i = 0; i < d; ++i) z(i) = rng.normal();
    v = (L * z).norm();
  }
  std::sort(norms->begin(), norms->end());
  std::lock_guard<std::mutex> lock(mutex);
  return cache.emplace(std::move(key), std::move(norms)).first->second;
}

double fraction_at_most(const std::vector<double>& sorted, double r) {
  return static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), r) - sorted.begin()) /
         static_cast<double>(sorted.size());
}

}  // namespace

double ball_distance(const Mat& samples, const Mat& reference_cov, const std::vector<double>& radii_grid,
                     std::uint64_t reference_seed) {
  constexpr const char* origin = "gaussapprox.ball_distance";
  if (radii_grid.empty()) throw ConfigError(origin, "empty radii grid");
  if (samples.rows() < 1) throw ConfigError(origin, "no samples");
  const auto d = samples.cols();
  if (reference_cov.rows() != d || reference_cov.cols() != d) throw DimensionError(origin, "reference shape mismatch");
  if (!is_symmetric(reference_cov, 1e-10) || !(lambda_min_sym(reference_cov) > 0.0)) {
    throw ConfigError(origin, "reference covariance must be symmetric positive definite");
  }
  std::vector<double> norms(static_cast<std::size_t>(samples.rows()));
  for (Eigen::Index r = 0; r < samples.rows(); ++r) norms[r] = samples.row(r).norm();
  std::sort(norms.begin(), norms.end());
  const auto ref = gaussian_norms(reference_cov, reference_seed);
  double best = 0.0;
  for (double r : radii_grid) best = std::max(best, std::abs(fraction_at_most(norms, r) - fraction_at_most(*ref, r)));
  return best;
}

std::vector<double> default_radii_grid(const Mat& samples, std::size_t count) {
  if (count < 2) throw ConfigError("gaussapprox.default_radii_grid", "count must be >= 2");
  double top = 0.0;
  for (Eigen::Index r = 0; r < samples.rows(); ++r) top = std::max(top, samples.row(r).norm());
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) grid[i] = top * static_cast<double>(i) / static_cast<double>(count - 1);
  return grid;
}

double dkw_band(std::uint64_t R, double delta) { return std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(R))); }

std::vector<Mat> clt_samples(const LsaInstance& instance, const StepSchedule& schedule,
                             const std::vector<std::uint64_t>& n_grid, std::uint64_t R, std::uint64_t seed,
                             const CltOptions& options) {
  const int d = instance.dim();
  const Vec theta0 = options.theta0.size() == 0 ? instance.theta_star() : options.theta0;
  std::vector<Mat> out(n_grid.size(), Mat(static_cast<Eigen::Index>(R), d));
  parallel_for(R, options.par, [&](std::size_t r) {
    const auto avgs = lsa_prefix_averages(instance, schedule, n_grid, theta0, derive_seed(seed, r));
    for (std::size_t g = 0; g < n_grid.size(); ++g) {
      out[g].row(static_cast<Eigen::Index>(r)) =
          (std::sqrt(static_cast<double>(n_grid[g])) * (avgs[g] - instance.theta_star())).transpose();
    }
  });
  return out;
}

DistanceSeries clt_rate_experiment(const LsaInstance& instance, const StepSchedule& schedule,
                                   const std::vector<std::uint64_t>& n_grid, std::uint64_t R, std::size_t K,
                                   std::uint64_t seed, ReferenceLaw reference, const CltOptions& options) {
  constexpr const char* origin = "gaussapprox.clt_rate_experiment";
  if (n_grid.empty()) throw ConfigError(origin, "empty n_grid");
  if (R < 1000) throw ConfigError(origin, "R >= 1000 replications are required");
  const int d = instance.dim();
  const Mat U = direction_set(d, std::max<std::size_t>(K, d), derive_seed(seed, 0xd1ec7));
  const auto samples = clt_samples(instance, schedule, n_grid, R, derive_seed(seed, 0), options);

  DistanceSeries s;
  s.metric = DistanceMetric::halfspace_sup;
  s.reference = reference;
  s.points.resize(n_grid.size());
  parallel_for(n_grid.size(), options.par, [&](std::size_t g) {
    Mat ref;
    switch (reference) {
      case ReferenceLaw::sigma_n: ref = sigma_n(instance.Abar(), instance.Sigma_eps(), schedule, n_grid[g]); break;
      case ReferenceLaw::sigma_inf: ref = sigma_inf(instance.Abar(), instance.Sigma_eps()); break;
      case ReferenceLaw::standard_normal: ref = Mat::Identity(d, d); break;
      case ReferenceLaw::bootstrap_real: throw ConfigError(origin, "bootstrap_real is not a Gaussian reference");
    }
    const auto hd = halfspace_distance(samples[g], ref, U);
    s.points[g] = {n_grid[g], hd.distance, hd.standard_error};
  });
  const double floor = dkw_band(R);
  const auto dist = s.distances();
  const double smallest = *std::min_element(dist.begin(), dist.end());
  if (smallest < 3.0 * floor) {
    s.notes.push_back("noise floor: smallest distance " + io::format_double(smallest) + " is below 3x the DKW band " +
                      io::format_double(floor));
  }
  return s;
}

BootValidityResult bootstrap_validity_experiment(const LsaInstance& instance, const StepSchedule& schedule,
                                                 const std::vector<std::uint64_t>& n_grid, std::size_t M,
                                                 std::uint64_t R_outer, std::uint64_t R_real, std::uint64_t seed,
                                                 const BootValidityOptions& options) {
  constexpr const char* origin = "gaussapprox.bootstrap_validity_experiment";
  if (n_grid.empty()) throw ConfigError(origin, "empty n_grid");
  if (M < 1000) throw ConfigError(origin, "M >= 1000 replicates are required");
  if (R_real < 1000) throw ConfigError(origin, "R_real >= 1000 real-world runs are required");
  if (R_outer < 1) throw ConfigError(origin, "R_outer must be positive");
  const int d = instance.dim();
  const Vec theta0 = options.theta0.size() == 0 ? instance.theta_star() : options.theta0;
  const Mat U = direction_set(d, std::max<std::size_t>(options.K, d), derive_seed(seed, 0xd1ec7));
  const auto real = clt_samples(instance, schedule, n_grid, R_real, derive_seed(seed, 0), {theta0, options.par});

  const std::uint64_t data_key = derive_seed(seed, 1);
  const std::uint64_t weight_key = derive_seed(seed, 2);
  BootValidityResult res;
  res.per_trajectory.assign(n_grid.size(), std::vector<double>(R_outer));
  parallel_for(R_outer, options.par, [&](std::size_t t) {
    const auto boot = online_bootstrap(instance, schedule, n_grid, theta0, derive_seed(data_key, t), M,
                                       options.weights, derive_seed(weight_key, t));
    for (std::size_t g = 0; g < n_grid.size(); ++g) {
      const Mat dev = std::sqrt(static_cast<double>(n_grid[g])) *
                      (boot.replicate_averages[g].colwise() - boot.base_averages[g]).transpose();
      res.per_trajectory[g][t] = halfspace_distance_two_sample(dev, real[g], U).distance;
    }
  });

  const double se = std::sqrt(1.0 / static_cast<double>(M) + 1.0 / static_cast<double>(R_real));
  for (auto* s : {&res.median, &res.p90}) {
    s->metric = DistanceMetric::halfspace_sup;
    s->reference = ReferenceLaw::bootstrap_real;
  }
  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    res.median.points.push_back({n_grid[g], median(res.per_trajectory[g]), se});
    res.p90.points.push_back({n_grid[g], percentile_rank(res.per_trajectory[g], 0.9), se});
  }
  return res;
}

}  // namespace lsa
