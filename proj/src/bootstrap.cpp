#include "lsainfer/bootstrap.hpp"

#include <algorithm>
#include <cmath>

#include "lsainfer/errors.hpp"
#include "lsainfer/io.hpp"

namespace lsa {

std::string to_string(WeightKind kind) {
  switch (kind) {
    case WeightKind::two_point: return "two_point";
    case WeightKind::exponential: return "exp";
    case WeightKind::poisson: return "poisson";
    case WeightKind::unit: return "unit";
  }
  return "unknown";
}

WeightKind weight_kind_from_string(const std::string& name) {
  if (name == "two_point") return WeightKind::two_point;
  if (name == "exp" || name == "exponential") return WeightKind::exponential;
  if (name == "poisson" || name == "poisson_shifted") return WeightKind::poisson;
  if (name == "unit") return WeightKind::unit;
  throw ConfigError("bootstrap.weights", "unknown weight scheme '" + name + "' (two_point|exp|poisson|unit)");
}

double WeightScheme::m3() const {
  switch (kind) {
    case WeightKind::two_point: return 1.0;
    // int_0^inf |x - 1|^3 e^{-x} dx = 12/e - 2.
    case WeightKind::exponential: return 12.0 / std::exp(1.0) - 2.0;
    case WeightKind::poisson: {
      double term = std::exp(-1.0);  // P(X = 0)
      double total = term;           // |0 - 1|^3 = 1
      for (int j = 1; j < 60; ++j) {
        term /= j;
        const double dev = std::abs(j - 1.0);
        total += term * dev * dev * dev;
      }
      return total;
    }
    case WeightKind::unit: return 0.0;
  }
  return 0.0;
}

namespace {

double poisson1_from_uniform(double u) {
  double p = std::exp(-1.0);
  double cdf = p;
  int x = 0;
  while (u > cdf && x < 64) {
    ++x;
    p /= x;
    cdf += p;
  }
  return static_cast<double>(x);
}

double open_uniform(std::uint64_t bits) { return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53; }

}  // namespace

double sample_weight(const WeightScheme& scheme, Rng& rng) {
  switch (scheme.kind) {
    case WeightKind::two_point: return (rng() >> 63) ? 2.0 : 0.0;
    case WeightKind::exponential: return -std::log(open_uniform(rng()));
    case WeightKind::poisson: return poisson1_from_uniform(open_uniform(rng()));
    case WeightKind::unit: return 1.0;
  }
  return 1.0;
}

double weight_at(WeightKind kind, std::uint64_t key, std::uint64_t k) {
  switch (kind) {
    case WeightKind::two_point: {
      const std::uint64_t word = mix64(key ^ mix64(k >> 6));
      return ((word >> (k & 63)) & 1ULL) ? 2.0 : 0.0;
    }
    case WeightKind::exponential: return -std::log(open_uniform(mix64(key ^ mix64(k))));
    case WeightKind::poisson: return poisson1_from_uniform(open_uniform(mix64(key ^ mix64(k))));
    case WeightKind::unit: return 1.0;
  }
  return 1.0;
}

Mat BootstrapEnsemble::deviations() const {
  const auto d = base_average.size();
  Mat D(d, static_cast<Eigen::Index>(M));
  for (std::size_t l = 0; l < M; ++l) D.col(static_cast<Eigen::Index>(l)) = averages[l] - base_average;
  return D;
}

BootstrapEnsemble bootstrap_run(const Trajectory& traj, std::size_t M, WeightScheme scheme, std::uint64_t seed,
                                const Parallelism& par) {
  constexpr const char* origin = "bootstrap.bootstrap_run";
  if (M < 1) throw ConfigError(origin, "M must be >= 1");
  if (traj.observations.size() + 1 != traj.n) throw ConfigError(origin, "trajectory does not store observations");
  const int d = traj.dim();
  BootstrapEnsemble ens;
  ens.M = M;
  ens.averages.assign(M, Vec());
  ens.base_average = traj.average;
  ens.n = traj.n;
  ens.scheme = scheme;
  ens.seed = seed;

  std::vector<double> steps(traj.n);
  for (std::uint64_t k = 1; k < traj.n; ++k) steps[k] = traj.alpha(k);

  parallel_for(M, par, [&](std::size_t l) {
    const std::uint64_t key = derive_seed(seed, l);
    Vec theta = traj.theta0;
    Vec residual(d);
    Vec sum = theta;
    for (std::uint64_t k = 1; k < traj.n; ++k) {
      const Observation& obs = traj.observations[k - 1];
      const double w = weight_at(scheme.kind, key, k);
      detail::lsa_update(obs.A.data(), obs.b.data(), theta.data(), steps[k] * w, d, residual.data());
      detail::check_divergence(theta.data(), d, k, origin);
      sum += theta;
    }
    ens.averages[l] = sum / static_cast<double>(traj.n);
  });
  return ens;
}

OnlineBootstrapResult online_bootstrap(const LsaInstance& instance, const StepSchedule& schedule,
                                       const std::vector<std::uint64_t>& n_grid, const Vec& theta0,
                                       std::uint64_t data_seed, std::size_t M, WeightKind weights,
                                       std::uint64_t weight_seed) {
  constexpr const char* origin = "bootstrap.online_bootstrap";
  if (n_grid.empty() || n_grid.front() < 2) throw ConfigError(origin, "n_grid must start at >= 2");
  for (std::size_t g = 1; g < n_grid.size(); ++g)
    if (n_grid[g] <= n_grid[g - 1]) throw ConfigError(origin, "n_grid must be strictly increasing");
  if (M < 1) throw ConfigError(origin, "M must be >= 1");
  const int d = instance.dim();
  if (theta0.size() != d) throw DimensionError(origin, "theta0 dimension does not match instance");

  std::vector<std::uint64_t> keys(M);
  for (std::size_t l = 0; l < M; ++l) keys[l] = derive_seed(weight_seed, l);

  const auto Mi = static_cast<Eigen::Index>(M);
  Mat states = theta0.replicate(1, Mi);
  Mat sums = states;
  Vec theta = theta0;
  Vec sum = theta;
  Vec residual(d);

  OnlineBootstrapResult out;
  Rng rng(data_seed);
  Observation scratch;
  std::size_t g = 0;
  const std::uint64_t n_max = n_grid.back();
  for (std::uint64_t k = 1; k < n_max; ++k) {
    const Observation& obs = instance.draw(rng, scratch);
    const double step = schedule(k);
    const double* A = obs.A.data();
    const double* b = obs.b.data();
    detail::lsa_update(A, b, theta.data(), step, d, residual.data());
    detail::check_divergence(theta.data(), d, k, origin);
    sum += theta;
    for (std::size_t l = 0; l < M; ++l) {
      double* th = states.col(static_cast<Eigen::Index>(l)).data();
      detail::lsa_update(A, b, th, step * weight_at(weights, keys[l], k), d, residual.data());
      double* acc = sums.col(static_cast<Eigen::Index>(l)).data();
      for (int i = 0; i < d; ++i) acc[i] += th[i];
    }
    if (k + 1 == n_grid[g]) {
      for (std::size_t l = 0; l < M; ++l) {
        detail::check_divergence(states.col(static_cast<Eigen::Index>(l)).data(), d, k, origin);
      }
      const double nn = static_cast<double>(k + 1);
      out.base_averages.push_back(sum / nn);
      out.replicate_averages.push_back(sums / nn);
      ++g;
    }
  }
  return out;
}

double order_statistic(std::vector<double> values, double level) {
  if (values.empty()) throw ConfigError("bootstrap.order_statistic", "empty sample");
  const auto M = values.size();
  auto idx = static_cast<std::size_t>(std::ceil(level * static_cast<double>(M) - 1e-12));
  idx = std::clamp<std::size_t>(idx, 1, M);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(idx - 1), values.end());
  return values[idx - 1];
}

ConfidenceReport confidence_sets(const Vec& center, const Mat& D, double level, const std::optional<Vec>& theta_star,
                                 bool require_ellipsoid) {
  constexpr const char* origin = "bootstrap.confidence_sets";
  if (!(level > 0.0 && level < 1.0)) throw ConfigError(origin, "level must lie in (0, 1)");
  const auto d = center.size();
  const auto M = D.cols();
  if (D.rows() != d) throw DimensionError(origin, "deviation matrix shape mismatch");
  if (M < 50) throw ConfigError(origin, "M >= 50 replicates are required for stable quantiles");

  ConfidenceReport r;
  r.level = level;
  r.center = center;
  r.lo.resize(d);
  r.hi.resize(d);
  std::vector<double> buf(static_cast<std::size_t>(M));
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index l = 0; l < M; ++l) buf[l] = std::abs(D(i, l));
    const double rad = order_statistic(buf, level);
    r.lo(i) = center(i) - rad;
    r.hi(i) = center(i) + rad;
  }
  for (Eigen::Index l = 0; l < M; ++l) buf[l] = D.col(l).cwiseAbs().maxCoeff();
  r.sup_radius = order_statistic(buf, level);

  const Vec mean = D.rowwise().mean();
  const Mat C = D.colwise() - mean;
  Mat S = M > 1 ? Mat(C * C.transpose() / static_cast<double>(M - 1)) : Mat(Mat::Zero(d, d));
  r.degenerate = lambda_min_sym(S) < 1e-14;
  if (r.degenerate && require_ellipsoid) {
    throw DegenerateEnsembleError(origin, "ensemble covariance is singular (lambda_min < 1e-14)");
  }
  S += 1e-10 * Mat::Identity(d, d);
  r.shape = S;
  const Eigen::LLT<Mat> llt(S);
  auto mahalanobis = [&](const Vec& v) { return std::sqrt(std::max(0.0, v.dot(llt.solve(v)))); };
  for (Eigen::Index l = 0; l < M; ++l) buf[l] = mahalanobis(D.col(l));
  r.ellipsoid_radius = r.degenerate ? 0.0 : order_statistic(buf, level);

  if (theta_star) {
    const Vec& ts = *theta_star;
    if (ts.size() != d) throw DimensionError(origin, "theta_star dimension mismatch");
    bool all = true;
    for (Eigen::Index i = 0; i < d; ++i) {
      const bool in = r.lo(i) <= ts(i) && ts(i) <= r.hi(i);
      r.coordinate_contains.push_back(in);
      all = all && in;
    }
    r.contains_target = all;
    const Vec err = center - ts;
    r.sup_contains = err.cwiseAbs().maxCoeff() <= r.sup_radius;
    r.ellipsoid_contains = mahalanobis(err) <= r.ellipsoid_radius;
  }
  return r;
}

ConfidenceReport confidence_sets(const BootstrapEnsemble& ensemble, double level, const std::optional<Vec>& theta_star,
                                 bool require_ellipsoid) {
  if (ensemble.M < 1) throw ConfigError("bootstrap.confidence_sets", "empty ensemble");
  return confidence_sets(ensemble.base_average, ensemble.deviations(), level, theta_star, require_ellipsoid);
}

CoverageResult coverage_experiment(const LsaInstance& instance, const StepSchedule& schedule, std::uint64_t n,
                                   std::size_t M, std::uint64_t R, double level, std::uint64_t seed,
                                   const CoverageOptions& options) {
  constexpr const char* origin = "bootstrap.coverage_experiment";
  if (R < 100) throw ConfigError(origin, "R >= 100 outer replications are required");
  const int d = instance.dim();
  const Vec theta0 = options.theta0.size() == 0 ? Vec(Vec::Zero(d)) : options.theta0;

  struct Outcome {
    bool ok = false;
    std::vector<bool> coord;
    bool box = false, sup = false, ell = false, degenerate = false;
    Vec radius;
  };
  std::vector<Outcome> outcomes(R);
  parallel_for(R, options.par, [&](std::size_t r) {
    try {
      const auto res = online_bootstrap(instance, schedule, {n}, theta0, derive_seed(seed, 2 * r), M,
                                        options.weights, derive_seed(seed, 2 * r + 1));
      const Mat D = res.replicate_averages[0].colwise() - res.base_averages[0];
      const ConfidenceReport rep = confidence_sets(res.base_averages[0], D, level, instance.theta_star());
      Outcome& o = outcomes[r];
      o.ok = true;
      o.coord = rep.coordinate_contains;
      o.box = *rep.contains_target;
      o.sup = *rep.sup_contains;
      o.ell = *rep.ellipsoid_contains;
      o.degenerate = rep.degenerate;
      o.radius = (rep.hi - rep.lo) / 2.0;
    } catch (const DivergenceError&) {
      outcomes[r].ok = false;
    }
  });

  CoverageResult out;
  out.level = level;
  out.coordinate_coverage.assign(d, 0.0);
  out.mean_coordinate_radius = Vec::Zero(d);
  for (const Outcome& o : outcomes) {
    if (!o.ok) {
      ++out.divergences;
      continue;
    }
    ++out.replications;
    for (int i = 0; i < d; ++i) out.coordinate_coverage[i] += o.coord[i] ? 1.0 : 0.0;
    out.box_coverage += o.box ? 1.0 : 0.0;
    out.sup_coverage += o.sup ? 1.0 : 0.0;
    out.ellipsoid_coverage += o.ell ? 1.0 : 0.0;
    out.degenerate = out.degenerate || o.degenerate;
    out.mean_coordinate_radius += o.radius;
  }
  const double reps = static_cast<double>(std::max<std::uint64_t>(out.replications, 1));
  auto se = [&](double p) { return std::sqrt(p * (1.0 - p) / reps); };
  for (int i = 0; i < d; ++i) {
    out.coordinate_coverage[i] /= reps;
    out.coordinate_stderr.push_back(se(out.coordinate_coverage[i]));
  }
  out.box_coverage /= reps;
  out.sup_coverage /= reps;
  out.ellipsoid_coverage /= reps;
  out.box_stderr = se(out.box_coverage);
  out.sup_stderr = se(out.sup_coverage);
  out.ellipsoid_stderr = se(out.ellipsoid_coverage);
  out.mean_coordinate_radius /= reps;
  return out;
}

std::string ensemble_csv(const BootstrapEnsemble& ens) {
  const auto d = ens.base_average.size();
  std::string s = "ell";
  for (Eigen::Index i = 0; i < d; ++i) s += ",theta_" + std::to_string(i);
  s += '\n';
  for (std::size_t l = 0; l < ens.M; ++l) {
    s += std::to_string(l);
    for (Eigen::Index i = 0; i < d; ++i) s += ',' + io::format_double(ens.averages[l](i));
    s += '\n';
  }
  return s;
}

}  // namespace lsa
