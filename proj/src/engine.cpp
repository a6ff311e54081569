#include "lsainfer/engine.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "lsainfer/errors.hpp"
#include "lsainfer/io.hpp"

namespace lsa {

static_assert(std::endian::native == std::endian::little, "binary trajectory format assumes little-endian host");

namespace detail {

void check_divergence(const double* theta, int d, std::uint64_t k, const char* origin) {
  double sq = 0.0;
  for (int i = 0; i < d; ++i) sq += theta[i] * theta[i];
  if (!(sq <= kDivergenceThreshold * kDivergenceThreshold)) {
    throw DivergenceError(origin, "iterate norm exceeded 1e12 at k = " + std::to_string(k) +
                                      " (step size too large for this instance?)");
  }
}

}  // namespace detail

namespace {

void require_run_args(const LsaInstance& instance, const StepSchedule& schedule, std::uint64_t n, const Vec& theta0,
                      const char* origin) {
  if (n < 2) throw ConfigError(origin, "horizon n must be >= 2");
  if (theta0.size() != instance.dim()) throw DimensionError(origin, "theta0 dimension does not match instance");
  if (!(schedule.c0 > 0.0)) throw ConfigError(origin, "c0 must be positive");
}

}  // namespace

Trajectory lsa_run(std::shared_ptr<const LsaInstance> instance, const StepSchedule& schedule, std::uint64_t n,
                   const Vec& theta0, std::uint64_t seed) {
  constexpr const char* origin = "engine.lsa_run";
  require_run_args(*instance, schedule, n, theta0, origin);
  const int d = instance->dim();
  Trajectory t;
  t.instance = instance;
  t.schedule = schedule;
  t.n = n;
  t.seed = seed;
  t.theta0 = theta0;
  t.observations.reserve(n - 1);
  t.iterates.reserve(n);
  t.noises.reserve(n - 1);

  Rng rng(seed);
  Observation scratch;
  Vec theta = theta0;
  Vec residual(d);
  Vec sum = theta;
  t.iterates.push_back(theta);
  for (std::uint64_t k = 1; k < n; ++k) {
    const Observation& obs = instance->draw(rng, scratch);
    detail::lsa_update(obs.A.data(), obs.b.data(), theta.data(), schedule(k), d, residual.data());
    detail::check_divergence(theta.data(), d, k, origin);
    t.observations.push_back(obs);
    t.noises.push_back(noise_at_solution(obs.A, obs.b, *instance));
    t.iterates.push_back(theta);
    sum += theta;
  }
  t.average = sum / static_cast<double>(n);
  return t;
}

Trajectory lsa_run(const LsaInstance& instance, const StepSchedule& schedule, std::uint64_t n, const Vec& theta0,
                   std::uint64_t seed) {
  return lsa_run(std::make_shared<const LsaInstance>(instance), schedule, n, theta0, seed);
}

StreamingResult lsa_run_streaming(const LsaInstance& instance, const StepSchedule& schedule, std::uint64_t n,
                                  const Vec& theta0, std::uint64_t seed) {
  constexpr const char* origin = "engine.lsa_run_streaming";
  require_run_args(instance, schedule, n, theta0, origin);
  const int d = instance.dim();
  Rng rng(seed);
  Observation scratch;
  Vec theta = theta0;
  Vec residual(d);
  Vec sum = theta;
  for (std::uint64_t k = 1; k < n; ++k) {
    const Observation& obs = instance.draw(rng, scratch);
    detail::lsa_update(obs.A.data(), obs.b.data(), theta.data(), schedule(k), d, residual.data());
    detail::check_divergence(theta.data(), d, k, origin);
    sum += theta;
  }
  return {sum / static_cast<double>(n), theta};
}

std::vector<Vec> lsa_prefix_averages(const LsaInstance& instance, const StepSchedule& schedule,
                                     const std::vector<std::uint64_t>& n_grid, const Vec& theta0, std::uint64_t seed) {
  constexpr const char* origin = "engine.lsa_prefix_averages";
  if (n_grid.empty()) return {};
  for (std::size_t g = 1; g < n_grid.size(); ++g)
    if (n_grid[g] <= n_grid[g - 1]) throw ConfigError(origin, "n_grid must be strictly increasing");
  require_run_args(instance, schedule, n_grid.front(), theta0, origin);
  const int d = instance.dim();
  Rng rng(seed);
  Observation scratch;
  Vec theta = theta0;
  Vec residual(d);
  Vec sum = theta;
  std::vector<Vec> out;
  out.reserve(n_grid.size());
  std::size_t g = 0;
  const std::uint64_t n_max = n_grid.back();
  for (std::uint64_t k = 1; k < n_max; ++k) {
    const Observation& obs = instance.draw(rng, scratch);
    detail::lsa_update(obs.A.data(), obs.b.data(), theta.data(), schedule(k), d, residual.data());
    detail::check_divergence(theta.data(), d, k, origin);
    sum += theta;
    // sum now holds theta_0..theta_k, i.e. the horizon n = k + 1.
    if (k + 1 == n_grid[g]) {
      out.push_back(sum / static_cast<double>(k + 1));
      ++g;
    }
  }
  return out;
}

Mat gamma_product(const Trajectory& traj, std::uint64_t m, std::uint64_t k) {
  constexpr const char* origin = "engine.gamma_product";
  const int d = traj.dim();
  if (m < 1) throw ConfigError(origin, "m must be >= 1");
  if (m <= k && k > traj.n - 1) throw ConfigError(origin, "k exceeds n - 1");
  Mat G = Mat::Identity(d, d);
  for (std::uint64_t l = m; l <= k; ++l) {
    G = (Mat::Identity(d, d) - traj.alpha(l) * traj.observation(l).A) * G;
  }
  return G;
}

ErrorDecomposition error_decompose(const Trajectory& traj, int L) {
  constexpr const char* origin = "engine.error_decompose";
  if (!traj.has_theta_star()) throw ConfigError(origin, "trajectory has no attached instance (theta* unknown)");
  if (L < 0 || L > 2) throw ConfigError(origin, "expansion depth L must be 0, 1 or 2");
  const LsaInstance& inst = *traj.instance;
  const int d = traj.dim();
  const Mat I = Mat::Identity(d, d);
  const auto n = traj.n;

  ErrorDecomposition dec;
  dec.L = L;
  dec.transient.reserve(n);
  dec.J.assign(L + 1, {});
  dec.H.assign(L + 1, {});
  for (int l = 0; l <= L; ++l) {
    dec.J[l].reserve(n);
    dec.H[l].reserve(n);
    dec.J[l].push_back(Vec::Zero(d));
    dec.H[l].push_back(Vec::Zero(d));
  }
  dec.transient.push_back(traj.theta0 - inst.theta_star());

  for (std::uint64_t k = 1; k < n; ++k) {
    const double a = traj.alpha(k);
    const Mat& A = traj.observation(k).A;
    const Mat At = A - inst.Abar();
    const Mat step_bar = I - a * inst.Abar();
    const Mat step_rand = I - a * A;
    dec.transient.push_back(step_rand * dec.transient.back());
    // Use the previous-step values of every level before overwriting.
    for (int l = 0; l <= L; ++l) {
      const Vec& J_prev = dec.J[l][k - 1];
      Vec Jk = step_bar * J_prev;
      if (l == 0) {
        Jk -= a * traj.noise(k);
      } else {
        Jk -= a * (At * dec.J[l - 1][k - 1]);
      }
      Vec Hk = step_rand * dec.H[l][k - 1] - a * (At * J_prev);
      dec.J[l].push_back(std::move(Jk));
      dec.H[l].push_back(std::move(Hk));
    }
  }
  return dec;
}

double reconstruction_residual(const Trajectory& traj, const ErrorDecomposition& dec) {
  const Vec& ts = traj.instance->theta_star();
  double worst = 0.0;
  for (std::uint64_t k = 0; k < traj.n; ++k) {
    Vec rebuilt = dec.transient[k] + dec.H_last()[k];
    for (int l = 0; l <= dec.L; ++l) rebuilt += dec.J[l][k];
    const Vec err = traj.iterates[k] - ts;
    worst = std::max(worst, (err - rebuilt).norm() / (1.0 + err.norm()));
  }
  return worst;
}

double linear_statistic_identity(const ErrorDecomposition& dec, const std::vector<Mat>& q_matrices,
                                 const std::vector<Vec>& noises) {
  constexpr const char* origin = "engine.linear_statistic_identity";
  const std::size_t n = dec.J.at(0).size();
  if (n < 2 || q_matrices.size() != n - 1 || noises.size() != n - 1) {
    throw DimensionError(origin, "expected n - 1 Q matrices and noises for horizon n = " + std::to_string(n));
  }
  const auto d = dec.J[0][0].size();
  Vec sumJ = Vec::Zero(d);
  Vec sumQ = Vec::Zero(d);
  for (std::size_t k = 1; k < n; ++k) sumJ += dec.J[0][k];
  for (std::size_t l = 0; l + 1 < n; ++l) sumQ += q_matrices[l] * noises[l];
  return (sumJ + sumQ).norm() / (1.0 + sumJ.norm());
}

double averaged_error_identity(const Trajectory& traj, const ErrorDecomposition& dec) {
  const int d = traj.dim();
  Vec s = Vec::Zero(d);
  for (std::uint64_t k = 0; k < traj.n; ++k) s += dec.transient[k] + dec.J[0][k] + dec.H[0][k];
  const Vec lhs = traj.average - traj.instance->theta_star();
  return (lhs - s / static_cast<double>(traj.n)).norm() / (1.0 + lhs.norm());
}

StabilityDiagnostic stability_diagnostic(const LsaInstance& instance, const StepSchedule& schedule, std::uint64_t m,
                                         std::uint64_t k, double p, std::uint64_t R, std::uint64_t seed,
                                         const Parallelism& par) {
  constexpr const char* origin = "engine.stability_diagnostic";
  if (R < 100) throw ConfigError(origin, "at least 100 replications are required");
  if (m < 1 || k < m) throw ConfigError(origin, "need 1 <= m <= k");
  if (!(p >= 1.0)) throw ConfigError(origin, "p must be >= 1");
  const int d = instance.dim();
  const StabilityConstants c = stability_constants(instance.Abar(), instance.bA());

  std::vector<double> powered(R);
  parallel_for(R, par, [&](std::size_t r) {
    Rng rng(derive_seed(seed, r));
    Observation scratch;
    Mat G = Mat::Identity(d, d);
    for (std::uint64_t l = m; l <= k; ++l) {
      const Observation& obs = instance.draw(rng, scratch);
      G = (Mat::Identity(d, d) - schedule(l) * obs.A) * G;
    }
    powered[r] = std::pow(spectral_norm(G), p);
  });

  double mean = 0.0;
  for (double x : powered) mean += x;
  mean /= static_cast<double>(R);
  double var = 0.0;
  for (double x : powered) var += (x - mean) * (x - mean);
  var /= static_cast<double>(R - 1);

  StabilityDiagnostic out;
  out.empirical = std::pow(mean, 1.0 / p);
  out.stderr_ = mean > 0.0 ? std::pow(mean, 1.0 / p - 1.0) / p * std::sqrt(var / static_cast<double>(R)) : 0.0;
  double prod = 1.0;
  for (std::uint64_t l = m; l <= k; ++l) prod *= 1.0 - c.a * schedule(l) / 2.0;
  out.bound = std::sqrt(c.kappa_Q) * std::exp(1.0) * prod;
  out.ratio = out.empirical / out.bound;
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

constexpr char kMagic[8] = {'L', 'S', 'A', 'T', 'R', 'J', '0', '1'};

template <class T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error("engine.read_trajectory_binary", "truncated file");
  return v;
}

}  // namespace

void write_trajectory_binary(const Trajectory& t, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("engine.write_trajectory_binary", "cannot open " + path);
  const auto d = static_cast<std::uint64_t>(t.dim());
  out.write(kMagic, sizeof(kMagic));
  put(out, d);
  put(out, t.n);
  put(out, t.seed);
  put(out, t.schedule.c0);
  put(out, t.schedule.gamma);
  put(out, t.schedule.k0);
  for (std::uint64_t i = 0; i < d; ++i) put(out, t.theta0(i));
  for (const Vec& th : t.iterates)
    for (std::uint64_t i = 0; i < d; ++i) put(out, th(i));
  for (std::uint64_t i = 0; i < d; ++i) put(out, t.average(i));
  for (const Observation& o : t.observations) {
    for (std::uint64_t r = 0; r < d; ++r)
      for (std::uint64_t c = 0; c < d; ++c) put(out, o.A(r, c));
    for (std::uint64_t i = 0; i < d; ++i) put(out, o.b(i));
  }
  if (!out) throw Error("engine.write_trajectory_binary", "write failed for " + path);
}

Trajectory read_trajectory_binary(const std::string& path) {
  constexpr const char* origin = "engine.read_trajectory_binary";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(origin, "cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw Error(origin, "bad magic in " + path);
  Trajectory t;
  const auto d = get<std::uint64_t>(in);
  t.n = get<std::uint64_t>(in);
  t.seed = get<std::uint64_t>(in);
  t.schedule.c0 = get<double>(in);
  t.schedule.gamma = get<double>(in);
  t.schedule.k0 = get<std::uint64_t>(in);
  if (d == 0 || d > 4096 || t.n < 2) throw Error(origin, "implausible header");
  const auto di = static_cast<Eigen::Index>(d);
  t.theta0.resize(di);
  for (Eigen::Index i = 0; i < di; ++i) t.theta0(i) = get<double>(in);
  t.iterates.resize(t.n, Vec(di));
  for (Vec& th : t.iterates)
    for (Eigen::Index i = 0; i < di; ++i) th(i) = get<double>(in);
  t.average.resize(di);
  for (Eigen::Index i = 0; i < di; ++i) t.average(i) = get<double>(in);
  t.observations.resize(t.n - 1, Observation{Mat(di, di), Vec(di)});
  for (Observation& o : t.observations) {
    for (Eigen::Index r = 0; r < di; ++r)
      for (Eigen::Index c = 0; c < di; ++c) o.A(r, c) = get<double>(in);
    for (Eigen::Index i = 0; i < di; ++i) o.b(i) = get<double>(in);
  }
  return t;
}

std::string trajectory_csv(const Trajectory& t) {
  std::string s = "k";
  for (int i = 0; i < t.dim(); ++i) s += ",theta_" + std::to_string(i);
  s += '\n';
  for (std::uint64_t k = 0; k < t.n; ++k) {
    s += std::to_string(k);
    for (int i = 0; i < t.dim(); ++i) {
      s += ',';
      s += io::format_double(t.iterates[k](i));
    }
    s += '\n';
  }
  return s;
}

void write_trajectory_csv(const Trajectory& t, const std::string& path) { io::write_text(path, trajectory_csv(t)); }

}  // namespace lsa
