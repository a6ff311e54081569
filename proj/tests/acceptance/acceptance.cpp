// Acceptance runner: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion ...]   (no arguments runs all ten)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lsainfer/bootstrap.hpp"
#include "lsainfer/covariance.hpp"
#include "lsainfer/engine.hpp"
#include "lsainfer/gaussapprox.hpp"
#include "lsainfer/model.hpp"
#include "lsainfer/parallel.hpp"
#include "lsainfer/schedule.hpp"
#include "lsainfer/series.hpp"

using namespace lsa;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* title;
  double budget_s;  // wall-clock limit
  std::function<Verdict()> run;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

std::vector<std::uint64_t> pow2_grid(int lo, int hi) {
  std::vector<std::uint64_t> g;
  for (int e = lo; e <= hi; ++e) g.push_back(1ULL << e);
  return g;
}

Parallelism workers() { return Parallelism::hardware(); }

std::shared_ptr<const LsaInstance> shared(LsaInstance inst) {
  return std::make_shared<const LsaInstance>(std::move(inst));
}

Observation atom(std::initializer_list<double> A, std::initializer_list<double> b) {
  const auto d = static_cast<Eigen::Index>(b.size());
  Observation o{Mat(d, d), Vec(d)};
  auto a = A.begin();
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) o.A(i, j) = *a++;
  auto v = b.begin();
  for (Eigen::Index i = 0; i < d; ++i) o.b(i) = *v++;
  return o;
}

// Scalar instance with multiplicative noise: A in {2.5, -0.5}, b in {1.5, 0.5},
// equiprobable and independent, so Abar = 1, bbar = 1, theta* = 1.
LsaInstance scalar_atoms() {
  std::vector<Observation> atoms{atom({2.5}, {1.5}), atom({2.5}, {0.5}), atom({-0.5}, {1.5}), atom({-0.5}, {0.5})};
  return LsaInstance::from_atoms(atoms, {0.25, 0.25, 0.25, 0.25});
}

// Two-dimensional atoms around Abar = I, bbar = (1, 1), theta* = (1, 1):
// four A perturbations crossed with four independent b shifts +-e_i.
LsaInstance planar_atoms() {
  const std::vector<Observation> As{
      atom({1.5, 0.5, 0.0, 1.0}, {1.0, 1.0}),
      atom({0.5, -0.5, 0.0, 1.0}, {1.0, 1.0}),
      atom({1.0, 0.0, 0.5, 1.5}, {1.0, 1.0}),
      atom({1.0, 0.0, -0.5, 0.5}, {1.0, 1.0}),
  };
  std::vector<Observation> atoms;
  for (const auto& a : As) {
    for (int i = 0; i < 2; ++i) {
      for (double sign : {1.0, -1.0}) {
        Observation o = a;
        o.b(i) += sign;
        atoms.push_back(o);
      }
    }
  }
  return LsaInstance::from_atoms(atoms, std::vector<double>(atoms.size(), 1.0 / 16.0));
}

// ---------------------------------------------------------------------------

Verdict exact_identities() {
  double worst[5] = {0, 0, 0, 0, 0};
  for (int d : {1, 2, 4}) {
    for (std::uint64_t n : {64, 1024}) {
      for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto inst = shared(make_random_hurwitz(d, 10 * d + seed, 0.5, 1.5, 1.0));
        const StepSchedule s{0.3, 0.7, 2};
        const auto t = lsa_run(inst, s, n, Vec::Constant(d, 0.5), seed);

        for (int L : {0, 1, 2}) worst[0] = std::max(worst[0], reconstruction_residual(t, error_decompose(t, L)));

        const auto dec = error_decompose(t, 0);
        const auto Q = q_matrices(inst->Abar(), s, n);
        worst[1] = std::max(worst[1], linear_statistic_identity(dec, Q, t.noises));

        // theta_bar - theta* = n^{-1}[sum transient - sum Q_l eps_l + sum H0].
        Vec rhs = Vec::Zero(d);
        for (std::uint64_t k = 0; k < n; ++k) rhs += dec.transient[k] + dec.H[0][k];
        for (std::uint64_t l = 1; l < n; ++l) rhs -= Q[l - 1] * t.noise(l);
        rhs /= static_cast<double>(n);
        const Vec lhs = t.average - inst->theta_star();
        worst[2] = std::max(worst[2], (lhs - rhs).norm() / (1e-300 + lhs.norm()));

        const auto ens = bootstrap_run(t, 8, WeightScheme{WeightKind::unit}, seed);
        for (const auto& a : ens.averages)
          worst[4] = std::max(worst[4], (a - t.average).norm() / (1e-300 + t.average.norm()));
      }
    }
  }
  // Telescoping: sum_j alpha_j prod_{l>j}(1 - alpha_l b) = (1 - prod_l (1 - alpha_l b)) / b.
  for (double b : {0.3, 1.0, 2.5}) {
    const StepSchedule s{0.4, 0.7, 3};
    double lhs = 0.0, prod = 1.0;
    for (std::uint64_t k = 1; k <= 1024; ++k) {
      const double f = 1.0 - s(k) * b;
      lhs = lhs * f + s(k);
      prod *= f;
    }
    const double rhs = (1.0 - prod) / b;
    worst[3] = std::max(worst[3], std::abs(lhs - rhs) / std::abs(rhs));
  }
  const bool ok = *std::max_element(worst, worst + 5) <= 1e-8;
  return {ok, "reconstruction " + fmt(worst[0], 2) + ", linear " + fmt(worst[1], 2) + ", averaged " +
                  fmt(worst[2], 2) + ", telescoping " + fmt(worst[3], 2) + ", collapse " + fmt(worst[4], 2) +
                  " (tol 1e-8)"};
}

Verdict lyapunov_stability() {
  double worst_res = 0.0, worst_excess = -1.0;
  for (int i = 0; i < 20; ++i) {
    const int d = 2 + i % 7;
    const auto inst = make_random_hurwitz(d, 500 + i, 0.2, 3.0, 1.0);
    const Mat I = Mat::Identity(d, d);
    const Mat Q = lyapunov_solve(inst.Abar(), I);
    worst_res = std::max(worst_res, (inst.Abar().transpose() * Q + Q * inst.Abar() - I).norm());
    const auto c = stability_constants(inst.Abar(), inst.bA());
    for (int g = 0; g < 50; ++g) {
      const double alpha = c.alpha_inf * g / 49.0;
      const Mat M = I - alpha * inst.Abar();
      const Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(M.transpose() * c.Q * M, c.Q);
      worst_excess = std::max(worst_excess, ges.eigenvalues().maxCoeff() - (1.0 - c.a * alpha));
    }
  }
  const bool ok = worst_res <= 1e-10 && worst_excess <= 1e-12;
  return {ok, "max residual " + fmt(worst_res, 2) + ", max ||I - aA||_Q^2 - (1 - a alpha) = " + fmt(worst_excess, 2)};
}

Verdict covariance_gap_rate() {
  const Mat A = Mat::Identity(1, 1);
  const Mat S = Mat::Identity(1, 1);
  bool ok = true;
  std::string detail;
  for (double gamma : {0.6, 2.0 / 3.0, 0.8}) {
    const StepSchedule s{1.0, gamma, 0};
    const auto fit = rate_fit(covariance_gap_series(A, S, s, pow2_grid(7, 14), workers()));
    const bool pass = std::abs(fit.slope - (gamma - 1.0)) <= 0.08;
    ok = ok && pass;
    detail += "gamma=" + fmt(gamma, 3) + ": slope " + fmt(fit.slope) + " vs " + fmt(gamma - 1.0, 3) + "; ";
  }
  return {ok, detail + "tol 0.08"};
}

Verdict bootstrap_covariance_mean() {
  const auto inst = shared(make_random_hurwitz(2, 41, 0.5, 1.5, 1.0));
  const StepSchedule s{0.3, 0.7, 0};
  const std::uint64_t n = 1024;
  const int R = 200;
  const auto Q = q_matrices(inst->Abar(), s, n);
  std::vector<Mat> draws(R);
  parallel_for(R, workers(), [&](std::size_t r) {
    draws[r] = sigma_n_boot(lsa_run(inst, s, n, Vec::Zero(2), derive_seed(404, r)), Q);
  });
  Mat mean = Mat::Zero(2, 2), sq = Mat::Zero(2, 2);
  for (const auto& m : draws) {
    mean += m;
    sq += m.cwiseProduct(m);
  }
  mean /= R;
  const Mat var = (sq / R - mean.cwiseProduct(mean)) * (R / (R - 1.0));
  const Mat se = (var / R).cwiseSqrt();
  const Mat target = sigma_n(inst->Abar(), inst->Sigma_eps(), s, n);
  const Mat z = (mean - target).cwiseQuotient(se);
  const double zmax = z.cwiseAbs().maxCoeff();
  return {zmax <= 3.0, "max |mean - Sigma_n| / se = " + fmt(zmax) + " (tol 3)"};
}

Verdict lower_bound_rate() {
  bool ok = true;
  std::string detail;
  for (double gamma : {2.0 / 3.0, 0.8}) {
    const StepSchedule s{1.0, gamma, 0};
    std::vector<double> x, y;
    for (auto n : pow2_grid(8, 16)) {
      x.push_back(static_cast<double>(n));
      y.push_back(kolmogorov_normal_vs_normal_1d(lower_bound_sigma_n_1d(s, n)));
    }
    const auto fit = rate_fit(x, y);
    const bool pass = std::abs(fit.slope + (1.0 - gamma)) <= 0.08;
    ok = ok && pass;
    detail += "gamma=" + fmt(gamma, 3) + ": slope " + fmt(fit.slope) + " vs " + fmt(gamma - 1.0, 3) + "; ";
  }
  return {ok, detail + "tol 0.08"};
}

Verdict clt_rate() {
  const auto inst = make_random_hurwitz(2, 7, 0.5, 1.5, 3.0);
  const StepSchedule s{0.3, 2.0 / 3.0, 0};
  CltOptions opt;
  opt.par = workers();
  const auto series = clt_rate_experiment(inst, s, pow2_grid(8, 13), 10000, 32, 606, ReferenceLaw::sigma_inf, opt);
  const auto fit = rate_fit(series);
  std::string pts;
  for (const auto& p : series.points) pts += fmt(p.distance, 3) + " ";
  return {fit.slope >= -0.45 && fit.slope <= -0.21,
          "slope " + fmt(fit.slope) + " in [-0.45, -0.21]; distances " + pts};
}

Verdict bootstrap_validity() {
  const auto inst = scalar_atoms();
  const StepSchedule s{0.4, 0.8, 0};
  BootValidityOptions opt;
  opt.theta0 = Vec::Zero(1);
  opt.par = workers();
  const auto res = bootstrap_validity_experiment(inst, s, pow2_grid(8, 12), 2000, 50, 5000, 707, opt);
  const auto fit = rate_fit(res.median);
  std::string pts;
  for (const auto& p : res.median.points) pts += fmt(p.distance, 3) + " ";
  return {fit.slope <= -0.25, "median slope " + fmt(fit.slope) + " <= -0.25; medians " + pts};
}

Verdict coverage() {
  const auto inst = planar_atoms();
  const StepSchedule s{0.5, 2.0 / 3.0, 0};
  CoverageOptions opt;
  opt.par = workers();
  const auto r = coverage_experiment(inst, s, 4096, 200, 500, 0.9, 808, opt);
  bool ok = r.divergences == 0;
  std::string detail;
  for (std::size_t i = 0; i < r.coordinate_coverage.size(); ++i) {
    const double p = r.coordinate_coverage[i];
    ok = ok && p >= 0.86 && p <= 0.94;
    detail += "coord " + std::to_string(i) + ": " + fmt(p, 3) + " +- " + fmt(r.coordinate_stderr[i], 2) + "; ";
  }
  return {ok, detail + "band [0.86, 0.94], box " + fmt(r.box_coverage, 3)};
}

Verdict scale_separation() {
  const auto inst = shared(scalar_atoms());
  // Small gamma keeps k alpha_k large over the fitting window, which shrinks
  // the O(1/(k alpha_k)) drift in the moment ratios.
  const StepSchedule s{1.0, 0.6, 0};
  const std::uint64_t n = 4096;
  const int R = 2000;
  const unsigned W = workers().workers;
  // Per-worker partial sums of ||J^(l)_k||^2, merged in a fixed order.
  std::vector<std::vector<double>> acc(3, std::vector<double>(n, 0.0));
  std::vector<std::vector<std::vector<double>>> shard(W, acc);
  const std::size_t per = (R + W - 1) / W;
  parallel_for(W, Parallelism{W}, [&](std::size_t w) {
    for (std::size_t r = w * per; r < std::min<std::size_t>(R, (w + 1) * per); ++r) {
      const auto t = lsa_run(inst, s, n, inst->theta_star(), derive_seed(909, r));
      const auto dec = error_decompose(t, 2);
      for (int l = 0; l < 3; ++l)
        for (std::uint64_t k = 0; k < n; ++k) shard[w][l][k] += dec.J[l][k].squaredNorm();
    }
  });
  for (const auto& sh : shard)
    for (int l = 0; l < 3; ++l)
      for (std::uint64_t k = 0; k < n; ++k) acc[l][k] += sh[l][k];

  bool ok = true;
  std::string detail;
  for (int l = 0; l < 3; ++l) {
    std::vector<double> x, y;
    for (std::uint64_t k = n / 4; k < n; ++k) {
      x.push_back(s(k));
      y.push_back(std::sqrt(acc[l][k] / R));
    }
    const auto fit = rate_fit(x, y);
    const double want = (l + 1) / 2.0;
    const bool pass = std::abs(fit.slope - want) <= 0.15;
    ok = ok && pass;
    detail += "l=" + std::to_string(l) + ": " + fmt(fit.slope) + " vs " + fmt(want, 2) + "; ";
  }
  return {ok, detail + "tol 0.15"};
}

// Independent evaluators: log-domain arithmetic instead of pow, factored sums.
double h_ref(double n, double d, const StabilityConstants& c, double gamma) {
  const double lt = 1.0 + 2.0 * (std::log(10.0) + 3.0 * std::log(n) + std::log(d));
  const double lb = std::log(8.0) + std::log(c.bA) + 0.5 * std::log(c.kappa_Q) + std::log(lt) - std::log(c.a) -
                    std::log(2.0 - std::exp(gamma * std::log(2.0)));
  return std::ceil(std::exp(2.0 * lb));
}

double phi_ref(double n, double c0, double gamma) {
  const double c = c0 * std::sqrt(c0);
  if (std::abs(gamma - 2.0 / 3.0) <= 1e-12) return c * std::log(n) * std::exp(-0.5 * std::log(n));
  if (gamma < 2.0 / 3.0) return 4.0 * c * std::exp((0.5 - 1.5 * gamma) * std::log(n)) / (2.0 - 3.0 * gamma);
  return 2.0 * c * std::exp(-0.5 * std::log(n)) / (3.0 * gamma - 2.0);
}

double a5_ref(double n, double d, double eps, double cq) {
  const double lg = std::log(10.0) + std::log(d) + std::log(n);
  const double s = std::pow(eps * cq, 2);
  return s * (8.0 * std::sqrt(2.0 * lg / n) + 8.0 * lg / (3.0 * n));
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

Verdict formula_evaluators() {
  Rng rng(1010);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    StabilityConstants c;
    c.a = 0.05 + rng.uniform();
    c.kappa_Q = 1.0 + 9.0 * rng.uniform();
    c.bA = 0.5 + 3.0 * rng.uniform();
    c.b_Q = std::sqrt(c.kappa_Q) * c.bA;
    c.alpha_inf = 0.05 + rng.uniform();
    const double gamma = t % 10 == 0 ? 2.0 / 3.0 : 0.51 + 0.48 * rng.uniform();
    const StepSchedule s{0.05 + 2.0 * rng.uniform(), gamma, static_cast<std::uint64_t>(1 + rng.uniform() * 1e6)};
    const auto n = static_cast<std::uint64_t>(10 + rng.uniform() * 1e7);
    const int d = 1 + static_cast<int>(rng.uniform() * 20);
    const double p = 2.0 + 4.0 * rng.uniform();
    const double eps = 0.1 + 5.0 * rng.uniform();
    const double cq = 0.1 + 10.0 * rng.uniform();
    const double nn = static_cast<double>(n), dd = d;

    const double h = h_ref(nn, dd, c, gamma);
    worst = std::max(worst, rel(static_cast<double>(block_size_h(n, d, c, s)), h));
    worst = std::max(worst, rel(rate_envelope_phi(n, s), phi_ref(nn, s.c0, gamma)));
    worst = std::max(worst, rel(sample_size_a5_rhs(n, d, eps, cq), a5_ref(nn, dd, eps, cq)));

    const auto step = check_step_size(s, c, p);
    const double first = std::exp(std::log(16.0 / (c.a * s.c0)) / (1.0 - gamma));
    const double second = std::exp((std::log(2.0 * p) + std::log(c.kappa_Q) + 2.0 * std::log(c.bA) -
                                    std::log(c.a) - std::log(s.c0)) / gamma);
    worst = std::max(worst, rel(step.find("k0 >= (16/(a c0))^(1/(1-gamma))")->required, first));
    worst = std::max(worst, rel(step.find("k0 >= (2 p kappa_Q bA^2/(a c0))^(1/gamma)")->required, second));

    BootstrapAssumptionInputs in;
    in.n = n;
    in.d = d;
    in.eps_sup = eps;
    in.c_q_bound = cq;
    in.lambda_min_sigma_inf = 1.0;
    const auto rep = check_bootstrap_assumptions(s, c, in);
    const double sq = std::sqrt(c.kappa_Q);
    const double two_g = std::exp(gamma * std::log(2.0));
    const double l5 = std::log(5.0) + std::log(nn);
    const double branches[4] = {
        2.0 * c.bA * sq * h,
        s.c0 * h / std::min(1.0, c.alpha_inf),
        8.0 * std::exp(1.0) * c.bA * c.bA * s.c0 * sq * h / (c.a * (2.0 - two_g)),
        s.c0 * l5 * l5 / std::min(1.0, c.a),
    };
    const char* names[4] = {
        "k0^gamma >= 2 h(n) bA sqrt(kappa_Q)",
        "k0^gamma >= c0 h(n)/min(1, alpha_inf)",
        "k0^gamma >= 8 bA^2 c0 sqrt(kappa_Q) e h(n)/(a(2-2^gamma))",
        "k0^gamma >= c0 log^2(5n)/min(1, a)",
    };
    for (int b = 0; b < 4; ++b) worst = std::max(worst, rel(rep.find(names[b])->required, branches[b]));
    worst = std::max(worst, rel(rep.find("lambda_min(Sigma_inf) >= sample-size bound")->required,
                                a5_ref(nn, dd, eps, cq)));
  }
  return {worst <= 1e-12, "max relative disagreement " + fmt(worst, 2) + " over 100 tuples (tol 1e-12)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "exact identities", 10, exact_identities},
      {2, "Lyapunov and Q-norm contraction", 5, lyapunov_stability},
      {3, "covariance-gap rate", 30, covariance_gap_rate},
      {4, "bootstrap covariance is unbiased for Sigma_n", 60, bootstrap_covariance_mean},
      {5, "lower-bound Kolmogorov rate", 30, lower_bound_rate},
      {6, "CLT rate, half-space surrogate", 900, clt_rate},
      {7, "bootstrap validity trend", 1200, bootstrap_validity},
      {8, "bootstrap interval coverage", 600, coverage},
      {9, "scale separation of J^(l)", 120, scale_separation},
      {10, "formula evaluators", 1, formula_evaluators},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = v.pass && in_time;
    failed += pass ? 0 : 1;
    std::printf("%s criterion %d (%s): %s; %.2f s of %.0f s%s\n", pass ? "PASS" : "FAIL", c.id, c.title,
                v.detail.c_str(), secs, c.budget_s, in_time ? "" : " [over budget]");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
