#include "lsainfer/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "lsainfer/errors.hpp"

namespace lsa {

namespace {
constexpr double kE = 2.718281828459045235360;

bool is_two_thirds(double gamma) { return std::abs(gamma - 2.0 / 3.0) <= 1e-12; }
}  // namespace

double StepSchedule::operator()(std::uint64_t k) const {
  if (k + k0 == 0) throw ConfigError("schedule.step_size", "alpha_k undefined for k + k0 = 0");
  return c0 * std::pow(static_cast<double>(k + k0), -gamma);
}

void StepSchedule::validate() const {
  if (!(c0 > 0.0)) throw ConfigError("schedule.c0", "c0 must be positive");
  if (!(gamma > 0.5 && gamma < 1.0)) throw ConfigError("schedule.gamma", "gamma must lie in (1/2, 1)");
}

double step_size(const StepSchedule& schedule, std::uint64_t k) { return schedule(k); }

Mat lyapunov_solve(const Mat& Abar, const Mat& P) {
  constexpr const char* origin = "schedule.lyapunov_solve";
  const auto d = Abar.rows();
  if (Abar.cols() != d || P.rows() != d || P.cols() != d) throw DimensionError(origin, "shape mismatch");
  if (!is_symmetric(P) || lambda_min_sym(P) <= 0.0) throw ConfigError(origin, "P must be symmetric positive definite");

  // Column-major vec: vec(A^T Q) = (I (x) A^T) vec(Q), vec(Q A) = (A^T (x) I) vec(Q).
  const Mat I = Mat::Identity(d, d);
  const Mat At = Abar.transpose();
  Mat K = Mat::Zero(d * d, d * d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      K.block(i * d, j * d, d, d) += I(i, j) * At + At(i, j) * I;
    }
  }
  const Vec vecP = Eigen::Map<const Vec>(P.data(), d * d);
  Vec vecQ;
  try {
    vecQ = solve_checked(K, vecP, origin);
  } catch (const SingularMatrixError& e) {
    throw NotHurwitzError(origin, std::string("vectorized Lyapunov system is singular: ") + e.what());
  }
  Mat Q = symmetrize(Eigen::Map<const Mat>(vecQ.data(), d, d));
  if (lambda_min_sym(Q) <= 0.0) throw NotHurwitzError(origin, "Lyapunov solution is not positive definite");
  return Q;
}

StabilityConstants stability_constants(const Mat& Abar, const Mat& P, double bA) {
  StabilityConstants c;
  c.P = P;
  c.Q = lyapunov_solve(Abar, P);
  c.bA = bA;
  c.lambda_min_P = lambda_min_sym(P);
  c.norm_Q = lambda_max_sym(c.Q);
  c.kappa_Q = c.norm_Q / lambda_min_sym(c.Q);
  c.norm_Abar_Q = q_weighted_norm(Abar, c.Q);
  c.a = c.lambda_min_P / (2.0 * c.norm_Q);
  c.alpha_inf = std::min(c.lambda_min_P / (2.0 * c.kappa_Q * c.norm_Abar_Q * c.norm_Abar_Q),
                         c.norm_Q / c.lambda_min_P);
  c.b_Q = std::sqrt(c.kappa_Q) * bA;
  return c;
}

StabilityConstants stability_constants(const Mat& Abar, double bA) {
  return stability_constants(Abar, Mat::Identity(Abar.rows(), Abar.cols()), bA);
}

void AssumptionReport::add(std::string name, double required, double actual, bool satisfied, std::string note) {
  checks.push_back({std::move(name), required, actual, satisfied, std::move(note)});
  passed = passed && satisfied;
}

void AssumptionReport::merge(const AssumptionReport& other) {
  for (const auto& c : other.checks) add(c.name, c.required, c.actual, c.satisfied, c.note);
}

const AssumptionCheck* AssumptionReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

std::vector<std::string> AssumptionReport::failing() const {
  std::vector<std::string> out;
  for (const auto& c : checks)
    if (!c.satisfied) out.push_back(c.name);
  return out;
}

std::string AssumptionReport::to_table() const {
  std::size_t w = 9;
  for (const auto& c : checks) w = std::max(w, c.name.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(w)) << "condition" << "  " << std::right << std::setw(14)
     << "required" << "  " << std::setw(14) << "actual" << "  status\n";
  os << std::string(w + 40, '-') << '\n';
  for (const auto& c : checks) {
    os << std::left << std::setw(static_cast<int>(w)) << c.name << "  " << std::right << std::setw(14)
       << std::setprecision(6) << c.required << "  " << std::setw(14) << c.actual << "  "
       << (c.satisfied ? "ok" : "FAIL");
    if (!c.note.empty()) os << "  (" << c.note << ')';
    os << '\n';
  }
  os << "overall: " << (passed ? "satisfied" : "NOT satisfied") << '\n';
  return os.str();
}

double effective_moment_order(double p) { return std::max(2.0, p); }

double effective_moment_order(double p, int d) {
  return std::max({2.0, p, std::log(static_cast<double>(std::max(d, 1)))});
}

AssumptionReport check_step_size(const StepSchedule& s, const StabilityConstants& c, double p) {
  AssumptionReport r;
  const bool gamma_ok = s.gamma > 0.5 && s.gamma < 1.0;
  r.add("gamma in (1/2, 1)", 0.5, s.gamma, gamma_ok, gamma_ok ? "" : "gamma must lie in (1/2, 1)");
  r.add("c0 > 0", 0.0, s.c0, s.c0 > 0.0);
  r.add("c0 <= alpha_inf", c.alpha_inf, s.c0, s.c0 <= c.alpha_inf);
  if (!gamma_ok || !(s.c0 > 0.0)) return r;

  const double pe = effective_moment_order(p);
  const double k0 = static_cast<double>(s.k0);
  const double first = std::pow(16.0 / (c.a * s.c0), 1.0 / (1.0 - s.gamma));
  const double second = std::pow(2.0 * pe * c.kappa_Q * c.bA * c.bA / (c.a * s.c0), 1.0 / s.gamma);
  r.add("k0 >= (16/(a c0))^(1/(1-gamma))", first, k0, k0 >= first);
  r.add("k0 >= (2 p kappa_Q bA^2/(a c0))^(1/gamma)", second, k0, k0 >= second,
        "p = " + std::to_string(pe));
  return r;
}

std::uint64_t block_size_h(std::uint64_t n, int d, const StabilityConstants& c, const StepSchedule& s) {
  const double nn = static_cast<double>(n);
  const double log_term = 1.0 + 2.0 * std::log(10.0 * nn * nn * nn * static_cast<double>(d));
  const double base = 8.0 * c.bA * std::sqrt(c.kappa_Q) * log_term / (c.a * (2.0 - std::pow(2.0, s.gamma)));
  return static_cast<std::uint64_t>(std::ceil(base * base));
}

double q_bound_constant(const StabilityConstants& c, const StepSchedule& s) {
  return std::sqrt(c.kappa_Q) * (s.c0 + 2.0 / (c.a * (1.0 - s.gamma)));
}

double sample_size_a5_rhs(std::uint64_t n, int d, double eps_sup, double c_q_bound) {
  const double nn = static_cast<double>(n);
  const double lg = std::log(10.0 * static_cast<double>(d) * nn);
  const double scale = eps_sup * eps_sup * c_q_bound * c_q_bound;
  return 8.0 * std::sqrt(2.0) * scale * std::sqrt(lg) / std::sqrt(nn) + 8.0 * scale * lg / (3.0 * nn);
}

AssumptionReport check_bootstrap_assumptions(const StepSchedule& s, const StabilityConstants& c,
                                             const BootstrapAssumptionInputs& in) {
  AssumptionReport r;
  const double h = static_cast<double>(block_size_h(in.n, in.d, c, s));
  const double k0g = std::pow(static_cast<double>(s.k0), s.gamma);
  const double sq = std::sqrt(c.kappa_Q);
  const double nn = static_cast<double>(in.n);
  const double log5n = std::log(5.0 * nn);

  const double b1 = 2.0 * h * c.bA * sq;
  const double b2 = s.c0 * h / std::min(1.0, c.alpha_inf);
  const double b3 = 8.0 * c.bA * c.bA * s.c0 * sq * kE * h / (c.a * (2.0 - std::pow(2.0, s.gamma)));
  const double b4 = s.c0 * log5n * log5n / std::min(1.0, c.a);
  const std::string hn = "h(n) = " + std::to_string(static_cast<std::uint64_t>(h));
  r.add("k0^gamma >= 2 h(n) bA sqrt(kappa_Q)", b1, k0g, k0g >= b1, hn);
  r.add("k0^gamma >= c0 h(n)/min(1, alpha_inf)", b2, k0g, k0g >= b2, hn);
  r.add("k0^gamma >= 8 bA^2 c0 sqrt(kappa_Q) e h(n)/(a(2-2^gamma))", b3, k0g, k0g >= b3, hn);
  r.add("k0^gamma >= c0 log^2(5n)/min(1, a)", b4, k0g, k0g >= b4);

  const double a5 = sample_size_a5_rhs(in.n, in.d, in.eps_sup, in.c_q_bound);
  r.add("lambda_min(Sigma_inf) >= sample-size bound", a5, in.lambda_min_sigma_inf, in.lambda_min_sigma_inf >= a5);

  const double n_min = static_cast<double>(s.k0 + 1);
  r.add("n >= k0 + 1", n_min, nn, nn >= n_min);
  if (in.sigma_gap_constant) {
    const double need = 2.0 * *in.sigma_gap_constant / in.lambda_min_sigma_inf;
    const double have = std::pow(nn, 1.0 - s.gamma);
    r.add("n^(1-gamma) >= 2 C_gap / lambda_min(Sigma_inf)", need, have, have >= need);
  }
  return r;
}

double rate_envelope_phi(std::uint64_t n, const StepSchedule& s) {
  const double nn = static_cast<double>(n);
  const double c32 = std::pow(s.c0, 1.5);
  if (is_two_thirds(s.gamma)) return c32 * std::log(nn) / std::sqrt(nn);
  if (s.gamma < 2.0 / 3.0) {
    return 2.0 * c32 / ((1.0 - 1.5 * s.gamma) * std::pow(nn, 1.5 * s.gamma - 0.5));
  }
  return c32 / ((1.5 * s.gamma - 1.0) * std::sqrt(nn));
}

}  // namespace lsa
