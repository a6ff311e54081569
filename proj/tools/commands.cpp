#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "config.hpp"
#include "lsainfer/bootstrap.hpp"
#include "lsainfer/covariance.hpp"
#include "lsainfer/engine.hpp"
#include "lsainfer/errors.hpp"
#include "lsainfer/gaussapprox.hpp"
#include "lsainfer/io.hpp"

namespace lsa::cli {

using nlohmann::json;

namespace {

struct Overrides {
  std::string config;
  std::string out;
  unsigned workers = 0;
  bool assert_mode = false;
  std::size_t M = 0;
  double level = 0.0;
  std::string weights;
  std::uint64_t replications = 0;
};

struct Outcome {
  std::map<std::string, std::string> files;  // file name -> content
  std::string table;
  std::optional<bool> assertion;  // set when --assert was evaluated
  std::string assertion_message;
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

json vec_json(const Vec& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json series_json(const DistanceSeries& s, const RateFit& fit, double predicted) {
  json pts = json::array();
  for (const auto& p : s.points) pts.push_back({{"n", p.n}, {"distance", p.distance}, {"stderr", p.standard_error}});
  return {{"metric", to_string(s.metric)},
          {"reference", to_string(s.reference)},
          {"points", pts},
          {"notes", s.notes},
          {"fit",
           {{"slope", fit.slope},
            {"intercept", fit.intercept},
            {"r_squared", fit.r_squared},
            {"slope_stderr", fit.slope_stderr}}},
          {"predicted_slope", predicted}};
}

std::string fmt(double x, int precision = 6) {
  std::ostringstream os;
  os << std::setprecision(precision) << x;
  return os.str();
}

std::string series_table(const DistanceSeries& s, const RateFit& fit, double predicted,
                         const std::vector<double>& extra = {}, const std::string& extra_name = {}) {
  std::ostringstream os;
  os << std::setw(10) << "n" << std::setw(14) << "distance" << std::setw(12) << "stderr";
  if (!extra.empty()) os << std::setw(14) << extra_name;
  os << '\n';
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    const auto& p = s.points[i];
    os << std::setw(10) << p.n << std::setw(14) << fmt(p.distance) << std::setw(12) << fmt(p.standard_error, 3);
    if (!extra.empty()) os << std::setw(14) << fmt(extra[i]);
    os << '\n';
  }
  os << "fitted slope " << fmt(fit.slope, 4) << " +/- " << fmt(fit.slope_stderr, 2) << " (r^2 " << fmt(fit.r_squared, 4)
     << "), predicted exponent " << fmt(predicted, 4) << '\n';
  for (const auto& note : s.notes) os << "note: " << note << '\n';
  return os.str();
}

void check_band(Outcome& o, const std::string& what, double value, double lo, double hi) {
  const bool ok = value >= lo && value <= hi;
  o.assertion = o.assertion.value_or(true) && ok;
  o.assertion_message += what + " = " + fmt(value) + " in [" + fmt(lo) + ", " + fmt(hi) + "]: " +
                         (ok ? "pass" : "FAIL") + "\n";
}

Vec theta0_or(const ExperimentConfig& cfg, const Vec& fallback, const char* origin) {
  if (!cfg.theta0) return fallback;
  if (cfg.theta0->size() != fallback.size()) throw ConfigError("experiment.theta0", std::string(origin) + ": dimension mismatch");
  return *cfg.theta0;
}

AssumptionReport assumption_summary(const ExperimentConfig& cfg, const LsaInstance& inst, bool with_bootstrap,
                                    json* details = nullptr) {
  AssumptionReport report;
  StabilityConstants sc;
  try {
    sc = stability_constants(inst.Abar(), inst.bA());
  } catch (const NotHurwitzError& e) {
    report.add("-Abar Hurwitz", 0.0, 0.0, false, e.what());
    return report;
  }
  report.merge(check_step_size(cfg.schedule, sc, cfg.moment_p));
  const double c_q = q_bound_constant(sc, cfg.schedule);
  const Mat Sinf = sigma_inf(inst.Abar(), inst.Sigma_eps());
  if (with_bootstrap) {
    BootstrapAssumptionInputs in;
    in.n = cfg.n;
    in.d = inst.dim();
    in.eps_sup = inst.eps_sup();
    in.lambda_min_sigma_inf = lambda_min_sym(Sinf);
    in.c_q_bound = c_q;
    // Empirical constant of the covariance-gap bound over the configured grid.
    double gap_c = 0.0;
    for (std::uint64_t n : cfg.n_grid) {
      const double gap = spectral_norm(sigma_n(inst.Abar(), inst.Sigma_eps(), cfg.schedule, n) - Sinf);
      gap_c = std::max(gap_c, gap * std::pow(static_cast<double>(n), 1.0 - cfg.schedule.gamma));
    }
    in.sigma_gap_constant = gap_c;
    report.merge(check_bootstrap_assumptions(cfg.schedule, sc, in));
  }
  if (details) {
    *details = {{"a", sc.a},
                {"alpha_inf", sc.alpha_inf},
                {"kappa_Q", sc.kappa_Q},
                {"b_Q", sc.b_Q},
                {"bA", sc.bA},
                {"norm_Q", sc.norm_Q},
                {"lambda_min_P", sc.lambda_min_P},
                {"norm_Abar_Q", sc.norm_Abar_Q},
                {"c_q_bound", c_q},
                {"h_n", block_size_h(cfg.n, inst.dim(), sc, cfg.schedule)},
                {"phi_n", rate_envelope_phi(cfg.n, cfg.schedule)},
                {"lambda_min_sigma_inf", lambda_min_sym(Sinf)},
                {"eps_sup", std::isfinite(inst.eps_sup()) ? json(inst.eps_sup()) : json("inf")},
                {"a5_rhs", sample_size_a5_rhs(cfg.n, inst.dim(), inst.eps_sup(), c_q)}};
  }
  return report;
}

json report_json(const AssumptionReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"name", c.name},
                      {"required", std::isfinite(c.required) ? json(c.required) : json(fmt(c.required))},
                      {"actual", std::isfinite(c.actual) ? json(c.actual) : json(fmt(c.actual))},
                      {"satisfied", c.satisfied},
                      {"note", c.note}});
  }
  return {{"passed", r.passed}, {"checks", checks}, {"failing", r.failing()}};
}

json confidence_json(const ConfidenceReport& r) {
  json j = {{"level", r.level},
            {"center", vec_json(r.center)},
            {"lo", vec_json(r.lo)},
            {"hi", vec_json(r.hi)},
            {"sup_radius", r.sup_radius},
            {"ellipsoid_radius", r.ellipsoid_radius},
            {"degenerate", r.degenerate}};
  if (r.contains_target) {
    j["contains_target"] = *r.contains_target;
    j["coordinate_contains"] = r.coordinate_contains;
    j["sup_contains"] = *r.sup_contains;
    j["ellipsoid_contains"] = *r.ellipsoid_contains;
  }
  return j;
}

std::string confidence_table(const ConfidenceReport& r, const Vec& theta_star) {
  std::ostringstream os;
  os << std::setw(6) << "coord" << std::setw(14) << "estimate" << std::setw(14) << "lo" << std::setw(14) << "hi"
     << std::setw(14) << "theta*" << '\n';
  for (Eigen::Index i = 0; i < r.center.size(); ++i) {
    os << std::setw(6) << i << std::setw(14) << fmt(r.center(i)) << std::setw(14) << fmt(r.lo(i)) << std::setw(14)
       << fmt(r.hi(i)) << std::setw(14) << fmt(theta_star(i)) << '\n';
  }
  os << "level " << r.level << ", sup radius " << fmt(r.sup_radius) << ", ellipsoid radius " << fmt(r.ellipsoid_radius)
     << (r.degenerate ? " (degenerate ensemble)" : "") << '\n';
  return os.str();
}

// Smallest exponent among the bound's terms that decay slowest.
double predicted_clt_slope(ReferenceLaw ref, double gamma) {
  if (ref == ReferenceLaw::sigma_n) return -gamma / 2.0;
  return -std::min(gamma / 2.0, 1.0 - gamma);
}

Outcome cmd_simulate(const ExperimentConfig& cfg, std::shared_ptr<const LsaInstance> inst) {
  const Vec theta0 = theta0_or(cfg, Vec::Zero(inst->dim()), "simulate");
  const Trajectory traj = lsa_run(inst, cfg.schedule, cfg.n, theta0, cfg.seed);
  Outcome o;
  o.files["trajectory.csv"] = trajectory_csv(traj);
  const json summary = {{"n", cfg.n},
                        {"average", vec_json(traj.average)},
                        {"last", vec_json(traj.iterates.back())},
                        {"theta_star", vec_json(inst->theta_star())},
                        {"error_norm", (traj.average - inst->theta_star()).norm()}};
  o.files["summary.json"] = summary.dump(2) + "\n";
  std::ostringstream os;
  os << std::setw(6) << "coord" << std::setw(16) << "theta_bar_n" << std::setw(16) << "theta*" << '\n';
  for (int i = 0; i < inst->dim(); ++i) {
    os << std::setw(6) << i << std::setw(16) << fmt(traj.average(i)) << std::setw(16) << fmt(inst->theta_star()(i))
       << '\n';
  }
  os << "||theta_bar_n - theta*|| = " << fmt((traj.average - inst->theta_star()).norm()) << '\n';
  o.table = os.str();
  write_trajectory_binary(traj, (std::filesystem::path(cfg.output) / "trajectory.bin").string());
  return o;
}

Outcome cmd_bootstrap(const ExperimentConfig& cfg, std::shared_ptr<const LsaInstance> inst, const Parallelism& par) {
  const Vec theta0 = theta0_or(cfg, Vec::Zero(inst->dim()), "bootstrap");
  const Trajectory traj = lsa_run(inst, cfg.schedule, cfg.n, theta0, cfg.seed);
  const auto ens = bootstrap_run(traj, cfg.M, WeightScheme{cfg.weights}, derive_seed(cfg.seed, 1), par);
  const auto rep = confidence_sets(ens, cfg.level, inst->theta_star());
  Outcome o;
  o.files["ensemble.csv"] = ensemble_csv(ens);
  o.files["confidence.json"] = confidence_json(rep).dump(2) + "\n";
  o.table = confidence_table(rep, inst->theta_star());
  return o;
}

Outcome cmd_coverage(const ExperimentConfig& cfg, const LsaInstance& inst, const Parallelism& par, bool assert_mode) {
  CoverageOptions opt;
  opt.theta0 = theta0_or(cfg, Vec::Zero(inst.dim()), "coverage");
  opt.weights = cfg.weights;
  opt.par = par;
  const auto res = coverage_experiment(inst, cfg.schedule, cfg.n, cfg.M, cfg.R, cfg.level, cfg.seed, opt);
  Outcome o;
  const json j = {{"level", res.level},
                  {"coordinate_coverage", res.coordinate_coverage},
                  {"coordinate_stderr", res.coordinate_stderr},
                  {"box_coverage", res.box_coverage},
                  {"box_stderr", res.box_stderr},
                  {"sup_coverage", res.sup_coverage},
                  {"sup_stderr", res.sup_stderr},
                  {"ellipsoid_coverage", res.ellipsoid_coverage},
                  {"ellipsoid_stderr", res.ellipsoid_stderr},
                  {"replications", res.replications},
                  {"divergences", res.divergences},
                  {"degenerate", res.degenerate},
                  {"mean_coordinate_radius", vec_json(res.mean_coordinate_radius)}};
  o.files["coverage.json"] = j.dump(2) + "\n";
  std::ostringstream os;
  os << std::setw(12) << "set" << std::setw(12) << "coverage" << std::setw(10) << "stderr" << '\n';
  for (std::size_t i = 0; i < res.coordinate_coverage.size(); ++i) {
    os << std::setw(12) << ("coord " + std::to_string(i)) << std::setw(12) << fmt(res.coordinate_coverage[i], 4)
       << std::setw(10) << fmt(res.coordinate_stderr[i], 3) << '\n';
  }
  os << std::setw(12) << "box" << std::setw(12) << fmt(res.box_coverage, 4) << std::setw(10) << fmt(res.box_stderr, 3)
     << '\n';
  os << std::setw(12) << "sup" << std::setw(12) << fmt(res.sup_coverage, 4) << std::setw(10) << fmt(res.sup_stderr, 3)
     << '\n';
  os << std::setw(12) << "ellipsoid" << std::setw(12) << fmt(res.ellipsoid_coverage, 4) << std::setw(10)
     << fmt(res.ellipsoid_stderr, 3) << '\n';
  os << "nominal level " << cfg.level << ", " << res.replications << " replications, " << res.divergences
     << " divergences\n";
  o.table = os.str();
  if (assert_mode) {
    const double lo = cfg.band.min.value_or(cfg.level - 0.04);
    const double hi = cfg.band.max.value_or(cfg.level + 0.04);
    for (std::size_t i = 0; i < res.coordinate_coverage.size(); ++i) {
      check_band(o, "coverage[" + std::to_string(i) + "]", res.coordinate_coverage[i], lo, hi);
    }
  }
  return o;
}

Outcome finish_series(const ExperimentConfig& cfg, const DistanceSeries& s, double predicted, double default_half_width,
                      const std::string& stem, bool assert_mode, const std::vector<double>& extra = {},
                      const std::string& extra_name = {}) {
  const RateFit fit = rate_fit(s);
  Outcome o;
  o.files[stem + ".csv"] = s.to_csv();
  o.files[stem + ".json"] = series_json(s, fit, predicted).dump(2) + "\n";
  o.table = series_table(s, fit, predicted, extra, extra_name);
  if (assert_mode) {
    check_band(o, "slope", fit.slope, cfg.band.min.value_or(predicted - default_half_width),
               cfg.band.max.value_or(predicted + default_half_width));
  }
  return o;
}

Outcome cmd_covariance_gap(const ExperimentConfig& cfg, const LsaInstance& inst, const Parallelism& par,
                           bool assert_mode) {
  const auto s = covariance_gap_series(inst.Abar(), inst.Sigma_eps(), cfg.schedule, cfg.n_grid, par);
  return finish_series(cfg, s, cfg.schedule.gamma - 1.0, 0.08, "covariance_gap", assert_mode);
}

Outcome cmd_clt_rates(const ExperimentConfig& cfg, const LsaInstance& inst, const Parallelism& par, bool assert_mode) {
  CltOptions opt;
  opt.theta0 = theta0_or(cfg, inst.theta_star(), "clt-rates");
  opt.par = par;
  const auto s = clt_rate_experiment(inst, cfg.schedule, cfg.n_grid, cfg.R, cfg.K, cfg.seed, cfg.reference, opt);
  std::vector<double> exact;
  if (inst.kind() == InstanceKind::lower_bound_1d && cfg.reference != ReferenceLaw::sigma_n) {
    for (std::uint64_t n : cfg.n_grid) exact.push_back(kolmogorov_normal_vs_normal_1d(lower_bound_sigma_n_1d(cfg.schedule, n)));
  }
  return finish_series(cfg, s, predicted_clt_slope(cfg.reference, cfg.schedule.gamma), 0.12, "clt_rates", assert_mode,
                       exact, "exact");
}

Outcome cmd_boot_validity(const ExperimentConfig& cfg, const LsaInstance& inst, const Parallelism& par,
                          bool assert_mode) {
  BootValidityOptions opt;
  opt.theta0 = theta0_or(cfg, inst.theta_star(), "boot-validity");
  opt.weights = cfg.weights;
  opt.K = cfg.K;
  opt.par = par;
  const auto res =
      bootstrap_validity_experiment(inst, cfg.schedule, cfg.n_grid, cfg.M, cfg.R_outer, cfg.R_real, cfg.seed, opt);
  const double predicted = -cfg.schedule.gamma / 2.0;
  ExperimentConfig c = cfg;
  if (!c.band.min && !c.band.max) {
    c.band.min = -std::numeric_limits<double>::infinity();
    c.band.max = -0.25;
  }
  Outcome o = finish_series(c, res.median, predicted, 0.0, "boot_validity", assert_mode, res.p90.distances(), "p90");
  o.files["boot_validity_p90.csv"] = res.p90.to_csv();
  std::string per = "n,trajectory,distance\n";
  for (std::size_t g = 0; g < cfg.n_grid.size(); ++g) {
    for (std::size_t t = 0; t < res.per_trajectory[g].size(); ++t) {
      per += std::to_string(cfg.n_grid[g]) + ',' + std::to_string(t) + ',' + io::format_double(res.per_trajectory[g][t]) + '\n';
    }
  }
  o.files["boot_validity_per_trajectory.csv"] = per;
  return o;
}

Outcome cmd_check_assumptions(const ExperimentConfig& cfg, const LsaInstance& inst) {
  json details;
  const AssumptionReport report = assumption_summary(cfg, inst, true, &details);
  Outcome o;
  json j = report_json(report);
  j["constants"] = details;
  o.files["assumptions.json"] = j.dump(2) + "\n";
  std::ostringstream os;
  os << report.to_table();
  if (!details.is_null()) {
    os << "constants: a=" << fmt(details["a"].get<double>()) << " alpha_inf=" << fmt(details["alpha_inf"].get<double>())
       << " kappa_Q=" << fmt(details["kappa_Q"].get<double>()) << " h(n)=" << details["h_n"].get<std::uint64_t>()
       << " phi_n=" << fmt(details["phi_n"].get<double>()) << '\n';
  }
  o.table = os.str();
  return o;
}

Outcome cmd_td_demo(const ExperimentConfig& cfg, std::shared_ptr<const LsaInstance> inst, const Parallelism& par) {
  if (inst->kind() != InstanceKind::td_generative) {
    throw ConfigError("instance.kind", "td-demo requires kind 'td_generative'");
  }
  const Vec theta0 = theta0_or(cfg, Vec::Zero(inst->dim()), "td-demo");
  const Trajectory traj = lsa_run(inst, cfg.schedule, cfg.n, theta0, cfg.seed);
  const auto ens = bootstrap_run(traj, cfg.M, WeightScheme{cfg.weights}, derive_seed(cfg.seed, 1), par);
  const auto rep = confidence_sets(ens, cfg.level, inst->theta_star());
  const Mat& Phi = cfg.instance.mdp.features;
  Outcome o;
  json j = confidence_json(rep);
  j["td_fixed_point"] = vec_json(inst->theta_star());
  j["value_estimate"] = vec_json(Phi * traj.average);
  j["value_fixed_point"] = vec_json(Phi * inst->theta_star());
  o.files["td_demo.json"] = j.dump(2) + "\n";
  o.files["ensemble.csv"] = ensemble_csv(ens);
  std::ostringstream os;
  os << "TD(0) under the generative model, " << cfg.n << " samples, M = " << cfg.M << '\n'
     << confidence_table(rep, inst->theta_star());
  o.table = os.str();
  return o;
}

void add_common(CLI::App* sub, Overrides& ov) {
  sub->add_option("--config", ov.config, "JSON experiment config (or a manifest.json to re-run)")->required();
  sub->add_option("--out", ov.out, "output directory (default: config 'output' or ./out)");
  sub->add_option("--workers", ov.workers, "worker threads")->check(CLI::PositiveNumber);
  sub->add_flag("--assert", ov.assert_mode, "exit 3 when the result leaves the configured band");
  sub->add_option("--M", ov.M, "bootstrap replicates")->check(CLI::PositiveNumber);
  sub->add_option("--level", ov.level, "confidence level in (0, 1)");
  sub->add_option("--weights", ov.weights, "multiplier law")->check(CLI::IsMember({"two_point", "exp", "poisson"}));
  sub->add_option("--replications", ov.replications, "Monte-Carlo replications R")->check(CLI::PositiveNumber);
}

void apply_overrides(ExperimentConfig& cfg, const Overrides& ov) {
  if (!ov.out.empty()) cfg.output = ov.out;
  if (ov.workers > 0) cfg.workers = ov.workers;
  if (ov.M > 0) cfg.M = ov.M;
  if (ov.level != 0.0) {
    if (!(ov.level > 0.0 && ov.level < 1.0)) throw ConfigError("--level", "level must lie in (0, 1)");
    cfg.level = ov.level;
  }
  if (!ov.weights.empty()) cfg.weights = weight_kind_from_string(ov.weights);
  if (ov.replications > 0) cfg.R = ov.replications;
  auto& ex = cfg.effective["experiment"];
  ex["M"] = cfg.M;
  ex["level"] = cfg.level;
  ex["weights"] = to_string(cfg.weights);
  ex["R"] = cfg.R;
  cfg.effective["output"] = cfg.output;
  cfg.effective["workers"] = cfg.workers;
  cfg.effective["seed"] = cfg.seed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"lsa-infer: LSA with Polyak-Ruppert averaging, multiplier bootstrap and normal-approximation experiments"};
  app.require_subcommand(1);
  Overrides ov;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"simulate", "run one trajectory and write it as CSV and binary"},
      {"bootstrap", "multiplier-bootstrap confidence sets from one trajectory"},
      {"coverage", "empirical coverage of bootstrap sets over R replications"},
      {"covariance-gap", "||Sigma_n - Sigma_inf|| over n_grid and its log-log slope"},
      {"clt-rates", "half-space distance to the Gaussian reference over n_grid"},
      {"boot-validity", "distance between bootstrap and real-world laws over n_grid"},
      {"check-assumptions", "report step-size and sample-size conditions (never fails)"},
      {"td-demo", "TD(0) policy evaluation with bootstrap confidence sets"},
  };
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), ov);
  app.footer(
      "Config defaults (artifact knobs only): experiment.n=1024, n_grid=[256..4096], M=200, R=500, R_outer=50,\n"
      "R_real=5000, level=0.9, K=32, weights=two_point, reference=sigma_inf, p=2, L=2, workers=1, output=out.\n"
      "schedule.c0, schedule.gamma and schedule.k0 are required. LSA_INFER_SEED overrides 'seed'.\n"
      "Exit codes: 0 ok, 1 config error, 2 numeric divergence, 3 failed --assert.");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  const std::string started = utc_now();
  try {
    ExperimentConfig cfg = load_config(ov.config);
    apply_seed_override(cfg);
    apply_overrides(cfg, ov);
    const Parallelism par{cfg.workers};
    std::filesystem::create_directories(cfg.output);

    auto inst = std::make_shared<const LsaInstance>(build_instance(cfg));
    const bool boot = command != "simulate" && command != "covariance-gap" && command != "clt-rates";
    const AssumptionReport summary = assumption_summary(cfg, *inst, boot);

    Outcome o;
    if (command == "simulate") o = cmd_simulate(cfg, inst);
    else if (command == "bootstrap") o = cmd_bootstrap(cfg, inst, par);
    else if (command == "coverage") o = cmd_coverage(cfg, *inst, par, ov.assert_mode);
    else if (command == "covariance-gap") o = cmd_covariance_gap(cfg, *inst, par, ov.assert_mode);
    else if (command == "clt-rates") o = cmd_clt_rates(cfg, *inst, par, ov.assert_mode);
    else if (command == "boot-validity") o = cmd_boot_validity(cfg, *inst, par, ov.assert_mode);
    else if (command == "check-assumptions") o = cmd_check_assumptions(cfg, *inst);
    else o = cmd_td_demo(cfg, inst, par);

    json manifest = {{"manifest_version", 1},
                     {"tool", "lsa-infer"},
                     {"version", LSAINFER_VERSION},
                     {"subcommand", command},
                     {"config_path", ov.config},
                     {"config_hash", cfg.config_hash},
                     {"config", cfg.effective},
                     {"seeds",
                      {{"config", cfg.config_seed}, {"effective", cfg.seed}, {"from_env", cfg.seed_from_env}}},
                     {"workers", cfg.workers},
                     {"started_at", started},
                     {"finished_at", utc_now()},
                     {"assumptions", {{"passed", summary.passed}, {"failing", summary.failing()}}},
                     {"outputs", json::array()}};
    for (const auto& [name, _] : o.files) manifest["outputs"].push_back(name);
    if (o.assertion) manifest["assertion"] = {{"passed", *o.assertion}, {"detail", o.assertion_message}};
    const std::filesystem::path dir(cfg.output);
    io::write_text((dir / "manifest.json").string(), manifest.dump(2) + "\n");
    for (const auto& [name, content] : o.files) io::write_text((dir / name).string(), content);

    out << o.table;
    if (!summary.passed) {
      out << "assumptions not satisfied: ";
      const auto failing = summary.failing();
      for (std::size_t i = 0; i < failing.size(); ++i) out << (i ? "; " : "") << failing[i];
      out << '\n';
    }
    if (o.assertion) {
      out << o.assertion_message;
      if (!*o.assertion) return kAssertionFailed;
    }
    return kOk;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kDivergence;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
}

}  // namespace lsa::cli
