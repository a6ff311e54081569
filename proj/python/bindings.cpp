#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lsainfer/bootstrap.hpp"
#include "lsainfer/covariance.hpp"
#include "lsainfer/engine.hpp"
#include "lsainfer/errors.hpp"
#include "lsainfer/gaussapprox.hpp"
#include "lsainfer/model.hpp"
#include "lsainfer/schedule.hpp"
#include "lsainfer/series.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace lsa;

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

RowMat stack_rows(const std::vector<Vec>& rows) {
  if (rows.empty()) return RowMat();
  RowMat out(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return out;
}

py::dict series_dict(const DistanceSeries& s) {
  std::vector<std::uint64_t> n;
  std::vector<double> dist, se;
  for (const auto& p : s.points) {
    n.push_back(p.n);
    dist.push_back(p.distance);
    se.push_back(p.standard_error);
  }
  return py::dict("n"_a = n, "distance"_a = dist, "stderr"_a = se, "notes"_a = s.notes);
}

ReferenceLaw reference_from(const std::string& name) {
  if (name == "sigma_n") return ReferenceLaw::sigma_n;
  if (name == "sigma_inf") return ReferenceLaw::sigma_inf;
  if (name == "standard_normal") return ReferenceLaw::standard_normal;
  throw ConfigError("reference", "expected sigma_n, sigma_inf or standard_normal");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Linear stochastic approximation with Polyak-Ruppert averaging and multiplier bootstrap";
  m.attr("__version__") = LSAINFER_VERSION;

  static py::exception<Error> base(m, "LsaError", PyExc_RuntimeError);
  static py::exception<ConfigError> config(m, "ConfigError", base.ptr());
  static py::exception<DivergenceError> divergence(m, "DivergenceError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::set_error(config, e.what());
    } catch (const DivergenceError& e) {
      py::set_error(divergence, e.what());
    } catch (const Error& e) {
      py::set_error(base, e.what());
    }
  });

  py::class_<StepSchedule>(m, "StepSchedule")
      .def(py::init([](double c0, double gamma, std::uint64_t k0) {
             StepSchedule s{c0, gamma, k0};
             s.validate();
             return s;
           }),
           "c0"_a, "gamma"_a, "k0"_a = 0)
      .def_readonly("c0", &StepSchedule::c0)
      .def_readonly("gamma", &StepSchedule::gamma)
      .def_readonly("k0", &StepSchedule::k0)
      .def("__call__", &StepSchedule::operator(), "k"_a)
      .def("__repr__", [](const StepSchedule& s) {
        return "StepSchedule(c0=" + std::to_string(s.c0) + ", gamma=" + std::to_string(s.gamma) +
               ", k0=" + std::to_string(s.k0) + ")";
      });

  py::class_<LsaInstance, std::shared_ptr<LsaInstance>>(m, "Instance")
      .def_static("random_hurwitz",
                  [](int d, std::uint64_t seed, double lo, double hi, double noise_scale) {
                    return std::make_shared<LsaInstance>(make_random_hurwitz(d, seed, lo, hi, noise_scale));
                  },
                  "d"_a, "seed"_a = 0, "lo"_a = 0.5, "hi"_a = 1.5, "noise_scale"_a = 1.0)
      .def_static("lower_bound_1d",
                  [](std::uint64_t seed) { return std::make_shared<LsaInstance>(make_gaussian_identity_1d(seed)); },
                  "seed"_a = 0)
      .def_static("from_atoms",
                  [](const std::vector<std::pair<Mat, Vec>>& atoms, std::vector<double> probs) {
                    std::vector<Observation> obs;
                    for (const auto& [A, b] : atoms) obs.push_back({A, b});
                    return std::make_shared<LsaInstance>(LsaInstance::from_atoms(std::move(obs), std::move(probs)));
                  },
                  "atoms"_a, "probabilities"_a)
      .def_property_readonly("dim", &LsaInstance::dim)
      .def_property_readonly("Abar", &LsaInstance::Abar)
      .def_property_readonly("bbar", &LsaInstance::bbar)
      .def_property_readonly("theta_star", &LsaInstance::theta_star)
      .def_property_readonly("Sigma_eps", &LsaInstance::Sigma_eps)
      .def_property_readonly("bA", &LsaInstance::bA)
      .def_property_readonly("eps_sup", &LsaInstance::eps_sup);

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("n", &Trajectory::n)
      .def_readonly("seed", &Trajectory::seed)
      .def_readonly("average", &Trajectory::average)
      .def_readonly("theta0", &Trajectory::theta0)
      .def_property_readonly("iterates", [](const Trajectory& t) { return stack_rows(t.iterates); })
      .def_property_readonly("noises", [](const Trajectory& t) { return stack_rows(t.noises); })
      .def("reconstruction_residual",
           [](const Trajectory& t, int L) { return reconstruction_residual(t, error_decompose(t, L)); }, "L"_a = 2)
      .def("to_csv", [](const Trajectory& t) { return trajectory_csv(t); });

  m.def("run",
        [](std::shared_ptr<LsaInstance> inst, const StepSchedule& s, std::uint64_t n, std::optional<Vec> theta0,
           std::uint64_t seed) {
          const Vec start = theta0 ? *theta0 : Vec::Zero(inst->dim());
          py::gil_scoped_release release;
          return lsa_run(std::shared_ptr<const LsaInstance>(inst), s, n, start, seed);
        },
        "instance"_a, "schedule"_a, "n"_a, "theta0"_a = py::none(), "seed"_a = 0,
        "Runs n - 1 LSA steps from theta0 (default zero) and stores the trajectory.");

  m.def("stability_constants", [](const Mat& Abar, double bA) {
    const auto c = stability_constants(Abar, bA);
    return py::dict("Q"_a = c.Q, "a"_a = c.a, "kappa_Q"_a = c.kappa_Q, "alpha_inf"_a = c.alpha_inf,
                    "b_Q"_a = c.b_Q);
  }, "Abar"_a, "bA"_a);
  m.def("lyapunov_solve", &lyapunov_solve, "Abar"_a, "P"_a);

  m.def("sigma_n", &sigma_n, "Abar"_a, "Sigma_eps"_a, "schedule"_a, "n"_a);
  m.def("sigma_inf", &sigma_inf, "Abar"_a, "Sigma_eps"_a);

  m.def("bootstrap",
        [](const Trajectory& t, std::size_t M, const std::string& weights, std::uint64_t seed, unsigned workers) {
          const auto kind = weight_kind_from_string(weights);
          BootstrapEnsemble e;
          {
            py::gil_scoped_release release;
            e = bootstrap_run(t, M, WeightScheme{kind}, seed, Parallelism{workers});
          }
          return py::dict("base"_a = e.base_average, "replicates"_a = stack_rows(e.averages));
        },
        "trajectory"_a, "M"_a, "weights"_a = "two_point", "seed"_a = 0, "workers"_a = 1,
        "Multiplier-bootstrap replicates of the averaged iterate on the trajectory's observations.");

  m.def("confidence_sets",
        [](const Vec& center, const Mat& replicates, double level, std::optional<Vec> theta_star) {
          const Mat D = (replicates.rowwise() - center.transpose()).transpose();
          const auto r = confidence_sets(center, D, level, theta_star);
          py::dict out("lo"_a = r.lo, "hi"_a = r.hi, "sup_radius"_a = r.sup_radius,
                       "ellipsoid_radius"_a = r.ellipsoid_radius, "degenerate"_a = r.degenerate);
          if (r.contains_target) out["contains_target"] = *r.contains_target;
          return out;
        },
        "center"_a, "replicates"_a, "level"_a = 0.9, "theta_star"_a = py::none());

  m.def("coverage",
        [](std::shared_ptr<LsaInstance> inst, const StepSchedule& s, std::uint64_t n, std::size_t M, std::uint64_t R,
           double level, std::uint64_t seed, const std::string& weights, unsigned workers) {
          CoverageOptions o;
          o.weights = weight_kind_from_string(weights);
          o.par = Parallelism{workers};
          CoverageResult r;
          {
            py::gil_scoped_release release;
            r = coverage_experiment(*inst, s, n, M, R, level, seed, o);
          }
          return py::dict("coordinate"_a = r.coordinate_coverage, "coordinate_stderr"_a = r.coordinate_stderr,
                          "box"_a = r.box_coverage, "sup"_a = r.sup_coverage, "ellipsoid"_a = r.ellipsoid_coverage,
                          "replications"_a = r.replications, "divergences"_a = r.divergences);
        },
        "instance"_a, "schedule"_a, "n"_a, "M"_a = 200, "R"_a = 500, "level"_a = 0.9, "seed"_a = 0,
        "weights"_a = "two_point", "workers"_a = 1);

  m.def("clt_rates",
        [](std::shared_ptr<LsaInstance> inst, const StepSchedule& s, const std::vector<std::uint64_t>& n_grid,
           std::uint64_t R, std::size_t K, std::uint64_t seed, const std::string& reference, unsigned workers) {
          CltOptions o;
          o.par = Parallelism{workers};
          const auto ref = reference_from(reference);
          DistanceSeries out;
          {
            py::gil_scoped_release release;
            out = clt_rate_experiment(*inst, s, n_grid, R, K, seed, ref, o);
          }
          return series_dict(out);
        },
        "instance"_a, "schedule"_a, "n_grid"_a, "R"_a = 1000, "K"_a = 32, "seed"_a = 0,
        "reference"_a = "sigma_inf", "workers"_a = 1);

  m.def("covariance_gap", [](const Mat& Abar, const Mat& Sigma_eps, const StepSchedule& s,
                             const std::vector<std::uint64_t>& n_grid) {
    return series_dict(covariance_gap_series(Abar, Sigma_eps, s, n_grid));
  }, "Abar"_a, "Sigma_eps"_a, "schedule"_a, "n_grid"_a);

  m.def("rate_fit", [](const std::vector<double>& x, const std::vector<double>& y) {
    const auto f = rate_fit(x, y);
    return py::dict("slope"_a = f.slope, "intercept"_a = f.intercept, "r_squared"_a = f.r_squared,
                    "slope_stderr"_a = f.slope_stderr);
  }, "n"_a, "distance"_a);

  m.def("kolmogorov_normal_vs_normal_1d", &kolmogorov_normal_vs_normal_1d, "sigma"_a);
  m.def("lower_bound_sigma_n_1d", &lower_bound_sigma_n_1d, "schedule"_a, "n"_a);
  m.def("halfspace_distance",
        [](const Mat& samples, const Mat& cov, std::size_t K, std::uint64_t seed) {
          return halfspace_distance(samples, cov, direction_set(static_cast<int>(cov.rows()), K, seed)).distance;
        },
        "samples"_a, "reference_cov"_a, "K"_a = 32, "seed"_a = 0);
}
