#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "levy/analytic.hpp"
#include "levy/cli.hpp"
#include "levy/density.hpp"
#include "levy/error.hpp"
#include "levy/model.hpp"
#include "levy/parallel.hpp"
#include "levy/simulate.hpp"
#include "levy/validate.hpp"

namespace py = pybind11;
using namespace levy;

namespace {

ValidatedParams make(double m, double lambda, const JumpLaw& jump, double x) {
  ModelParams p;
  p.m = m;
  p.lambda = lambda;
  p.jump = jump;
  p.x = x;
  return validate_params(p);
}

py::dict as_dict(const DensityEstimate& e) {
  py::dict d;
  d["value"] = e.value;
  d["std_error"] = e.std_error;
  d["n_paths"] = e.n_paths;
  return d;
}

}  // namespace

PYBIND11_MODULE(_levy_default, mod) {
  mod.doc() = "First-passage densities of jump diffusions";

  py::register_exception<Error>(mod, "LevyError", PyExc_ValueError);

  mod.def("version", &version);
  mod.def("set_thread_count", &set_thread_count, py::arg("n"));

  py::class_<JumpLaw>(mod, "JumpLaw")
      .def_static("point_mass", &JumpLaw::point_mass, py::arg("a"))
      .def_static("exponential", &JumpLaw::exponential, py::arg("rate"))
      .def_static("negated_exponential", &JumpLaw::negated_exponential, py::arg("rate"))
      .def_static("gaussian", &JumpLaw::gaussian, py::arg("mu"), py::arg("sigma"))
      .def_static("two_point", &JumpLaw::two_point, py::arg("a"), py::arg("p"), py::arg("b"))
      .def_static("empirical", &JumpLaw::empirical, py::arg("sample"))
      .def("cdf", &JumpLaw::cdf)
      .def("cdf_left", &JumpLaw::cdf_left)
      .def("atom", &JumpLaw::atom)
      .def("mean", &JumpLaw::mean)
      .def("atomless", &JumpLaw::atomless)
      .def("__repr__", &JumpLaw::describe);

  py::class_<ValidatedParams>(mod, "Params")
      .def(py::init(&make), py::arg("m"), py::arg("lambda_"), py::arg("jump"), py::arg("x"))
      .def_property_readonly("m", &ValidatedParams::m)
      .def_property_readonly("lambda_", &ValidatedParams::lambda)
      .def_property_readonly("barrier", &ValidatedParams::barrier)
      .def("with_barrier", &ValidatedParams::with_barrier, py::arg("z"))
      .def("default_certain", [](const ValidatedParams& p) { return is_default_certain(p.get()); });

  mod.def("tilde_f", &tilde_f, py::arg("u"), py::arg("z"), py::arg("m"));
  mod.def("tilde_defect", &tilde_defect, py::arg("z"), py::arg("m"));
  mod.def("tilde_survival", &tilde_survival, py::arg("t"), py::arg("z"), py::arg("m"));
  mod.def("tilde_f_bound", &tilde_f_bound, py::arg("t"), py::arg("m"));
  mod.def("f_at_zero", &f_at_zero, py::arg("params"));
  mod.def("lemma5_A", [](double mu, double sigma, double m, double t) {
    auto v = lemma5_A(mu, sigma, m, t);
    return py::make_tuple(v.value, v.bound);
  }, py::arg("mu"), py::arg("sigma"), py::arg("m"), py::arg("t"));
  mod.def("lemma6_bound", &lemma6_bound, py::arg("lambda_"), py::arg("t"));

  mod.def("estimate_f", [](const ValidatedParams& p, double t, std::size_t n, double dt, std::uint64_t seed) {
    py::gil_scoped_release release;
    auto e = estimate_f(p, t, n, dt, seed);
    py::gil_scoped_acquire acquire;
    return as_dict(e);
  }, py::arg("params"), py::arg("t"), py::arg("n_paths"), py::arg("grid_dt"), py::arg("seed"));
  mod.def("estimate_G", [](const ValidatedParams& p, double t, double horizon, std::size_t n, double dt,
                           std::uint64_t seed) {
    py::gil_scoped_release release;
    auto e = estimate_G(p, t, horizon, n, dt, seed);
    py::gil_scoped_acquire acquire;
    return as_dict(e);
  }, py::arg("params"), py::arg("t"), py::arg("horizon"), py::arg("n_paths"), py::arg("grid_dt"), py::arg("seed"));
  mod.def("defect_horizon", &defect_horizon, py::arg("params"));

  mod.def("sample_tau", [](const ValidatedParams& p, double horizon, double dt, std::uint64_t seed) {
    Stream rng(seed);
    auto s = sample_tau(p, horizon, dt, rng);
    return py::make_tuple(s.tau, s.crossed_at_jump);
  }, py::arg("params"), py::arg("horizon"), py::arg("grid_dt"), py::arg("seed"));

  mod.def("bounds_suite", [](const ValidatedParams& p, std::uint64_t seed) {
    BoundsReport report;
    {
      py::gil_scoped_release release;
      report = bounds_suite(p, seed);
    }
    py::list out;
    for (const auto& c : report.checks) {
      py::dict d;
      d["name"] = c.name;
      d["passed"] = c.passed;
      d["value"] = c.value;
      d["bound"] = c.bound;
      d["std_error"] = c.std_error;
      d["cases"] = c.cases;
      out.append(d);
    }
    return out;
  }, py::arg("params"), py::arg("seed"));
  mod.def("jump_time_ratio_mean", [](double lambda, double t, std::size_t n, std::uint64_t seed) {
    return as_dict(jump_time_ratio_mean(lambda, t, n, seed));
  }, py::arg("lambda_"), py::arg("t"), py::arg("n"), py::arg("seed"));
}
