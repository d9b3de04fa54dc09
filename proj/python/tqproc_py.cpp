#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <string>
#include <vector>

#include "tqproc/analytic.hpp"
#include "tqproc/empirical.hpp"
#include "tqproc/errors.hpp"
#include "tqproc/experiments.hpp"
#include "tqproc/fbm.hpp"
#include "tqproc/format.hpp"
#include "tqproc/runner.hpp"

namespace py = pybind11;
using namespace tqproc;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

analytic::HurstIndex hurst(double H) { return analytic::HurstIndex(H); }

Array to_array(std::span<const double> v, std::vector<py::ssize_t> shape) {
  Array out(shape);
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

fbm::GridSpec make_grid(py::object points, double T, std::size_t M, bool include_zero) {
  if (points.is_none()) return fbm::GridSpec::uniform(T, M, include_zero);
  return fbm::GridSpec::from_points(points.cast<std::vector<double>>(), T);
}

py::object json_to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

struct PyEnsemble {
  std::shared_ptr<fbm::Ensemble> ens;
  std::shared_ptr<empirical::SortedSlices> slices;

  explicit PyEnsemble(fbm::Ensemble e)
      : ens(std::make_shared<fbm::Ensemble>(std::move(e))),
        slices(std::make_shared<empirical::SortedSlices>(*ens)) {}
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Time dependent empirical and quantile processes of fBm ensembles";
  m.attr("__version__") = std::string(kVersion);

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("std_normal_cdf", &analytic::std_normal_cdf, py::arg("x"));
  m.def("std_normal_pdf", &analytic::std_normal_pdf, py::arg("x"));
  m.def("std_normal_quantile", &analytic::std_normal_quantile, py::arg("alpha"));
  m.def("bivariate_normal_cdf", &analytic::bivariate_normal_cdf, py::arg("x"), py::arg("y"), py::arg("rho"));
  m.def("marginal_cdf", [](double t, double x, double H) { return analytic::marginal_cdf(t, x, hurst(H)); },
        py::arg("t"), py::arg("x"), py::arg("H"));
  m.def("density_quantile",
        [](double t, double a, double H) { return analytic::density_quantile(t, a, hurst(H)); }, py::arg("t"),
        py::arg("alpha"), py::arg("H"));
  m.def("true_quantile", [](double t, double a, double H) { return analytic::true_quantile(t, a, hurst(H)); },
        py::arg("t"), py::arg("alpha"), py::arg("H"));
  m.def("fbm_covariance", [](double s, double t, double H) { return analytic::fbm_covariance(s, t, hurst(H)); },
        py::arg("s"), py::arg("t"), py::arg("H"));
  m.def("limit_kernel_G",
        [](double s, double x, double t, double y, double H) {
          return analytic::limit_kernel_G(s, x, t, y, hurst(H)).value;
        },
        py::arg("s"), py::arg("x"), py::arg("t"), py::arg("y"), py::arg("H"));
  m.def("quantile_kernel_K",
        [](double t1, double a1, double t2, double a2, double H, bool weighted) {
          return analytic::quantile_kernel_K(t1, a1, t2, a2, hurst(H), weighted).value;
        },
        py::arg("t1"), py::arg("alpha1"), py::arg("t2"), py::arg("alpha2"), py::arg("H"),
        py::arg("weighted") = false);
  m.def("swanson_kernel", [](double t1, double t2) { return analytic::swanson_kernel(t1, t2).value; },
        py::arg("t1"), py::arg("t2"));
  m.def("lil_constants",
        [](double gamma, double T, double kappa) {
          const auto c = analytic::lil_constants(gamma, T, kappa);
          return py::make_tuple(c.sigma, c.sigma_kappa);
        },
        py::arg("gamma"), py::arg("T"), py::arg("kappa"));
  m.def("tie_bound_m", [](double H) { return analytic::tie_bound_m(hurst(H)); }, py::arg("H"));
  m.def("modulus_gauge", [](double u, double H) { return analytic::modulus_gauge(u, hurst(H)); }, py::arg("u"),
        py::arg("H"));
  m.def("rate_exponents",
        [](double H, double kappa, std::optional<double> a1, std::optional<double> a2) {
          const auto r = analytic::rate_exponents(hurst(H), kappa, a1, a2);
          py::dict d;
          d["nu0"] = r.nu0;
          d["H0"] = r.H0;
          d["tau1_0"] = r.tau1_0;
          d["tau_of_alpha"] = r.tau_of_alpha;
          d["tau2"] = r.tau2;
          d["tau1_prime"] = r.tau1_prime;
          d["tau_prime_of_alpha"] = r.tau_prime_of_alpha;
          return d;
        },
        py::arg("H"), py::arg("kappa"), py::arg("alpha1") = py::none(), py::arg("alpha2") = py::none());
  m.def("thresholds",
        [](double H, double n, double delta, double eta, double C, double c1) {
          const auto t = analytic::thresholds(hurst(H), {n, delta, eta, C, c1});
          py::dict d;
          d["gamma_n"] = t.gamma_n;
          d["a_n"] = t.a_n;
          d["eps_n"] = t.eps_n;
          d["a_below_gamma"] = t.a_below_gamma;
          return d;
        },
        py::arg("H"), py::arg("n"), py::arg("delta"), py::arg("eta"), py::arg("C") = 1.0, py::arg("c1") = 1.0);

  m.def("sample_path",
        [](double H, std::string sampler, std::uint64_t seed, py::object points, double T, std::size_t M,
           bool include_zero) {
          const auto grid = make_grid(points, T, M, include_zero);
          const auto s = fbm::make_sampler(grid, hurst(H), fbm::sampler_id_from_string(sampler));
          std::vector<double> v(grid.size());
          s->sample(seed, v);
          return to_array(v, {static_cast<py::ssize_t>(v.size())});
        },
        py::arg("H"), py::arg("sampler") = "circulant", py::arg("seed") = 0, py::arg("points") = py::none(),
        py::arg("T") = 2.0, py::arg("M") = 64, py::arg("include_zero") = true);

  py::class_<PyEnsemble>(m, "Ensemble")
      .def(py::init([](std::size_t n, double H, std::string sampler, std::uint64_t seed, py::object points,
                       double T, std::size_t M, bool include_zero, unsigned threads) {
             const auto grid = make_grid(points, T, M, include_zero);
             return PyEnsemble(fbm::make_ensemble(n, grid, hurst(H), fbm::sampler_id_from_string(sampler), seed,
                                                  threads));
           }),
           py::arg("n"), py::arg("H"), py::arg("sampler") = "circulant", py::arg("seed") = 0,
           py::arg("points") = py::none(), py::arg("T") = 2.0, py::arg("M") = 64, py::arg("include_zero") = true,
           py::arg("threads") = 1)
      .def_property_readonly("n", [](const PyEnsemble& e) { return e.ens->size(); })
      .def_property_readonly("H", [](const PyEnsemble& e) { return e.ens->hurst().value(); })
      .def_property_readonly("times",
                             [](const PyEnsemble& e) {
                               const auto p = e.ens->grid().points();
                               return to_array(p, {static_cast<py::ssize_t>(p.size())});
                             })
      .def_property_readonly("values",
                             [](const PyEnsemble& e) {
                               return to_array(e.ens->data(), {static_cast<py::ssize_t>(e.ens->size()),
                                                               static_cast<py::ssize_t>(e.ens->grid().size())});
                             })
      .def_property_readonly("warnings", [](const PyEnsemble& e) { return e.ens->warnings(); })
      .def("empirical_cdf", [](const PyEnsemble& e, double t, double x) { return empirical::empirical_cdf(*e.slices, t, x); },
           py::arg("t"), py::arg("x"))
      .def("empirical_process",
           [](const PyEnsemble& e, double t, double x) { return empirical::empirical_process(*e.slices, t, x); },
           py::arg("t"), py::arg("x"))
      .def("empirical_quantile",
           [](const PyEnsemble& e, double t, double a) { return empirical::empirical_quantile(*e.slices, t, a); },
           py::arg("t"), py::arg("alpha"))
      .def("quantile_process",
           [](const PyEnsemble& e, double t, double a) { return empirical::quantile_process(*e.slices, t, a); },
           py::arg("t"), py::arg("alpha"))
      .def("tie_stats",
           [](const PyEnsemble& e, std::vector<double> times, std::vector<double> levels, double rho) {
             const auto ts = empirical::tie_stats(*e.slices, times, empirical::LevelGrid::from_levels(rho, levels));
             py::dict d;
             d["m"] = ts.m_bound;
             d["violations"] = ts.violations;
             d["max_violation"] = ts.max_violation;
             d["delta_n"] = to_array(ts.delta_n, {static_cast<py::ssize_t>(times.size()),
                                                  static_cast<py::ssize_t>(levels.size())});
             return d;
           },
           py::arg("times"), py::arg("levels"), py::arg("rho") = 0.1)
      .def("bk_remainder",
           [](const PyEnsemble& e, std::vector<double> times, std::vector<double> levels, bool weighted, double rho) {
             const auto f = empirical::bk_remainder_field(*e.slices, times, empirical::LevelGrid::from_levels(rho, levels),
                                                          weighted, times.empty() ? 0.0 : times.front());
             return py::make_tuple(f.sup_norm, to_array(f.values, {static_cast<py::ssize_t>(times.size()),
                                                                   static_cast<py::ssize_t>(levels.size())}));
           },
           py::arg("times"), py::arg("levels"), py::arg("weighted") = false, py::arg("rho") = 0.1)
      .def("weighted_sup_empirical",
           [](const PyEnsemble& e, double kappa, double T) { return empirical::weighted_sup_empirical(*e.slices, kappa, T); },
           py::arg("kappa"), py::arg("T"));

  m.def("loglog_fit",
        [](std::vector<double> ns, std::vector<double> stats) {
          const auto f = experiments::loglog_fit(ns, stats);
          py::dict d;
          d["slope"] = f.slope;
          d["intercept"] = f.intercept;
          d["stderr"] = f.stderr_slope;
          d["r_squared"] = f.r_squared;
          return d;
        },
        py::arg("ns"), py::arg("stats"));
  m.def("classical_bk_sup", [](std::vector<double> u) { return experiments::classical_bk_sup(u); }, py::arg("uniforms"));

  m.def("parse_config",
        [](const std::string& text) { return json_to_py(runner::to_json(runner::parse_config(text))); },
        py::arg("text"), "Validated config with every default filled in.");
  m.def("run_config",
        [](const std::string& text) {
          const auto cfg = runner::parse_config(text);
          experiments::StudyResult r;
          {
            py::gil_scoped_release release;
            r = runner::execute(cfg);
          }
          return json_to_py(experiments::to_json(r));
        },
        py::arg("text"), "Runs a study in memory and returns its result document.");
  m.def("kernel_row",
        [](std::string kind, double t1, double a1, double t2, double a2, double H, std::optional<double> kappa) {
          runner::KernelRequest r;
          r.kind = analytic::kernel_kind_from_string(kind);
          r.t1 = t1;
          r.a1 = a1;
          r.t2 = t2;
          r.a2 = a2;
          r.kappa = kappa;
          return runner::kernel_row(r, H);
        },
        py::arg("kind"), py::arg("t1"), py::arg("a1"), py::arg("t2"), py::arg("a2"), py::arg("H") = 0.5,
        py::arg("kappa") = py::none());
}
