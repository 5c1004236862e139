#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "levelcross/crossings.hpp"
#include "levelcross/errors.hpp"
#include "levelcross/kernels.hpp"
#include "levelcross/montecarlo.hpp"
#include "levelcross/special.hpp"

namespace py = pybind11;
using namespace lcx;

namespace {

CrossingMode mode_of(const std::string& s) { return parse_mode(s); }

std::optional<QuadratureSpec> spec_for(const Kernel& k, std::optional<double> rel_tol, std::optional<double> abs_tol) {
  if (!rel_tol && !abs_tol) return std::nullopt;
  QuadratureSpec q = default_quadrature(k);
  if (rel_tol) q.rel_tol = *rel_tol;
  if (abs_tol) q.abs_tol = *abs_tol;
  return q;
}

py::dict stats_dict(const CrossingStats& s) {
  py::dict d;
  d["mode"] = mode_name(s.mode);
  d["u"] = s.u;
  d["asymptotic"] = s.asymptotic;
  d["horizon"] = s.horizon;
  d["mean"] = s.mean;
  d["variance"] = s.variance;
  d["fano"] = s.asymptotic ? s.fano : s.variance / s.mean;
  d["integral"] = s.integral;
  d["integral_error"] = s.integral_error;
  d["evaluations"] = s.evaluations;
  d["converged"] = s.converged;
  d["clamped"] = s.clamped;
  d["diagnostic"] = s.diagnostic;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Level-crossing count statistics of stationary Gaussian processes";

  auto base = py::register_exception<Error>(m, "LevelcrossError", PyExc_RuntimeError);
  py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<ValidityError>(m, "ValidityError", base.ptr());
  py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());
  py::register_exception<SimulationError>(m, "SimulationError", base.ptr());

  py::class_<KernelDerivatives>(m, "KernelDerivatives")
      .def_readonly("r", &KernelDerivatives::r)
      .def_readonly("p", &KernelDerivatives::p)
      .def_readonly("q", &KernelDerivatives::q)
      .def_readonly("t", &KernelDerivatives::t)
      .def("__repr__", [](const KernelDerivatives& d) {
        return "KernelDerivatives(r=" + std::to_string(d.r) + ", p=" + std::to_string(d.p) + ", q=" + std::to_string(d.q) + ")";
      });

  py::class_<Kernel>(m, "Kernel")
      .def("eval", &Kernel::eval, py::arg("t"))
      .def_property_readonly("family", [](const Kernel& k) { return family_name(k.family()); })
      .def_property_readonly("r0", &Kernel::r0)
      .def_property_readonly("q0", &Kernel::q0)
      .def_property_readonly("tau_slow", &Kernel::tau_slow)
      .def_property_readonly("tau_fast", &Kernel::tau_fast)
      .def_property_readonly("amplitude", &Kernel::amplitude)
      .def_property_readonly("timescale", &Kernel::timescale)
      .def("validity", [](const Kernel& k) {
        py::dict d;
        for (const auto& c : check_validity(k).checks) d[py::str(c.name)] = c.pass;
        return d;
      })
      .def("__repr__", &Kernel::describe);

  m.def("sdho", &make_sdho, py::arg("omega0"), py::arg("zeta"), py::arg("theta"));
  m.def("ou_mean_revert", [](double s, double tf, double te) { return make_ou_mean_revert(s, tf, te); },
        py::arg("sigma"), py::arg("tau_f"), py::arg("tau_e"));
  m.def("rational_quadratic", &make_rational_quadratic, py::arg("sigma"), py::arg("tau"), py::arg("alpha"));
  m.def("squared_exponential", &make_squared_exponential, py::arg("sigma"), py::arg("tau"));
  m.def("ou_to_sdho", [](const Kernel& ou) { return Kernel(map_ou_to_sdho(std::get<OuParams>(ou.params()))); },
        py::arg("ou"), "Overdamped oscillator with the same correlation function as an OU-driven kernel.");

  m.def("owens_t", py::overload_cast<double, double>(&owens_t), py::arg("h"), py::arg("a"));
  m.def("erf", py::overload_cast<double>(&lcx::erf), py::arg("x"));
  m.def("erfc", py::overload_cast<double>(&lcx::erfc), py::arg("x"));

  m.def("abg_params", [](const Kernel& k, double u, double t) {
        const auto c = abg_params(k, u, t);
        py::dict d;
        d["alpha"] = c.alpha;
        d["beta"] = c.beta;
        d["gamma"] = c.gamma;
        d["delta"] = c.delta;
        d["det"] = c.det;
        return d;
      }, py::arg("kernel"), py::arg("u"), py::arg("t"));
  m.def("canonical_integrals", [](double a, double b, double g) {
        const auto c = canonical_integrals(a, b, g);
        return py::make_tuple(c.up, c.total);
      }, py::arg("alpha"), py::arg("beta"), py::arg("gamma"));

  m.def("mean_rate", [](const Kernel& k, double u, const std::string& mode) { return mean_rate(k, u, mode_of(mode)); },
        py::arg("kernel"), py::arg("u"), py::arg("mode") = "up");
  m.def("mean_count", [](const Kernel& k, double u, double T, const std::string& mode) { return mean_count(k, u, T, mode_of(mode)); },
        py::arg("kernel"), py::arg("u"), py::arg("horizon"), py::arg("mode") = "up");
  m.def("integrand", [](const Kernel& k, double u, double t, const std::string& mode) { return integrand(k, u, t, mode_of(mode)); },
        py::arg("kernel"), py::arg("u"), py::arg("t"), py::arg("mode") = "up");
  m.def("variance_count",
        [](const Kernel& k, double u, double T, const std::string& mode, std::optional<double> rel, std::optional<double> abs) {
          py::gil_scoped_release nogil;
          auto s = variance_count(k, u, T, mode_of(mode), spec_for(k, rel, abs));
          py::gil_scoped_acquire gil;
          return stats_dict(s);
        },
        py::arg("kernel"), py::arg("u"), py::arg("horizon"), py::arg("mode") = "up", py::arg("rel_tol") = py::none(),
        py::arg("abs_tol") = py::none());
  m.def("variance_rate",
        [](const Kernel& k, double u, const std::string& mode, std::optional<double> rel, std::optional<double> abs) {
          py::gil_scoped_release nogil;
          auto s = variance_rate_asymptotic(k, u, mode_of(mode), spec_for(k, rel, abs));
          py::gil_scoped_acquire gil;
          return stats_dict(s);
        },
        py::arg("kernel"), py::arg("u"), py::arg("mode") = "up", py::arg("rel_tol") = py::none(), py::arg("abs_tol") = py::none());
  m.def("fano", [](const Kernel& k, double u, const std::string& mode) {
        py::gil_scoped_release nogil;
        return fano(k, u, mode_of(mode));
      }, py::arg("kernel"), py::arg("u"), py::arg("mode") = "up");
  m.def("zero_level_stats", [](const Kernel& k, std::optional<double> T, const std::string& mode) {
        return stats_dict(zero_level_stats(k, T, mode_of(mode)));
      }, py::arg("kernel"), py::arg("horizon") = py::none(), py::arg("mode") = "up");
  m.def("dimensionless_fano", [](const Kernel& k, double psi, const std::string& mode) {
        return dimensionless_fano(k.shape(), psi, mode_of(mode));
      }, py::arg("kernel"), py::arg("psi"), py::arg("mode") = "up", "Fano factor at u = psi * amplitude; depends only on the kernel shape.");

  m.def("count_crossings", [](const std::vector<double>& x, double u, const std::string& mode) {
        return count_crossings(x, u, mode_of(mode));
      }, py::arg("path"), py::arg("u"), py::arg("mode") = "up");
  m.def("simulate",
        [](const Kernel& k, double u, double horizon, std::optional<double> dt, long trials, std::uint64_t seed,
           const std::string& mode, int threads) {
          SimConfig c(k);
          c.u = u;
          c.horizon = horizon;
          c.dt = dt ? *dt : default_dt(k);
          c.trials = trials;
          c.seed = seed;
          c.mode = mode_of(mode);
          c.threads = threads;
          SimEstimate s;
          {
            py::gil_scoped_release nogil;
            s = estimate_stats(c);
          }
          py::dict d;
          d["mean"] = s.mean;
          d["variance"] = s.variance;
          d["fano"] = s.fano;
          d["mean_se"] = s.mean_se;
          d["variance_se"] = s.variance_se;
          d["fano_se"] = s.fano_se;
          d["trials"] = s.trials;
          d["counts"] = s.counts;
          return d;
        },
        py::arg("kernel"), py::arg("u") = 0.0, py::arg("horizon") = 120.0, py::arg("dt") = py::none(),
        py::arg("trials") = 5000, py::arg("seed") = 1, py::arg("mode") = "up", py::arg("threads") = 0);
  m.def("sample_path", [](const Kernel& k, double horizon, std::optional<double> dt, std::uint64_t trial, std::uint64_t seed) {
        SimConfig c(k);
        c.horizon = horizon;
        c.dt = dt ? *dt : default_dt(k);
        c.seed = seed;
        std::vector<double> x;
        make_simulator(c)->sample(trial, x);
        return x;
      }, py::arg("kernel"), py::arg("horizon"), py::arg("dt") = py::none(), py::arg("trial") = 0, py::arg("seed") = 1);
  m.def("bruteforce_integrand", [](const Kernel& k, double u, double t, const std::string& mode) {
        return bruteforce_integrand(k, u, t, mode_of(mode)).value;
      }, py::arg("kernel"), py::arg("u"), py::arg("t"), py::arg("mode") = "up");
}
