#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "fiolab/bounds.hpp"
#include "fiolab/cli.hpp"
#include "fiolab/normlab.hpp"
#include "fiolab/oscint.hpp"
#include "fiolab/parallel.hpp"
#include "fiolab/report.hpp"
#include "fiolab/symbols.hpp"

namespace py = pybind11;
using namespace fiolab;

namespace {

using ComplexArray = py::array_t<cplx, py::array::c_style | py::array::forcecast>;

UniformGrid grid_for(const ComplexArray& values, int dim, double halfwidth) {
  if (values.ndim() != dim) throw ValidationError("apply_fio: array rank must equal dim");
  const auto n = static_cast<int>(values.shape(0));
  for (int d = 1; d < dim; ++d) {
    if (values.shape(d) != n) throw ValidationError("apply_fio: grid must be square");
  }
  return make_grid(dim, n, halfwidth);
}

py::array_t<cplx> apply(const std::string& amplitude, const std::string& phase, const ComplexArray& values,
                        double halfwidth, const std::string& mode, bool acknowledge_tail) {
  const int dim = static_cast<int>(values.ndim());
  const UniformGrid grid = grid_for(values, dim, halfwidth);
  SampledField f(grid, std::vector<cplx>(values.data(), values.data() + values.size()));
  OperatorSpec spec{builtin_amplitude(amplitude, dim), builtin_phase(phase, dim), grid, parse_mode(mode),
                    acknowledge_tail};
  SampledField g;
  {
    py::gil_scoped_release release;
    g = apply_fio(spec, f);
  }
  py::array_t<cplx> out(std::vector<py::ssize_t>(values.shape(), values.shape() + dim));
  std::copy(g.values.begin(), g.values.end(), out.mutable_data());
  return out;
}

std::string sweep(const std::string& amplitude, const std::string& phase, int dim, int points, double halfwidth,
                  double q, double r, int j_min, int j_max, int bank, std::uint64_t seed) {
  const UniformGrid grid = make_grid(dim, points, halfwidth);
  SweepOptions options;
  options.j_min = j_min;
  options.j_max = j_max;
  options.norm.bank_size = bank;
  options.norm.seed = seed;
  py::gil_scoped_release release;
  return dump_report(
      to_json(dyadic_norm_sweep(builtin_amplitude(amplitude, dim), builtin_phase(phase, dim), grid, q, r, options)));
}

std::string admissibility(const std::string& tag, int n, double rho, std::optional<double> rho2, double delta, double p,
                          double q1, double q2, std::vector<double> qs, std::optional<double> r,
                          std::optional<double> m, std::optional<double> m1, std::optional<double> m2,
                          std::vector<double> orders) {
  Scenario s;
  s.tag = tag;
  s.n = n;
  s.rho = rho;
  s.rho2 = rho2;
  s.delta = delta;
  s.p = p;
  s.q1 = q1;
  s.q2 = q2;
  s.qs = std::move(qs);
  s.r = r;
  s.m = m;
  s.m1 = m1;
  s.m2 = m2;
  s.orders = std::move(orders);
  return dump_report(to_json(multilinear_admissibility(s)));
}

py::tuple run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = 0;
  {
    py::gil_scoped_release release;
    code = cli::run(args, out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Order thresholds, FIO application and norm sweeps";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());

  m.attr("inf") = kInf;

  m.def("conjugate_exponent", &conjugate_exponent, py::arg("p"));
  m.def("m_bar", &m_bar, py::arg("n"), py::arg("rho"), py::arg("p"), py::arg("q"));
  m.def("m_script", &m_script, py::arg("n"), py::arg("rho"), py::arg("p"), py::arg("q"));
  m.def("general_fio_threshold", &general_fio_threshold, py::arg("n"), py::arg("rho"), py::arg("p"), py::arg("q"));
  m.def("l2_threshold", &l2_threshold, py::arg("n"), py::arg("rho"));
  m.def("psido_threshold", &psido_threshold, py::arg("n"), py::arg("rho"), py::arg("p"), py::arg("q"));
  m.def("scenario_tags", &scenario_tags);

  m.def(
      "linear_thresholds_json",
      [](int n, double rho, double p, double q, std::optional<double> order) {
        return dump_report(to_json(linear_thresholds(n, rho, p, q, order)));
      },
      py::arg("n"), py::arg("rho"), py::arg("p"), py::arg("q"), py::arg("m") = py::none());
  m.def("admissibility_json", &admissibility, py::arg("scenario"), py::arg("n") = 2, py::arg("rho") = 1.0,
        py::arg("rho2") = py::none(), py::arg("delta") = 0.0, py::arg("p") = kInf, py::arg("q1") = 2.0,
        py::arg("q2") = 2.0, py::arg("qs") = std::vector<double>{}, py::arg("r") = py::none(),
        py::arg("m") = py::none(), py::arg("m1") = py::none(), py::arg("m2") = py::none(),
        py::arg("orders") = std::vector<double>{});

  m.def("apply_fio", &apply, py::arg("amplitude"), py::arg("phase"), py::arg("f"), py::arg("halfwidth") = 8.0,
        py::arg("mode") = "auto", py::arg("acknowledge_tail") = false,
        "Applies a built-in operator to samples of f on [-halfwidth, halfwidth)^dim.");
  m.def("sweep_json", &sweep, py::arg("amplitude"), py::arg("phase"), py::arg("dim") = 1, py::arg("points") = 1024,
        py::arg("halfwidth") = 8.0, py::arg("q") = 2.0, py::arg("r") = 2.0, py::arg("j_min") = 2, py::arg("j_max") = 6,
        py::arg("bank") = 16, py::arg("seed") = 1);

  m.def("run_cli", &run_cli, py::arg("args"), "Returns (exit code, stdout, stderr).");
  m.def("worker_threads", &worker_threads);
  m.def("set_worker_threads", &set_worker_threads, py::arg("count"));

#ifdef VERSION_INFO
  m.attr("__version__") = VERSION_INFO;
#else
  m.attr("__version__") = "dev";
#endif
}
