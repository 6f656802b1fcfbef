#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "frango/cli.hpp"
#include "frango/expr.hpp"
#include "frango/fraccalc.hpp"

namespace py = pybind11;

namespace {

double caputo_1d(const std::string& expr, double alpha, double x, double lower, double upper,
                 const std::string& op, int nodes) {
  const frango::Box box(std::vector<frango::Interval>{frango::Interval{lower, upper}});
  const auto f = frango::parse_expression(expr, {"x"}, box.base());
  frango::QuadratureOptions q;
  q.nodes = nodes;
  const frango::FracOrder order(alpha);
  const std::vector<double> pt{x};
  if (op == "caputo") return frango::caputo_left(f, order, 0, pt, box, q);
  if (op == "caputo_quadrature") return frango::caputo_left_quadrature(f, order, 0, pt, box, q);
  if (op == "caputo_right") return frango::caputo_right(f, order, 0, pt, box, q);
  if (op == "rl_integral") return frango::rl_integral(f, order, 0, pt, box, q);
  throw frango::cli::UsageError("unknown operator '" + op + "'");
}

frango::cli::Report run_text(const std::string& config, const std::string& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(config);
  } catch (const nlohmann::json::exception& e) {
    throw frango::cli::UsageError(std::string("config: ") + e.what());
  }
  py::gil_scoped_release release;
  return frango::cli::run(j, base_dir);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Fractional nonholonomic geometry: native core";

  // translators run newest first, so the subclass is registered last
  auto& error = py::register_exception<frango::Error>(m, "FrangoError", PyExc_RuntimeError);
  py::register_exception<frango::cli::UsageError>(m, "UsageError", error.ptr());

  m.def("mittag_leffler", [](double alpha, double z) { return frango::mittag_leffler(frango::FracOrder(alpha), z); },
        py::arg("alpha"), py::arg("z"), "E_alpha(z) by direct summation.");
  m.def("caputo", &caputo_1d, py::arg("expr"), py::arg("alpha"), py::arg("x"), py::arg("lower") = 0.0,
        py::arg("upper") = 1.0, py::arg("operator") = "caputo", py::arg("nodes") = 2048,
        "Fractional operator of a one-variable expression in x on [lower, upper].");
  m.def(
      "run_json",
      [](const std::string& config, const std::string& base_dir) {
        return frango::cli::to_json(run_text(config, base_dir)).dump();
      },
      py::arg("config"), py::arg("base_dir") = ".", "Runs a config (JSON text); returns the structured report as JSON text.");
  m.def(
      "run_summary",
      [](const std::string& config, const std::string& base_dir) {
        std::ostringstream os;
        frango::cli::write_summary(os, run_text(config, base_dir));
        return os.str();
      },
      py::arg("config"), py::arg("base_dir") = ".", "Runs a config; returns the summary rows as CSV text.");
  m.attr("schema_version") = frango::cli::kSchemaVersion;
}
