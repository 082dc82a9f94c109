#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>

#include "stefan/analysis.hpp"
#include "stefan/donsker.hpp"
#include "stefan/error.hpp"
#include "stefan/particle.hpp"
#include "stefan/runner.hpp"
#include "stefan/version.hpp"

namespace py = pybind11;
using namespace stefan;

namespace {

std::vector<double> to_vector(const LossCurve& c) { return {c.values().begin(), c.values().end()}; }

}  // namespace

PYBIND11_MODULE(_stefan, m) {
  m.doc() = "Donsker tree and particle solvers for the supercooled Stefan problem";
  m.attr("__version__") = std::string(kVersion);

  // Translators run newest first, so the base class goes first.
  py::register_exception<Error>(m, "StefanError", PyExc_RuntimeError);
  py::register_exception<ConfigInvalid>(m, "ConfigInvalid", PyExc_ValueError);
  py::register_exception<OutputUnwritable>(m, "OutputUnwritable", PyExc_OSError);

  py::enum_<InitMode>(m, "InitMode")
      .value("CellMass", InitMode::CellMass)
      .value("DensitySample", InitMode::DensitySample);
  py::enum_<donsker::Mode>(m, "Mode").value("Implicit", donsker::Mode::Implicit).value("Explicit", donsker::Mode::Explicit);
  py::enum_<particle::Scheme>(m, "Scheme")
      .value("Implicit", particle::Scheme::Implicit)
      .value("Explicit", particle::Scheme::Explicit);

  py::class_<InitialLaw>(m, "InitialLaw")
      .def_static("gamma", &InitialLaw::gamma, py::arg("shape"), py::arg("scale"))
      .def_static("poly_cutoff", &InitialLaw::poly_cutoff, py::arg("alpha"), py::arg("exponent"),
                  py::arg("coefficient"))
      .def_static("uniform", &InitialLaw::uniform, py::arg("lo"), py::arg("hi"))
      .def_static(
          "atoms",
          [](const std::vector<std::pair<double, double>>& atoms) {
            std::vector<Atom> a;
            for (const auto& [x, w] : atoms) a.push_back({x, w});
            return InitialLaw::atoms(std::move(a));
          },
          py::arg("atoms"), "Atoms as (location, mass) pairs.")
      .def("cdf", &InitialLaw::cdf)
      .def("density", &InitialLaw::density)
      .def("density_sup", &InitialLaw::density_sup)
      .def("quantile", &InitialLaw::quantile)
      .def("__repr__", &InitialLaw::describe);

  py::class_<GridSpec>(m, "GridSpec")
      .def(py::init<double, std::size_t, std::size_t>(), py::arg("horizon"), py::arg("steps"), py::arg("max_index"))
      .def_static("for_law", &GridSpec::for_law, py::arg("horizon"), py::arg("steps"), py::arg("law"),
                  py::arg("shift") = 0)
      .def_property_readonly("horizon", &GridSpec::horizon)
      .def_property_readonly("steps", &GridSpec::steps)
      .def_property_readonly("max_index", &GridSpec::max_index)
      .def_property_readonly("step", &GridSpec::step)
      .def_property_readonly("pitch", &GridSpec::pitch)
      .def("time", &GridSpec::time);

  py::class_<drivers::DriverSpec>(m, "DriverSpec")
      .def_static("brownian", &drivers::DriverSpec::brownian, py::arg("seed"))
      .def_static("fractional", &drivers::DriverSpec::fractional, py::arg("hurst"), py::arg("seed"))
      .def_static(
          "walk",
          [](const std::string& increments, std::uint64_t seed) {
            if (increments == "rademacher") return drivers::DriverSpec::walk(drivers::IncrementLaw::Rademacher, seed);
            if (increments == "normal") return drivers::DriverSpec::walk(drivers::IncrementLaw::StandardNormal, seed);
            throw py::value_error("increments must be 'rademacher' or 'normal'");
          },
          py::arg("increments"), py::arg("seed"))
      .def_property_readonly("seed", [](const drivers::DriverSpec& d) { return d.seed; })
      .def_property_readonly("is_markov", &drivers::DriverSpec::is_markov);

  py::class_<donsker::DonskerSolution>(m, "DonskerSolution")
      .def_property_readonly("alpha", [](const donsker::DonskerSolution& s) { return s.loss.alpha(); })
      .def_property_readonly("loss", [](const donsker::DonskerSolution& s) { return to_vector(s.loss); })
      .def_readonly("iterations_per_step", &donsker::DonskerSolution::iterations_per_step)
      .def_readonly("boundary_index", &donsker::DonskerSolution::boundary_index)
      .def_readonly("mass_remaining", &donsker::DonskerSolution::mass_remaining)
      .def_readonly("support_truncated", &donsker::DonskerSolution::support_truncated)
      .def_property_readonly("final_density",
                             [](const donsker::DonskerSolution& s) { return s.final_density.masses; });

  py::class_<particle::ParticleSolution>(m, "ParticleSolution")
      .def_property_readonly("loss", [](const particle::ParticleSolution& s) { return to_vector(s.loss); })
      .def_readonly("absorbed_counts", &particle::ParticleSolution::absorbed_counts)
      .def_readonly("fixed_point_iters", &particle::ParticleSolution::fixed_point_iters);

  m.def(
      "solve_donsker",
      [](double alpha, const GridSpec& grid, const InitialLaw& law, donsker::Mode mode, bool perturb_initial,
         InitMode init_mode) {
        py::gil_scoped_release release;
        return donsker::solve({alpha, grid, law, mode, perturb_initial, init_mode});
      },
      py::arg("alpha"), py::arg("grid"), py::arg("law"), py::arg("mode") = donsker::Mode::Implicit,
      py::arg("perturb_initial") = false, py::arg("init_mode") = InitMode::CellMass);

  m.def(
      "solve_particle",
      [](double alpha, const GridSpec& grid, const InitialLaw& law, const drivers::DriverSpec& driver,
         std::size_t particles, particle::Scheme scheme, std::size_t substeps) {
        py::gil_scoped_release release;
        return particle::solve({alpha, grid, law, driver, particles, scheme}, substeps);
      },
      py::arg("alpha"), py::arg("grid"), py::arg("law"), py::arg("driver"), py::arg("particles"),
      py::arg("scheme") = particle::Scheme::Implicit, py::arg("substeps") = 1);

  m.def(
      "error_estimator",
      [](double horizon, const std::vector<std::pair<std::size_t, std::vector<double>>>& levels, double alpha) {
        analysis::RefinementStudy study(horizon);
        for (const auto& [n, values] : levels) study.add(n, LossCurve(alpha, values));
        std::vector<std::pair<double, double>> out;
        for (const auto& p : analysis::error_estimator(study)) out.emplace_back(p.h, p.value);
        return out;
      },
      py::arg("horizon"), py::arg("levels"), py::arg("alpha"),
      "Levels are (N, loss values) pairs; returns (h, 2(L^h - L^2h)) pairs.");

  m.def(
      "fit_order",
      [](const std::vector<std::pair<double, double>>& points) {
        std::vector<analysis::Point> pts;
        for (const auto& [h, v] : points) pts.push_back({h, v});
        return analysis::fit_order(pts);
      },
      py::arg("points"));

  m.def(
      "detect_jump",
      [](const std::vector<double>& loss, double alpha, double horizon) {
        const auto j = analysis::detect_jump(LossCurve(alpha, loss), horizon);
        return py::make_tuple(j.index, j.time, j.size);
      },
      py::arg("loss"), py::arg("alpha"), py::arg("horizon"), "Returns (index, time, size).");

  m.def(
      "run",
      [](const std::string& command, const std::string& config_json, const std::string& out_dir) {
        const auto cmd = runner::parse_command(command);
        if (!cmd) throw py::value_error("unknown command '" + command + "'");
        auto config = runner::parse_config(*cmd, config_json);
        config.out_dir = out_dir;
        py::gil_scoped_release release;
        runner::run(config, config_json);
      },
      py::arg("command"), py::arg("config_json"), py::arg("out_dir"),
      "Runs one command-line experiment and writes its artifacts into out_dir.");
}
