#include <iostream>

#include <pybind11/eigen.h>
#include <pybind11/iostream.h>
#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "wkam/config.hpp"
#include "wkam/error.hpp"
#include "wkam/experiment.hpp"
#include "wkam/rigidity.hpp"
#include "wkam/verify.hpp"
#include "wkam/weakkam.hpp"

namespace py = pybind11;
using namespace wkam;

namespace {

py::array_t<double> as_array(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

py::dict field_dict(const GridField& f) {
    py::dict d;
    d["r"] = as_array(f.grid.nodes());
    d["values"] = as_array(f.values);
    std::vector<double> mask(f.valid.begin(), f.valid.end());
    d["valid"] = py::array_t<double>(mask.size(), mask.data()).attr("astype")("bool");
    return d;
}

py::dict trajectory_dict(const ModelManifold& m, const Trajectory& traj) {
    std::vector<double> r, u, H;
    for (const auto& s : traj.states) {
        r.push_back(s.position.r);
        u.push_back(s.u);
        H.push_back(hamiltonian(m, s));
    }
    py::dict d;
    d["t"] = as_array(traj.times);
    d["r"] = as_array(r);
    d["u"] = as_array(u);
    d["H"] = as_array(H);
    d["escaped"] = traj.escaped;
    return d;
}

End parse_end(const std::string& s) {
    if (s == "left") return End::Left;
    if (s == "right") return End::Right;
    throw ConfigError("end must be 'left' or 'right', got '" + s + "'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Weak KAM workbench on warped-product model manifolds";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);

    py::class_<ModelManifold>(m, "ModelManifold")
        .def_static("cosh", &ModelManifold::cosh, py::arg("n"), py::arg("lam"), py::arg("c_V") = 0.5)
        .def_static("exp", &ModelManifold::exp, py::arg("n"), py::arg("lam"), py::arg("c_V") = 0.5)
        .def_static("custom", &ModelManifold::custom, py::arg("n"), py::arg("lam"), py::arg("r"), py::arg("w"),
                    py::arg("c_V") = 0.5)
        .def_property_readonly("dim", &ModelManifold::dim)
        .def_property_readonly("lam", &ModelManifold::lambda)
        .def_property_readonly("rate", &ModelManifold::rate)
        .def_property_readonly("ricci_bound", &ModelManifold::ricci_bound)
        .def("warp", [](const ModelManifold& self, double r) { return warp(self, r); })
        .def("g", [](const ModelManifold& self, double r) { return eigenfunction_g(self, r); })
        .def("potential", [](const ModelManifold& self, double r) { return self.potential_jet(r).value; })
        .def("ricci_margin", [](const ModelManifold& self, double r) {
            const RicciMargin rm = ricci_bound_margin(self, r);
            py::dict d;
            d["radial"] = rm.radial;
            d["tangential"] = rm.tangential;
            d["bound"] = rm.bound;
            d["margin"] = rm.margin();
            return d;
        });

    m.def(
        "eigen_residual",
        [](const ModelManifold& model, double lo, double hi, double h) {
            return eigen_residual(model, RadialGrid::over(lo, hi, h));
        },
        py::arg("model"), py::arg("lo"), py::arg("hi"), py::arg("h"),
        "sup |Delta g + lambda g| over the interior nodes of a uniform grid");

    m.def(
        "reference_weak_kam",
        [](const ModelManifold& model, double r, const std::string& end) { return reference_weak_kam(model, r, parse_end(end)); },
        py::arg("model"), py::arg("r"), py::arg("end") = "right");

    m.def(
        "solve",
        [](const ModelManifold& model, double lo, double hi, double h, double time_step, double tol, std::size_t max_iters) {
            const RadialGrid grid = RadialGrid::over(lo, hi, h);
            LaxOleinikParams p = LaxOleinikParams::for_grid(model, grid, time_step);
            p.tol = tol;
            p.max_iters = max_iters;
            const SolveResult res = weak_kam_solve(model, grid, p);
            py::dict d = field_dict(res.field);
            d["converged"] = res.converged;
            d["iterations"] = res.iterations;
            d["history"] = as_array(res.residual_history);
            return d;
        },
        py::arg("model"), py::arg("lo"), py::arg("hi"), py::arg("h"), py::arg("time_step"), py::arg("tol") = 1e-7,
        py::arg("max_iters") = 200000, "Value iteration of the Lax-Oleinik step from f = 0");

    m.def(
        "integrate",
        [](const ModelManifold& model, double r0, double u0, double duration, double dt) {
            return trajectory_dict(model, integrate_minimizer(model, {{r0, 0.0}, u0, 0.0}, duration, dt));
        },
        py::arg("model"), py::arg("r0"), py::arg("u0"), py::arg("duration"), py::arg("dt"),
        "Radial minimizer from (r0, u0) by the fourth-order symplectic scheme");

    m.def("fundamental_matrix_rigid", &fundamental_matrix_rigid, py::arg("n"), py::arg("lam"), py::arg("t"));

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def(py::init<>())
        .def_static("from_file", &ExperimentConfig::from_file, py::arg("path"))
        .def_static("from_string", &ExperimentConfig::from_string, py::arg("text"), py::arg("origin") = "<string>")
        .def("set", py::overload_cast<const std::string&>(&ExperimentConfig::set), py::arg("assignment"))
        .def("get", &ExperimentConfig::text, py::arg("key"))
        .def("to_ini", &ExperimentConfig::to_ini)
        .def("hash", &ExperimentConfig::hash)
        .def(py::self == py::self);

    m.def(
        "run",
        [](const std::string& subcommand, const ExperimentConfig& cfg, const std::string& out_dir,
           const std::vector<std::string>& plots) {
            py::scoped_estream_redirect redirect;
            return run_command(subcommand, cfg, {out_dir, plots}, std::cerr);
        },
        py::arg("subcommand"), py::arg("config"), py::arg("out_dir"), py::arg("plots") = std::vector<std::string>{},
        "Runs one subcommand and returns its exit code");

    m.def(
        "verify",
        [](const ExperimentConfig& cfg, const std::vector<int>& ids) {
            Verifier v(cfg);
            return v.run_all(ids).to_json();
        },
        py::arg("config"), py::arg("criteria") = std::vector<int>{},
        "Runs acceptance criteria and returns the JSON report");
}
