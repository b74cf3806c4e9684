#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "structsim/equilibrium.hpp"
#include "structsim/errors.hpp"
#include "structsim/grid.hpp"
#include "structsim/oracle.hpp"
#include "structsim/params.hpp"
#include "structsim/r0.hpp"
#include "structsim/solver.hpp"

namespace py = pybind11;
using namespace structsim;

namespace {

py::dict report_dict(const R0Report& r) {
    py::dict d;
    d["r0_squared_closed_form"] = r.r0_squared_closed_form;
    d["r0"] = r.r0;
    if (r.has_power_iter) d["r0_squared_power_iter"] = r.r0_squared_power_iter;
    if (r.has_reduced) d["r0_squared_reduced"] = r.r0_squared_reduced;
    d["iterations"] = r.iterations;
    d["population_ratio"] = r.population_ratio;
    d["integral_pi_h"] = r.integral_pi_h;
    d["integral_pi_m"] = r.integral_pi_m;
    return d;
}

py::dict series_dict(const std::vector<Observables>& s) {
    std::vector<double> t, nh, nm, ih, im;
    for (const auto& o : s) {
        t.push_back(o.t);
        nh.push_back(o.n_h);
        nm.push_back(o.n_m);
        ih.push_back(o.total_i_h);
        im.push_back(o.total_i_m);
    }
    py::dict d;
    d["t"] = t;
    d["n_h"] = nh;
    d["n_m"] = nm;
    d["total_i_h"] = ih;
    d["total_i_m"] = im;
    return d;
}

}  // namespace

PYBIND11_MODULE(_structsim, m) {
    m.doc() = "Age and infection-age structured malaria model";
    m.attr("__version__") = STRUCTSIM_VERSION;

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<EligibilityError>(m, "EligibilityError", PyExc_ValueError);

    py::class_<ModelParams>(m, "ModelParams")
        .def_readwrite("name", &ModelParams::name)
        .def_readwrite("lambda_h", &ModelParams::lambda_h)
        .def_readwrite("lambda_m", &ModelParams::lambda_m)
        .def_readwrite("theta", &ModelParams::theta)
        .def("reduced_mode_eligible", &ModelParams::reduced_mode_eligible)
        .def("to_config_text", [](const ModelParams& p) { return to_config_text(p); });

    py::class_<Grid>(m, "Grid")
        .def_readonly("delta", &Grid::delta)
        .def_readonly("a_max_h", &Grid::a_max_h)
        .def_readonly("a_max_m", &Grid::a_max_m)
        .def_readonly("tau_max_h", &Grid::tau_max_h)
        .def_readonly("tau_max_m", &Grid::tau_max_m)
        .def_readonly("eta_max", &Grid::eta_max)
        .def_readonly("n_ah", &Grid::n_ah)
        .def_readonly("n_am", &Grid::n_am);

    m.def("preset_names", &preset_names);
    m.def("preset", [](const std::string& name) { return preset(name); });
    m.def("parse_config", [](const std::string& text) { return parse_config(text).params; });
    m.def("default_grid", &default_grid, py::arg("params"), py::arg("delta") = 0.005);
    m.def("make_grid", &Grid::make, py::arg("delta"), py::arg("a_max_h"), py::arg("a_max_m"), py::arg("tau_max_h"),
          py::arg("tau_max_m"), py::arg("eta_max"));

    m.def("validate", [](const ModelParams& p, const Grid& g) {
        ValidationReport r = validate(p, g);
        py::dict checks;
        for (const auto& c : r.checks) checks[py::str(c.name)] = c.passed;
        return py::make_tuple(r.ok(), checks);
    });

    m.def("r0_closed_form", [](const ModelParams& p, const Grid& g) { return report_dict(r0_closed_form(p, g)); });
    m.def("r0_all", [](const ModelParams& p, const Grid& g) { return report_dict(r0_all(p, g)); });
    m.def("r0_per_lambda_m", &r0_per_lambda_m);
    m.def("g_of_lambda", py::overload_cast<const ModelParams&, const Grid&, double>(&g_of_lambda));
    m.def("growth_rate", [](const ModelParams& p, const Grid& g) { return dominant_growth_rate(p, g).lambda_star; });

    py::class_<ReducedKernels>(m, "ReducedKernels")
        .def_readonly("c2", &ReducedKernels::c2)
        .def_readonly("mu_h", &ReducedKernels::mu_h);
    m.def("reduced_kernels", &reduced_kernels);
    m.def("f_value", &f_value);
    m.def("dk_f", &dk_f);
    m.def("k_bar", &k_bar);
    m.def("c_bif", &c_bif);
    m.def("solve_endemic", &solve_endemic);
    m.def("fold_r0", [](const ReducedKernels& k) -> std::optional<double> {
        auto f = fold_point(k);
        if (!f) return std::nullopt;
        return f->r0_star;
    });

    m.def(
        "simulate",
        [](const ModelParams& p, const Grid& g, double seed, double t_end, std::size_t every, const std::string& mode) {
            StateFields init = default_initial(p, g, seed, parse_mode(mode));
            return series_dict(simulate(p, g, std::move(init), t_end, every).series);
        },
        py::arg("params"), py::arg("grid"), py::arg("seed"), py::arg("t_end"), py::arg("every") = 1,
        py::arg("mode") = "reduced");
}
