#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qisd/action.hpp"
#include "qisd/config.hpp"
#include "qisd/influence.hpp"
#include "qisd/noise.hpp"
#include "qisd/oracle.hpp"
#include "qisd/wigner.hpp"

namespace py = pybind11;
using namespace qisd;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
    py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

std::vector<double> from_array(const py::array_t<double, py::array::c_style>& a) {
    return {a.data(), a.data() + a.size()};
}

NoisePath noise_path_from(const TimeGrid& grid, const Eigen::VectorXd& values) {
    return NoisePath{grid, values};
}

} // namespace

PYBIND11_MODULE(_qisd, m) {
    m.doc() = "Stochastic open-system dynamics: Langevin ensembles, phase-space "
              "propagation, path weights, influence kernels";
    m.attr("__version__") = QISD_VERSION;

    py::register_exception<Error>(m, "QisdError", PyExc_RuntimeError);

    py::class_<TimeGrid>(m, "TimeGrid")
        .def(py::init<double, std::size_t>(), py::arg("t_end"), py::arg("n_steps"))
        .def_property_readonly("t_end", &TimeGrid::t_end)
        .def_property_readonly("n_steps", &TimeGrid::n_steps)
        .def_property_readonly("dt", &TimeGrid::dt)
        .def("time", &TimeGrid::time)
        .def("node_times", [](const TimeGrid& g) { return to_array(g.node_times()); });

    py::class_<Potential>(m, "Potential")
        .def_static("free", &Potential::free_particle)
        .def_static("harmonic", &Potential::harmonic, py::arg("stiffness"))
        .def_static("quartic", &Potential::quartic, py::arg("a"), py::arg("b"))
        .def_static("tabulated", &Potential::tabulated, py::arg("x"), py::arg("v"))
        .def("value", &Potential::value)
        .def("deriv", &Potential::deriv);

    py::class_<CouplingFunction>(m, "CouplingFunction")
        .def_static("linear", &CouplingFunction::linear)
        .def_static("constant", &CouplingFunction::constant, py::arg("value"))
        .def_static("power", &CouplingFunction::power, py::arg("exponent"))
        .def_static("tabulated", &CouplingFunction::tabulated, py::arg("x"), py::arg("f"))
        .def("value", &CouplingFunction::value)
        .def("deriv", &CouplingFunction::deriv);

    py::class_<KernelSpec>(m, "KernelSpec")
        .def_static("delta", &KernelSpec::delta, py::arg("amplitude"))
        .def_static("delta_derivative", &KernelSpec::delta_derivative, py::arg("amplitude"))
        .def_static("exponential", &KernelSpec::exponential, py::arg("amplitude"),
                    py::arg("correlation_time"))
        .def_static("tabulated", &KernelSpec::tabulated, py::arg("times"), py::arg("values"),
                    py::arg("symmetric") = true)
        .def_property_readonly("amplitude", &KernelSpec::amplitude)
        .def_property_readonly("correlation_time", &KernelSpec::correlation_time)
        .def_property_readonly("kind",
                               [](const KernelSpec& k) {
                                   switch (k.kind()) {
                                       case KernelSpec::Kind::delta: return "delta";
                                       case KernelSpec::Kind::delta_derivative:
                                           return "delta_derivative";
                                       case KernelSpec::Kind::exponential: return "exponential";
                                       case KernelSpec::Kind::tabulated: return "tabulated";
                                   }
                                   return "?";
                               })
        .def("value", &KernelSpec::value, py::arg("t"), py::arg("s"));

    m.def("cl_kernels", &cl_kernels, py::arg("gamma"), py::arg("kBT"),
          "Local-drag white-noise kernel pair (D, N) with N = 2*gamma*kBT*delta");
    m.def("discretize_kernel", &discretize_kernel, py::arg("kernel"), py::arg("grid"));

    py::enum_<CouplingMode>(m, "CouplingMode")
        .value("qisd", CouplingMode::qisd)
        .value("langevin", CouplingMode::langevin);

    py::class_<LangevinSpec>(m, "LangevinSpec")
        .def(py::init<>())
        .def_readwrite("mass", &LangevinSpec::mass)
        .def_readwrite("hbar", &LangevinSpec::hbar)
        .def_readwrite("potential", &LangevinSpec::potential)
        .def_readwrite("f", &LangevinSpec::f)
        .def_readwrite("g", &LangevinSpec::g)
        .def_readwrite("dissipation", &LangevinSpec::dissipation)
        .def_readwrite("noise", &LangevinSpec::noise)
        .def_readwrite("mode", &LangevinSpec::mode)
        .def("validate", &LangevinSpec::validate);

    m.def(
        "spec_from_config",
        [](const std::string& text) { return build_langevin_spec(Config::parse_string(text)); },
        py::arg("text"), "Build a LangevinSpec from configuration text");

    py::class_<NoiseSampler>(m, "NoiseSampler")
        .def(py::init<const KernelSpec&, const TimeGrid&, std::uint64_t>(), py::arg("kernel"),
             py::arg("grid"), py::arg("seed"))
        .def(
            "sample",
            [](const NoiseSampler& s, std::uint64_t index) {
                return Eigen::VectorXd(s.sample(index).values);
            },
            py::arg("draw_index"))
        .def_property_readonly("covariance", &NoiseSampler::covariance)
        .def_property_readonly("is_white", &NoiseSampler::is_white);

    py::class_<Trajectory>(m, "Trajectory")
        .def_property_readonly("t",
                               [](const Trajectory& tr) {
                                   std::vector<double> t(tr.x.size());
                                   for (std::size_t k = 0; k < t.size(); ++k)
                                       t[k] = tr.grid.time(k);
                                   return to_array(t);
                               })
        .def_property_readonly("x", [](const Trajectory& tr) { return to_array(tr.x); })
        .def_property_readonly("v", [](const Trajectory& tr) { return to_array(tr.v); });

    py::class_<InitDistribution>(m, "InitDistribution")
        .def_static("point", &InitDistribution::point, py::arg("x0"), py::arg("v0"))
        .def_static("gaussian", &InitDistribution::gaussian, py::arg("mean_x"),
                    py::arg("mean_v"), py::arg("var_x"), py::arg("var_v"),
                    py::arg("cov_xv") = 0.0);

    m.def(
        "integrate_langevin",
        [](const LangevinSpec& spec, double x0, double v0, const Eigen::VectorXd& noise,
           const TimeGrid& grid) {
            return integrate_langevin(spec, {x0, v0}, noise_path_from(grid, noise), grid);
        },
        py::arg("spec"), py::arg("x0"), py::arg("v0"), py::arg("noise"), py::arg("grid"));

    m.def(
        "ensemble_statistics",
        [](const LangevinSpec& spec, const InitDistribution& init, const TimeGrid& grid,
           std::size_t n_traj, std::uint64_t seed, int threads, std::size_t stride) {
            EnsembleOptions opts;
            opts.threads = threads;
            opts.stride = stride;
            const EnsembleStats s = ensemble_statistics(spec, init, grid, n_traj, seed, opts);
            py::dict out;
            out["t"] = to_array(s.t);
            out["mean_x"] = to_array(s.mean_x);
            out["mean_v"] = to_array(s.mean_v);
            out["var_x"] = to_array(s.var_x);
            out["var_v"] = to_array(s.var_v);
            out["cov_xv"] = to_array(s.cov_xv);
            out["se_mean_x"] = to_array(s.se_mean_x);
            out["se_mean_v"] = to_array(s.se_mean_v);
            out["se_var_x"] = to_array(s.se_var_x);
            out["se_var_v"] = to_array(s.se_var_v);
            out["n_completed"] = s.n_completed;
            return out;
        },
        py::arg("spec"), py::arg("init"), py::arg("grid"), py::arg("n_traj"), py::arg("seed"),
        py::arg("threads") = 1, py::arg("stride") = 1);

    py::class_<ActionValue>(m, "ActionValue")
        .def_readonly("s", &ActionValue::s)
        .def_readonly("log_measure_correction", &ActionValue::log_measure_correction)
        .def_readonly("total_log_weight", &ActionValue::total_log_weight);

    m.def("om_action", &om_action, py::arg("trajectory"), py::arg("spec"));
    m.def(
        "om_action_from_path",
        [](const py::array_t<double, py::array::c_style>& x, const TimeGrid& grid,
           const LangevinSpec& spec) {
            Trajectory traj{grid, from_array(x), std::vector<double>(grid.n_steps() + 1, 0.0)};
            return om_action(traj, spec);
        },
        py::arg("x"), py::arg("grid"), py::arg("spec"),
        "Path-weight exponent of nodal positions (velocities unused)");
    m.def("relative_path_weight", &relative_path_weight, py::arg("a"), py::arg("b"),
          py::arg("spec"));

    py::class_<StateSpec>(m, "StateSpec")
        .def_static("gaussian", &StateSpec::gaussian, py::arg("mean_x"), py::arg("mean_p"),
                    py::arg("var_x"), py::arg("var_p"), py::arg("cov_xp") = 0.0)
        .def_static("coherent", &StateSpec::coherent, py::arg("alpha_re"), py::arg("alpha_im"),
                    py::arg("omega"), py::arg("mass"), py::arg("hbar") = 1.0)
        .def_static("thermal", &StateSpec::thermal, py::arg("omega"), py::arg("mass"),
                    py::arg("kBT"), py::arg("hbar") = 1.0)
        .def_static("fock1", &StateSpec::fock1, py::arg("omega"), py::arg("mass"),
                    py::arg("hbar") = 1.0)
        .def_property_readonly("name", &StateSpec::name);

    m.def("wigner_value", &wigner_value, py::arg("state"), py::arg("x"), py::arg("p"));

    py::class_<PhasePoint>(m, "PhasePoint")
        .def_readonly("x", &PhasePoint::x)
        .def_readonly("p", &PhasePoint::p)
        .def_readonly("weight", &PhasePoint::weight);

    py::class_<PhaseMoments>(m, "PhaseMoments")
        .def_readonly("mass", &PhaseMoments::mass)
        .def_readonly("mean_x", &PhaseMoments::mean_x)
        .def_readonly("mean_p", &PhaseMoments::mean_p)
        .def_readonly("var_x", &PhaseMoments::var_x)
        .def_readonly("var_p", &PhaseMoments::var_p)
        .def_readonly("cov_xp", &PhaseMoments::cov_xp);

    py::class_<WignerEnsemble>(m, "WignerEnsemble")
        .def_property_readonly("n", [](const WignerEnsemble& e) { return e.points.size(); })
        .def_property_readonly("time", [](const WignerEnsemble& e) { return e.time; })
        .def_property_readonly("effective_sample_size",
                               [](const WignerEnsemble& e) { return e.effective_sample_size; })
        .def("weight_sum", &WignerEnsemble::weight_sum)
        .def("moments", &WignerEnsemble::moments)
        .def("arrays", [](const WignerEnsemble& e) {
            const auto n = static_cast<py::ssize_t>(e.points.size());
            py::array_t<double> x(n), p(n), w(n);
            for (py::ssize_t i = 0; i < n; ++i) {
                x.mutable_data()[i] = e.points[static_cast<std::size_t>(i)].x;
                p.mutable_data()[i] = e.points[static_cast<std::size_t>(i)].p;
                w.mutable_data()[i] = e.points[static_cast<std::size_t>(i)].weight;
            }
            return py::make_tuple(x, p, w);
        });

    py::class_<PhaseWindow>(m, "PhaseWindow")
        .def(py::init([](double x_min, double x_max, double p_min, double p_max) {
                 return PhaseWindow{x_min, x_max, p_min, p_max};
             }),
             py::arg("x_min"), py::arg("x_max"), py::arg("p_min"), py::arg("p_max"))
        .def_readwrite("x_min", &PhaseWindow::x_min)
        .def_readwrite("x_max", &PhaseWindow::x_max)
        .def_readwrite("p_min", &PhaseWindow::p_min)
        .def_readwrite("p_max", &PhaseWindow::p_max);

    py::class_<WignerGrid>(m, "WignerGrid")
        .def_readonly("window", &WignerGrid::window)
        .def_readonly("values", &WignerGrid::values)
        .def_property_readonly("stderr", [](const WignerGrid& g) { return g.stderr_; })
        .def_readonly("coverage", &WignerGrid::coverage)
        .def_property_readonly("dx", &WignerGrid::dx)
        .def_property_readonly("dp", &WignerGrid::dp)
        .def("normalization", &WignerGrid::normalization)
        .def("x_centers",
             [](const WignerGrid& g) {
                 std::vector<double> out(static_cast<std::size_t>(g.nx));
                 for (Eigen::Index i = 0; i < g.nx; ++i)
                     out[static_cast<std::size_t>(i)] = g.x_center(i);
                 return to_array(out);
             })
        .def("p_centers", [](const WignerGrid& g) {
            std::vector<double> out(static_cast<std::size_t>(g.np));
            for (Eigen::Index j = 0; j < g.np; ++j)
                out[static_cast<std::size_t>(j)] = g.p_center(j);
            return to_array(out);
        });

    py::class_<IntegratorOptions>(m, "IntegratorOptions").def(py::init<>());

    m.def("sample_initial_state", &sample_initial_state, py::arg("state"), py::arg("n"),
          py::arg("seed"));
    m.def("propagate_wigner", &propagate_wigner, py::arg("ensemble"), py::arg("spec"),
          py::arg("tau"), py::arg("n_steps"), py::arg("seed"), py::arg("threads") = 1,
          py::arg("options") = IntegratorOptions{});
    m.def("estimate_grid", &estimate_grid, py::arg("ensemble"), py::arg("window"),
          py::arg("bins_x"), py::arg("bins_p"));
    m.def("grid_from_state", &grid_from_state, py::arg("state"), py::arg("window"),
          py::arg("bins_x"), py::arg("bins_p"));
    m.def("negativity", &negativity, py::arg("grid"));
    m.def("grid_moments", &grid_moments, py::arg("grid"));

    py::class_<InfluenceFunctionalSpec>(m, "InfluenceFunctionalSpec")
        .def_readonly("hbar", &InfluenceFunctionalSpec::hbar)
        .def_readonly("noise", &InfluenceFunctionalSpec::noise)
        .def_readonly("dissipation", &InfluenceFunctionalSpec::dissipation);

    m.def("build_influence_functional", &build_influence_functional, py::arg("spec"));
    m.def("langevin_from_influence", &langevin_from_influence, py::arg("ifs"), py::arg("mass"),
          py::arg("potential"));
    m.def(
        "evaluate_influence_exponent",
        [](const InfluenceFunctionalSpec& ifs, const TimeGrid& grid, const Eigen::VectorXd& x,
           const Eigen::VectorXd& y) {
            return evaluate_influence_exponent(ifs, PathPair{grid, x, y});
        },
        py::arg("ifs"), py::arg("grid"), py::arg("x"), py::arg("y"));
    m.def(
        "decoherence_factor",
        [](const InfluenceFunctionalSpec& ifs, const TimeGrid& grid, const Eigen::VectorXd& x,
           const Eigen::VectorXd& y) {
            return decoherence_factor(ifs, PathPair{grid, x, y});
        },
        py::arg("ifs"), py::arg("grid"), py::arg("x"), py::arg("y"));

    auto oracle_mod = m.def_submodule("oracle", "Reference solvers for the linear benchmark");
    py::class_<oracle::GaussianState>(oracle_mod, "GaussianState")
        .def(py::init<>())
        .def_readwrite("mean", &oracle::GaussianState::mean)
        .def_readwrite("cov", &oracle::GaussianState::cov);
    oracle_mod.def("moment_ode_evolve", &oracle::moment_ode_evolve, py::arg("mass"),
                   py::arg("omega"), py::arg("gamma"), py::arg("kBT"), py::arg("initial"),
                   py::arg("tau"), py::arg("max_step") = 1e-4);
    py::class_<oracle::GaussianPropagator>(oracle_mod, "GaussianPropagator")
        .def(py::init<double, double, double, double, const TimeGrid&>(), py::arg("mass"),
             py::arg("omega"), py::arg("gamma"), py::arg("kBT"), py::arg("grid"))
        .def_property_readonly("mean_map", &oracle::GaussianPropagator::mean_map)
        .def_property_readonly("covariance", &oracle::GaussianPropagator::covariance)
        .def("min_action", &oracle::GaussianPropagator::min_action, py::arg("x0"),
             py::arg("v0"), py::arg("xt"), py::arg("vt"))
        .def("minimizing_path",
             [](const oracle::GaussianPropagator& p, double x0, double v0, double xt,
                double vt) { return to_array(p.minimizing_path(x0, v0, xt, vt)); });
    oracle_mod.def(
        "kramers_grid_solve",
        [](double mass, const Potential& pot, double gamma, double kBT,
           const WignerGrid& initial, double tau) {
            const auto res = oracle::kramers_grid_solve(mass, pot, gamma, kBT, initial, tau);
            py::dict out;
            out["grid"] = res.w;
            out["leakage"] = res.leakage;
            out["n_steps"] = res.n_steps;
            out["dt"] = res.dt;
            return out;
        },
        py::arg("mass"), py::arg("potential"), py::arg("gamma"), py::arg("kBT"),
        py::arg("initial"), py::arg("tau"));
}
