// Python bindings: configs, reference propagators, plan compilation and the estimator.

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nmpec/config.hpp"
#include "nmpec/reference.hpp"

namespace py = pybind11;
using namespace nmpec;

namespace {

py::dict series_dict(const std::vector<SeriesStats>& s, const std::vector<std::string>& names) {
    py::dict d;
    for (std::size_t o = 0; o < s.size(); ++o) d[py::str(names[o])] = py::make_tuple(s[o].mean, s[o].stderr_);
    return d;
}

py::dict report_dict(const EstimateReport& r) {
    py::dict d;
    d["times"] = r.times;
    py::dict ideal;
    for (std::size_t o = 0; o < r.names.size(); ++o) ideal[py::str(r.names[o])] = r.ideal[o];
    d["ideal"] = ideal;
    d["noisy"] = series_dict(r.noisy, r.names);
    d["mitigated"] = series_dict(r.mitigated, r.names);
    d["gamma_tot"] = r.gamma_tot;
    d["samples"] = r.samples;
    d["dead"] = r.dead;
    d["aborted"] = r.aborted;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Probabilistic error cancellation under non-Markovian noise";
    m.attr("__version__") = NMPEC_VERSION;

    py::register_exception<std::invalid_argument>(m, "ConfigError", PyExc_ValueError);

    py::class_<BathSpec>(m, "BathSpec")
        .def(py::init([](std::size_t channels, const std::vector<std::pair<std::vector<cplx>, cplx>>& poles) {
                 std::vector<Pole> p;
                 for (const auto& [g, w] : poles) p.push_back({g, w});
                 return BathSpec(channels, std::move(p));
             }),
             py::arg("channels"), py::arg("poles"))
        .def_static("single_channel", &BathSpec::single_channel, py::arg("poles"))
        .def_property_readonly("channels", &BathSpec::channels)
        .def_property_readonly("theta", &BathSpec::theta)
        .def_property_readonly("poles", [](const BathSpec& b) {
            std::vector<std::pair<std::vector<cplx>, cplx>> out;
            for (const auto& p : b.poles()) out.emplace_back(p.amplitudes, p.omega);
            return out;
        })
        .def("bcf", [](const BathSpec& b, double t) { return Eigen::MatrixXcd(bcf_eval(b, t)); }, py::arg("t"));

    m.def("env_params", [](const BathSpec& b) {
        const EnvParams e = env_params(b);
        return py::dict(py::arg("G_env") = e.g_b1, py::arg("G_b2") = e.g_b2, py::arg("theta") = e.theta);
    });
    m.def("single_pole_cutoff", &single_pole_cutoff, py::arg("omega_c"), py::arg("scale") = 1.0);

    py::class_<SystemModel>(m, "SystemModel")
        .def(py::init<Matrix, std::vector<Matrix>, double>(), py::arg("hamiltonian"), py::arg("couplings"),
             py::arg("lambda_"))
        .def_property_readonly("n", &SystemModel::n)
        .def_property_readonly("dim", &SystemModel::dim)
        .def_property_readonly("lambda_", &SystemModel::lambda)
        .def_property_readonly("hamiltonian", [](const SystemModel& s) { return Matrix(s.hamiltonian()); })
        .def_property_readonly("couplings", [](const SystemModel& s) { return s.couplings(); });

    m.def("pauli", [](const std::string& word) { return ops::pauli_string(word); }, py::arg("word"));
    m.def("pauli_expression", &parse_pauli_expression, py::arg("text"), py::arg("n"));

    m.def("coeff_matrix", [](const SystemModel& s, const BathSpec& b, double t) { return Generator(s, b).coeff_exact(t); },
          py::arg("model"), py::arg("bath"), py::arg("t"));
    m.def("gamma_spectrum",
          [](const SystemModel& s, const BathSpec& b, double t, bool restrict) {
              return Eigen::VectorXd(gamma_spectrum(Generator(s, b), t, restrict));
          },
          py::arg("model"), py::arg("bath"), py::arg("t"), py::arg("restrict_to_support") = true);

    m.def("propagate_ideal",
          [](const Matrix& h, const Matrix& rho0, double t) { return propagate_ideal(h, rho0, t).rho; },
          py::arg("hamiltonian"), py::arg("rho0"), py::arg("t"));
    m.def("propagate_noisy",
          [](const SystemModel& s, const BathSpec& b, const Matrix& rho0, double T, double dt_ode, std::size_t stride) {
              std::vector<double> t;
              std::vector<Matrix> rho;
              for (auto& st : propagate_noisy(s, b, rho0, T, dt_ode, stride)) {
                  t.push_back(st.t);
                  rho.push_back(std::move(st.rho));
              }
              return py::make_tuple(t, rho);
          },
          py::arg("model"), py::arg("bath"), py::arg("rho0"), py::arg("T"), py::arg("dt_ode"), py::arg("stride") = 1);
    m.def("ensemble_density",
          [](const SystemModel& s, const BathSpec& b, const Vector& psi0, double T, double dt_f, std::size_t N,
             std::uint64_t seed, std::size_t stride, unsigned threads) {
              EnsembleOptions opt;
              opt.stride = stride;
              opt.threads = threads;
              EnsembleResult r;
              {
                  py::gil_scoped_release release;
                  r = ensemble_density(s, b, psi0, T, dt_f, N, seed, opt);
              }
              std::vector<double> t;
              std::vector<Matrix> rho;
              for (auto& st : r.states) {
                  t.push_back(st.t);
                  rho.push_back(std::move(st.rho));
              }
              return py::make_tuple(t, rho);
          },
          py::arg("model"), py::arg("bath"), py::arg("psi0"), py::arg("T"), py::arg("dt_f"), py::arg("N"),
          py::arg("seed"), py::arg("stride") = 1, py::arg("threads") = 0);

    m.def("compile_plans",
          [](const SystemModel& s, const BathSpec& b, double dt, std::size_t M) {
              py::list out;
              for (const auto& p : compile_plans(Generator(s, b), dt, M))
                  out.append(py::dict(py::arg("t") = p.t, py::arg("gamma") = p.gamma, py::arg("q") = p.q));
              return out;
          },
          py::arg("model"), py::arg("bath"), py::arg("dt"), py::arg("M"));

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def_property_readonly("model", [](const ExperimentConfig& c) { return c.run.model; })
        .def_property_readonly("bath", [](const ExperimentConfig& c) { return c.run.bath; })
        .def_property_readonly("steps", [](const ExperimentConfig& c) { return c.run.steps(); })
        .def_property_readonly("observables", [](const ExperimentConfig& c) { return c.run.observable_names; })
        .def_property("seed", [](const ExperimentConfig& c) { return c.run.seed; },
                      [](ExperimentConfig& c, std::uint64_t s) {
                          c.run.seed = s;
                          c.canonical["run"]["seed"] = s;
                      })
        .def_property("samples", [](const ExperimentConfig& c) { return c.run.N_r; },
                      [](ExperimentConfig& c, std::size_t n) {
                          c.run.N_r = n;
                          c.canonical["run"]["N_r"] = n;
                      })
        .def("serialize", &serialize_config)
        .def("hash", &config_hash);

    m.def("load_config", &load_config, py::arg("path"));
    m.def("parse_config", &parse_config_text, py::arg("text"));
    m.def("estimate",
          [](const ExperimentConfig& c, unsigned threads) {
              RunConfig run = c.run;
              run.threads = threads;
              EstimateReport r;
              {
                  py::gil_scoped_release release;
                  r = estimate(run);
              }
              return report_dict(r);
          },
          py::arg("config"), py::arg("threads") = 0);
}
