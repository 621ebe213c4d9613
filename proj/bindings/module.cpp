// Python bindings for the core operations: state construction, model
// builders, evolution, the conditional-preparation protocol, spectral
// analysis, and the experiment-file pipeline.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "prepsy/experiment.hpp"
#include "prepsy/version.hpp"

namespace py = pybind11;
using namespace prepsy;

namespace {

dynamics::Method method_from_string(const std::string& name) {
  if (name == "auto") return dynamics::Method::kAuto;
  if (name == "integrator") return dynamics::Method::kIntegrator;
  if (name == "propagator") return dynamics::Method::kEigenbasis;
  throw ContractError("method must be auto, integrator or propagator, got '" + name + "'");
}

HilbertStructure structure_from(const std::vector<Index>& dims) {
  return HilbertStructure(dims);
}

states::DensityMatrix state_from(const ComplexMatrix& rho, const std::vector<Index>& dims) {
  return states::DensityMatrix(rho, structure_from(dims));
}

std::vector<models::LindbladChannel> channels_from(
    const std::vector<std::pair<ComplexMatrix, double>>& raw) {
  std::vector<models::LindbladChannel> out;
  out.reserve(raw.size());
  for (const auto& [op, rate] : raw) out.push_back({op, rate});
  return out;
}

ComplexVector default_plus() {
  ComplexVector v(2);
  const double r = 1.0 / std::sqrt(2.0);
  v << r, r;
  return v;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Conditional-preparation spectroscopy: simulation and analysis core";
  m.attr("__version__") = kVersion;

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const ContractError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const InvalidParameters& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const Error& e) {
      PyErr_SetString(PyExc_RuntimeError, e.what());
    }
  });

  // ------------------------------ data types ------------------------------

  py::class_<protocol::Signal2D>(m, "Signal2D")
      .def(py::init([](const RealMatrix& values, double t1_spacing, double t2_spacing,
                       const std::string& label) {
             protocol::Signal2D s;
             s.values = values;
             s.t1_spacing = t1_spacing;
             s.t2_spacing = t2_spacing;
             s.label = label;
             return s;
           }),
           py::arg("values"), py::arg("t1_spacing"), py::arg("t2_spacing"),
           py::arg("label") = "")
      .def_readwrite("values", &protocol::Signal2D::values)
      .def_readwrite("t1_spacing", &protocol::Signal2D::t1_spacing)
      .def_readwrite("t2_spacing", &protocol::Signal2D::t2_spacing)
      .def_readwrite("label", &protocol::Signal2D::label);

  py::class_<spectral::AnalysisOptions>(m, "AnalysisOptions")
      .def(py::init<>())
      .def_readwrite("window", &spectral::AnalysisOptions::window)
      .def_readwrite("zero_pad", &spectral::AnalysisOptions::zero_pad)
      .def_readwrite("rel_threshold", &spectral::AnalysisOptions::rel_threshold)
      .def_readwrite("positive_quadrant", &spectral::AnalysisOptions::positive_quadrant);

  py::class_<spectral::Spectrum2D>(m, "Spectrum2D")
      .def_readonly("magnitude", &spectral::Spectrum2D::magnitude)
      .def_readonly("axis1", &spectral::Spectrum2D::axis1)
      .def_readonly("axis2", &spectral::Spectrum2D::axis2)
      .def_readonly("label", &spectral::Spectrum2D::label);

  py::class_<spectral::Peak>(m, "Peak")
      .def_readonly("f1", &spectral::Peak::f1)
      .def_readonly("f2", &spectral::Peak::f2)
      .def_readonly("magnitude", &spectral::Peak::magnitude)
      .def("__repr__", [](const spectral::Peak& p) {
        return "Peak(f1=" + std::to_string(p.f1) + ", f2=" + std::to_string(p.f2) +
               ", magnitude=" + std::to_string(p.magnitude) + ")";
      });

  py::class_<spectral::CalibrationLine>(m, "CalibrationLine")
      .def_readonly("slope", &spectral::CalibrationLine::slope)
      .def_readonly("anchor_coefficient", &spectral::CalibrationLine::anchor_coefficient)
      .def_readonly("anchor_intensity", &spectral::CalibrationLine::anchor_intensity);

  py::class_<protocol::PrepsyConfig>(m, "ProtocolConfig");

  py::class_<experiment::ExperimentFile>(m, "ExperimentFile")
      .def_readonly("echo", &experiment::ExperimentFile::echo);

  py::class_<experiment::Materialized>(m, "Materialized")
      .def_property_readonly("initial_state",
                             [](const experiment::Materialized& x) { return x.initial.matrix; })
      .def_property_readonly("dims",
                             [](const experiment::Materialized& x) { return x.structure.dims; })
      .def_readonly("config", &experiment::Materialized::config)
      .def_readonly("analysis", &experiment::Materialized::analysis)
      .def_readonly("max_eigen_gap", &experiment::Materialized::max_eigen_gap)
      .def_readonly("adiabatic_ok", &experiment::Materialized::adiabatic_ok);

  // ------------------------------- states --------------------------------

  m.def(
      "correlated_state",
      [](double cx, double cy, double cz) {
        return states::build_maximally_mixed_marginal({cx, cy, cz}).matrix;
      },
      py::arg("c_x"), py::arg("c_y") = 0.0, py::arg("c_z") = 0.0,
      "Two-qubit state with maximally mixed marginals and diagonal correlation tensor");

  m.def(
      "fano_state",
      [](const Eigen::Vector3d& u, const Eigen::Vector3d& v, const Eigen::Matrix3d& t) {
        states::FanoCoefficients f;
        for (int a = 0; a < 3; ++a) {
          f.u[static_cast<size_t>(a)] = u(a);
          f.v[static_cast<size_t>(a)] = v(a);
          for (int b = 0; b < 3; ++b) f.t[static_cast<size_t>(a)][static_cast<size_t>(b)] = t(a, b);
        }
        return states::build_fano(f).matrix;
      },
      py::arg("u"), py::arg("v"), py::arg("t"),
      "Two-qubit state from local Bloch vectors and the full correlation tensor");

  m.def(
      "fano_coefficients",
      [](const ComplexMatrix& rho) {
        const states::FanoCoefficients f = states::fano_coefficients(state_from(rho, {2, 2}));
        Eigen::Vector3d u, v;
        Eigen::Matrix3d t;
        for (int a = 0; a < 3; ++a) {
          u(a) = f.u[static_cast<size_t>(a)];
          v(a) = f.v[static_cast<size_t>(a)];
          for (int b = 0; b < 3; ++b) t(a, b) = f.t[static_cast<size_t>(a)][static_cast<size_t>(b)];
        }
        return py::make_tuple(u, v, t);
      },
      py::arg("rho"), "Local Bloch vectors and correlation tensor (u, v, t) of a two-qubit state");

  m.def(
      "gibbs_state",
      [](const ComplexMatrix& hamiltonian, double beta, const std::vector<Index>& dims) {
        return states::gibbs_state(hamiltonian, beta, structure_from(dims)).matrix;
      },
      py::arg("hamiltonian"), py::arg("beta"), py::arg("dims"),
      "Thermal state exp(-beta H)/Z");

  m.def(
      "decompose",
      [](const ComplexMatrix& rho, const std::vector<Index>& dims) {
        const states::BipartiteDecomposition parts = states::decompose(state_from(rho, dims));
        return py::make_tuple(parts.rho.matrix, parts.tau.matrix, parts.chi);
      },
      py::arg("rho"), py::arg("dims"),
      "Split a bipartite state into (system marginal, environment marginal, remainder)");

  // ------------------------------- models --------------------------------

  m.def(
      "toy_hamiltonian",
      [](double omega_s, double omega_e, const Eigen::Matrix3d& lam) {
        models::ToyModelParams p;
        p.omega_s = omega_s;
        p.omega_e = omega_e;
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j)
            p.lambda[static_cast<size_t>(i)][static_cast<size_t>(j)] = lam(i, j);
        return models::toy_hamiltonian(p);
      },
      py::arg("omega_s") = 0.0, py::arg("omega_e") = 0.0,
      py::arg("coupling") = Eigen::Matrix3d::Zero().eval(),
      "Two-spin Hamiltonian (angular-frequency parameters)");

  m.def(
      "nv_pairwise_hamiltonian",
      [](Index n_spins, double xi) {
        return models::nv_pairwise_hamiltonian(models::NvEnsembleParams::uniform(n_spins, xi));
      },
      py::arg("n_spins"), py::arg("xi"));

  m.def(
      "nv_collective_hamiltonian",
      [](Index n_spins, double xi) {
        return models::nv_collective_hamiltonian(models::NvEnsembleParams::uniform(n_spins, xi));
      },
      py::arg("n_spins"), py::arg("xi"));

  m.def(
      "enumerate_levels",
      [](Index n_spins, double xi) {
        const models::LevelTable table = models::enumerate_levels(n_spins, xi);
        py::list levels;
        for (const models::Level& lv : table.levels) {
          py::dict d;
          d["j"] = lv.j;
          d["m_abs"] = lv.m_abs;
          d["energy"] = lv.energy;
          d["multiplicity"] = lv.multiplicity;
          levels.append(d);
        }
        py::dict out;
        out["n_spins"] = table.n_spins;
        out["levels"] = levels;
        out["transition_energies"] = table.transition_energies;
        out["distinct_energy_count"] = table.distinct_energy_count;
        return out;
      },
      py::arg("n_spins"), py::arg("xi"),
      "Closed-form (j,|m|) level table of the collective model");

  // ------------------------------ dynamics -------------------------------

  m.def(
      "evolve",
      [](const ComplexMatrix& rho, const std::vector<Index>& dims,
         const ComplexMatrix& hamiltonian, double t,
         const std::vector<std::pair<ComplexMatrix, double>>& channels, double dt,
         const std::string& method) {
        dynamics::EvolutionSpec spec;
        spec.hamiltonian = hamiltonian;
        spec.channels = channels_from(channels);
        spec.dt = dt;
        spec.method = method_from_string(method);
        return dynamics::evolve(state_from(rho, dims), spec, t).matrix;
      },
      py::arg("rho"), py::arg("dims"), py::arg("hamiltonian"), py::arg("t"),
      py::arg("channels") = std::vector<std::pair<ComplexMatrix, double>>{},
      py::arg("dt") = 0.0, py::arg("method") = "auto",
      py::call_guard<py::gil_scoped_release>(),
      "Closed or dissipative evolution by time t");

  // ------------------------------ protocol -------------------------------

  m.def(
      "make_config",
      [](const std::vector<ComplexVector>& projections, const ComplexMatrix& hamiltonian,
         Index t1_count, double t1_spacing, Index t2_count, double t2_spacing,
         const ComplexVector& standard, const ComplexVector& observable,
         const ComplexMatrix& pulse_generator, double pulse_angle,
         const std::vector<std::pair<ComplexMatrix, double>>& channels, double dt,
         const std::string& method, int workers, const std::vector<std::string>& labels) {
        protocol::PrepsyConfig config;
        config.projections = projections;
        config.projection_labels = labels;
        config.standard_state = standard.size() ? standard : default_plus();
        config.observable = observable.size() ? observable : default_plus();
        config.pulse.generator =
            pulse_generator.size() ? pulse_generator : (0.5 * linalg::sigma_z()).eval();
        config.pulse.angle = pulse_angle;
        config.t1 = {t1_count, t1_spacing};
        config.t2 = {t2_count, t2_spacing};
        config.evolution.hamiltonian = hamiltonian;
        config.evolution.channels = channels_from(channels);
        config.evolution.dt = dt;
        config.evolution.method = method_from_string(method);
        config.workers = workers;
        return config;
      },
      py::arg("projections"), py::arg("hamiltonian"), py::arg("t1_count"),
      py::arg("t1_spacing"), py::arg("t2_count"), py::arg("t2_spacing"),
      py::arg("standard") = ComplexVector(), py::arg("observable") = ComplexVector(),
      py::arg("pulse_generator") = ComplexMatrix(), py::arg("pulse_angle") = kPi / 2.0,
      py::arg("channels") = std::vector<std::pair<ComplexMatrix, double>>{},
      py::arg("dt") = 0.0, py::arg("method") = "auto", py::arg("workers") = 0,
      py::arg("labels") = std::vector<std::string>{},
      "Bundle protocol settings for run_protocol/calibrate");

  m.def(
      "run_protocol",
      [](const ComplexMatrix& rho, const std::vector<Index>& dims,
         const protocol::PrepsyConfig& config) {
        return protocol::run_prepsy(state_from(rho, dims), config);
      },
      py::arg("rho"), py::arg("dims"), py::arg("config"),
      py::call_guard<py::gil_scoped_release>(),
      "Conditional prepare, delay, pulse, delay, record for every projection");

  m.def("difference_signals", &protocol::difference_signals, py::arg("signals"),
        "All pairwise differences signal_i - signal_j, i < j");

  m.def(
      "conditional_prepare",
      [](const ComplexMatrix& rho, const std::vector<Index>& dims, const ComplexVector& mvec,
         const ComplexVector& standard) {
        const protocol::PreparedState prep =
            protocol::conditional_prepare(state_from(rho, dims), mvec, standard);
        return py::make_tuple(prep.state.matrix, prep.probability);
      },
      py::arg("rho"), py::arg("dims"), py::arg("projection"), py::arg("standard"),
      "Project factor 0, reset it, and return (state, branch probability)");

  m.def(
      "retained_correlation",
      [](const ComplexMatrix& chi, const ComplexVector& mvec, const std::vector<Index>& dims) {
        return protocol::retained_correlation(chi, mvec, structure_from(dims));
      },
      py::arg("chi"), py::arg("projection"), py::arg("dims"),
      "The part of the correlation remainder that survives conditioning");

  m.def(
      "signal_chi_derivative",
      [](const protocol::PrepsyConfig& config, Index i_s, Index j_s, Index i_e, Index j_e,
         double t1, double t2, const ComplexMatrix& system_marginal) {
        return protocol::signal_chi_derivative(config, {i_s, j_s, i_e, j_e}, t1, t2,
                                               system_marginal);
      },
      py::arg("config"), py::arg("i_s"), py::arg("j_s"), py::arg("i_e"), py::arg("j_e"),
      py::arg("t1"), py::arg("t2"), py::arg("system_marginal") = ComplexMatrix(),
      "Closed-form signal derivative for one correlation matrix element");

  // ------------------------------ spectral -------------------------------

  m.def("fft2", &spectral::fft2, py::arg("signal"),
        py::arg("options") = spectral::AnalysisOptions{},
        "Centered 2D Fourier magnitude of a time-domain signal");

  m.def("detect_peaks", &spectral::detect_peaks, py::arg("spectrum"),
        py::arg("options") = spectral::AnalysisOptions{},
        "Strict local maxima above the relative threshold");

  m.def("total_intensity", &spectral::total_intensity, py::arg("spectrum"),
        "Sum of every magnitude entry");

  m.def("calibrate", &spectral::calibrate, py::arg("config"), py::arg("beta"), py::arg("axis"),
        py::arg("options") = spectral::AnalysisOptions{},
        py::call_guard<py::gil_scoped_release>(),
        "Intensity-per-coefficient line anchored on a thermal state");

  m.def("measure_correlation", &spectral::measure_correlation, py::arg("line"),
        py::arg("intensity"), "Invert the calibration line");

  // ----------------------------- experiment ------------------------------

  m.def("parse_experiment", &experiment::parse_experiment, py::arg("path"),
        "Parse and validate an experiment file");

  m.def("parse_experiment_text", &experiment::parse_experiment_text, py::arg("text"),
        py::arg("origin") = std::string("<string>"),
        "Parse experiment text (origin names the source in errors)");

  m.def("materialize", &experiment::materialize, py::arg("experiment"),
        "Build the initial state and protocol config an experiment describes");

  m.def(
      "run_experiment",
      [](const experiment::ExperimentFile& exp, const std::string& out_dir, int workers) {
        const experiment::RunReport report = experiment::run_experiment(exp, out_dir, workers);
        py::dict out;
        out["invariants_ok"] = report.invariants_ok;
        out["null_result"] = report.null_result;
        out["manifest_path"] = report.manifest_path;
        return out;
      },
      py::arg("experiment"), py::arg("out_dir"), py::arg("workers") = 0,
      "Execute the full pipeline into a directory; returns the run report");

  m.def(
      "verify_run",
      [](const std::string& out_dir) {
        const experiment::VerifyReport report = experiment::verify_run(out_dir);
        py::list checks;
        for (const experiment::VerifyCheck& c : report.checks) {
          py::dict d;
          d["name"] = c.name;
          d["pass"] = c.pass;
          d["detail"] = c.detail;
          checks.append(d);
        }
        py::dict out;
        out["ok"] = report.ok();
        out["checks"] = checks;
        return out;
      },
      py::arg("out_dir"), "Re-check a completed run directory");
}
