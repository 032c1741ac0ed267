// Python bindings for the core operations: energy models, equilibria,
// simulation, injection filters and the observability reports.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "imlab/experiments.hpp"

namespace py = pybind11;
using namespace imlab;

namespace {

Eigen::MatrixXd vec2_rows(const std::vector<Vec2>& xs) {
  Eigen::MatrixXd m(xs.size(), 2);
  for (std::size_t i = 0; i < xs.size(); ++i) m.row(i) = xs[i].transpose();
  return m;
}

Eigen::MatrixXd table_matrix(const ExperimentTable& t) {
  Eigen::MatrixXd m(t.rows.size(), t.columns.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (std::size_t j = 0; j < t.rows[i].size(); ++j) m(i, j) = t.rows[i][j];
  }
  return m;
}

}  // namespace

PYBIND11_MODULE(_imlab, m) {
  m.doc() = "Saturated induction-motor injection & observability lab";
  m.attr("__version__") = kToolVersion;

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<NumericError>(m, "NumericError");

  py::class_<LinearMagParams>(m, "LinearMagParams")
      .def(py::init<>())
      .def(py::init([](double Lm, double Ll) {
             return LinearMagParams{Lm, Ll};
           }),
           py::arg("Lm"), py::arg("Ll"))
      .def_readwrite("Lm", &LinearMagParams::Lm)
      .def_readwrite("Ll", &LinearMagParams::Ll);

  py::class_<SaturatedMagParams>(m, "SaturatedMagParams")
      .def(py::init<>())
      .def(py::init([](double Lm, double Ll, double eps_m, double eps_l) {
             return SaturatedMagParams{Lm, Ll, eps_m, eps_l};
           }),
           py::arg("Lm"), py::arg("Ll"), py::arg("eps_m"), py::arg("eps_l"))
      .def_readwrite("Lm", &SaturatedMagParams::Lm)
      .def_readwrite("Ll", &SaturatedMagParams::Ll)
      .def_readwrite("eps_m", &SaturatedMagParams::eps_m)
      .def_readwrite("eps_l", &SaturatedMagParams::eps_l);

  py::class_<MotorParams>(m, "MotorParams")
      .def(py::init<>())
      .def(py::init([](double Rs, double Rr, int np, double Jl) {
             return MotorParams{Rs, Rr, np, Jl};
           }),
           py::arg("Rs"), py::arg("Rr"), py::arg("np"), py::arg("Jl"))
      .def_readwrite("Rs", &MotorParams::Rs)
      .def_readwrite("Rr", &MotorParams::Rr)
      .def_readwrite("np", &MotorParams::np)
      .def_readwrite("Jl", &MotorParams::Jl);

  py::class_<HessianBlocks>(m, "HessianBlocks")
      .def_readonly("ss", &HessianBlocks::ss)
      .def_readonly("sr", &HessianBlocks::sr)
      .def_readonly("rr", &HessianBlocks::rr)
      .def("rs", &HessianBlocks::rs);

  py::class_<ThirdContractions>(m, "ThirdContractions")
      .def_readonly("ss", &ThirdContractions::ss)
      .def_readonly("sr", &ThirdContractions::sr);

  py::class_<SaliencyParams>(m, "SaliencyParams")
      .def(py::init<>())
      .def(py::init([](double a, double b, double sigma) {
             return SaliencyParams{a, b, sigma};
           }),
           py::arg("a"), py::arg("b"), py::arg("sigma"))
      .def_readwrite("a", &SaliencyParams::a)
      .def_readwrite("b", &SaliencyParams::b)
      .def_readwrite("sigma", &SaliencyParams::sigma)
      .def("__repr__", [](const SaliencyParams& sp) {
        return "SaliencyParams(a=" + std::to_string(sp.a) +
               ", b=" + std::to_string(sp.b) +
               ", sigma=" + std::to_string(sp.sigma) + ")";
      });

  py::class_<EnergyModel, std::shared_ptr<EnergyModel>>(m, "EnergyModel")
      .def("energy", &EnergyModel::energy, py::arg("phis"), py::arg("phir"))
      .def(
          "currents",
          [](const EnergyModel& self, const Vec2& phis, const Vec2& phir) {
            Vec2 is, ir;
            self.currents(phis, phir, is, ir);
            return py::make_tuple(is, ir);
          },
          py::arg("phis"), py::arg("phir"))
      .def("hessian_blocks", &EnergyModel::hessian_blocks, py::arg("phis"),
           py::arg("phir"))
      .def("third_contractions", &EnergyModel::third_contractions,
           py::arg("phis"), py::arg("phir"), py::arg("u"));

  py::class_<LinearEnergyModel, EnergyModel,
             std::shared_ptr<LinearEnergyModel>>(m, "LinearEnergyModel")
      .def(py::init<const LinearMagParams&>(), py::arg("params"));

  py::class_<SaturatedEnergyModel, EnergyModel,
             std::shared_ptr<SaturatedEnergyModel>>(m, "SaturatedEnergyModel")
      .def(py::init<const SaturatedMagParams&>(), py::arg("params"));

  m.def("torque_rotor_side", &torque_rotor_side, py::arg("phir"),
        py::arg("ir"), py::arg("np"));
  m.def("torque_stator_side", &torque_stator_side, py::arg("phis"),
        py::arg("is_"), py::arg("np"));
  m.def("saliency_params", &saliency_params, py::arg("hss"));
  m.def("saliency_matrix", &saliency_matrix, py::arg("params"));

  py::class_<ImState>(m, "ImState")
      .def(py::init<>())
      .def_readwrite("phis", &ImState::phis)
      .def_readwrite("phir", &ImState::phir)
      .def_readwrite("omega", &ImState::omega);

  py::class_<ImInputs>(m, "ImInputs")
      .def(py::init<>())
      .def_readwrite("us", &ImInputs::us)
      .def_readwrite("omega_s", &ImInputs::omega_s)
      .def_readwrite("Tl", &ImInputs::Tl);

  py::class_<Equilibrium>(m, "Equilibrium")
      .def_readonly("state", &Equilibrium::state)
      .def_readonly("inputs", &Equilibrium::inputs)
      .def_readonly("is_", &Equilibrium::is)
      .def_readonly("ir", &Equilibrium::ir)
      .def_readonly("hess", &Equilibrium::hess)
      .def_readonly("omega_g", &Equilibrium::omega_g)
      .def_readonly("iterations", &Equilibrium::iterations);

  py::class_<Trajectory>(m, "Trajectory")
      .def_property_readonly(
          "t",
          [](const Trajectory& tr) {
            return Eigen::Map<const Eigen::VectorXd>(tr.t.data(), tr.t.size())
                .eval();
          })
      .def_property_readonly("phis",
                             [](const Trajectory& tr) {
                               std::vector<Vec2> v;
                               v.reserve(tr.size());
                               for (const auto& s : tr.states)
                                 v.push_back(s.phis);
                               return vec2_rows(v);
                             })
      .def_property_readonly("phir",
                             [](const Trajectory& tr) {
                               std::vector<Vec2> v;
                               v.reserve(tr.size());
                               for (const auto& s : tr.states)
                                 v.push_back(s.phir);
                               return vec2_rows(v);
                             })
      .def_property_readonly("omega",
                             [](const Trajectory& tr) {
                               Eigen::VectorXd w(tr.size());
                               for (std::size_t i = 0; i < tr.size(); ++i)
                                 w(i) = tr.states[i].omega;
                               return w;
                             })
      .def_property_readonly(
          "is_", [](const Trajectory& tr) { return vec2_rows(tr.is); })
      .def_property_readonly("dt", [](const Trajectory& tr) { return tr.dt; })
      .def("__len__", &Trajectory::size);

  m.def("state_derivative", &state_derivative, py::arg("state"),
        py::arg("inputs"), py::arg("model"), py::arg("params"),
        py::arg("locked_rotor") = false);
  m.def("simulate", &simulate, py::arg("state0"), py::arg("input_signal"),
        py::arg("t_end"), py::arg("dt"), py::arg("model"), py::arg("params"),
        py::arg("locked_rotor") = false);
  m.def("equilibrium_residual", &equilibrium_residual, py::arg("eq"),
        py::arg("model"), py::arg("params"));
  m.def("equilibrium_locked_rotor", &equilibrium_locked_rotor,
        py::arg("phir_target"), py::arg("omega_s"), py::arg("model"),
        py::arg("params"));
  m.def("equilibrium_zero_stator_speed", &equilibrium_zero_stator_speed,
        py::arg("phir_mag"), py::arg("Tl"), py::arg("model"),
        py::arg("params"));

  py::enum_<WaveformKind>(m, "WaveformKind")
      .value("square", WaveformKind::square)
      .value("sine", WaveformKind::sine);

  py::class_<Waveform>(m, "Waveform")
      .def(py::init([](WaveformKind k) { return Waveform{k}; }),
           py::arg("kind"))
      .def("s", &Waveform::s, py::arg("sigma"))
      .def("S", &Waveform::S, py::arg("sigma"))
      .def("mean_S2", &Waveform::mean_S2)
      .def("S_peak", &Waveform::S_peak);

  py::class_<InjectionSpec>(m, "InjectionSpec")
      .def(py::init<>())
      .def_readwrite("waveform", &InjectionSpec::waveform)
      .def_readwrite("omega_hz", &InjectionSpec::omega_hz)
      .def_readwrite("u_tilde", &InjectionSpec::u_tilde);

  m.def("predicted_virtual_current", &predicted_virtual_current,
        py::arg("model"), py::arg("phis_lf"), py::arg("phir_lf"),
        py::arg("u_tilde"));
  m.def(
      "demodulate",
      [](const Trajectory& traj, const InjectionSpec& spec) {
        const Demodulation d = demodulate(traj, spec);
        py::dict out;
        out["samples_per_period"] = d.samples_per_period;
        out["lf_valid_from"] = d.lf_valid_from;
        out["hf_valid_from"] = d.hf_valid_from;
        out["is_lf"] = vec2_rows(d.is_lf);
        out["is_hf"] = vec2_rows(d.is_hf);
        return out;
      },
      py::arg("traj"), py::arg("spec"));
  m.def("fit_saliency", &fit_saliency, py::arg("samples"), py::arg("u_mag"));

  py::class_<CurrentRateTerms>(m, "CurrentRateTerms")
      .def_readonly("flux_gain", &CurrentRateTerms::flux_gain)
      .def_readonly("rotor_decay", &CurrentRateTerms::rotor_decay)
      .def_readonly("cross_rotation", &CurrentRateTerms::cross_rotation)
      .def_readonly("speed_gain", &CurrentRateTerms::speed_gain);

  py::class_<LinearizedModel>(m, "LinearizedModel")
      .def_readonly("A", &LinearizedModel::A)
      .def_readonly("C", &LinearizedModel::C)
      .def_readonly("Cv", &LinearizedModel::Cv);

  py::class_<ObservabilityReport>(m, "ObservabilityReport")
      .def_readonly("obs_plain", &ObservabilityReport::obs_plain)
      .def_readonly("obs_injected", &ObservabilityReport::obs_injected)
      .def_readonly("obs_inversion", &ObservabilityReport::obs_inversion)
      .def_readonly("rank_plain", &ObservabilityReport::rank_plain)
      .def_readonly("rank_injected", &ObservabilityReport::rank_injected)
      .def_readonly("cond_injected", &ObservabilityReport::cond_injected)
      .def_readonly("cond_inversion", &ObservabilityReport::cond_inversion)
      .def_readonly("rate", &ObservabilityReport::rate)
      .def_readonly("lin", &ObservabilityReport::lin);

  m.def("current_rate_terms", &current_rate_terms, py::arg("eq"),
        py::arg("params"));
  m.def("obs_matrix", &obs_matrix, py::arg("eq"), py::arg("params"));
  m.def("obs_matrix_extended", &obs_matrix_extended, py::arg("eq"),
        py::arg("params"));
  m.def("linearize_with_injection", &linearize_with_injection, py::arg("eq"),
        py::arg("u_tilde"), py::arg("params"), py::arg("model"));
  m.def("injection_obs_matrix", &injection_obs_matrix, py::arg("lin"));
  m.def("flux_inversion_matrix", &flux_inversion_matrix, py::arg("lin"));
  m.def("torque_extended_obs_matrix", &torque_extended_obs_matrix,
        py::arg("eq"), py::arg("u_tilde"), py::arg("params"), py::arg("model"));
  m.def("numerical_rank", &numerical_rank, py::arg("m"),
        py::arg("tol_rel") = 1e-8);
  m.def("condition_number", &condition_number, py::arg("m"));
  m.def(
      "analyze_equilibrium",
      [](const Equilibrium& eq, const Vec2& u_tilde, const EnergyModel& model,
         const MotorParams& params, double rank_tol, bool per_unit) {
        ObservabilityOptions opts;
        opts.rank_tol = rank_tol;
        opts.per_unit = per_unit;
        return analyze_equilibrium(eq, u_tilde, model, params, opts);
      },
      py::arg("eq"), py::arg("u_tilde"), py::arg("model"), py::arg("params"),
      py::arg("rank_tol") = 1e-8, py::arg("per_unit") = false);

  // Experiment drivers working on the text config format.
  m.def("default_config_text",
        []() { return serialize_config(LabConfig{}); });
  m.def("config_hash_text",
        [](const std::string& text) { return config_hash(parse_config(text)); });
  const auto run_from_text = [](const std::string& text,
                                const std::string& which) {
    const LabConfig config = parse_config(text);
    ExperimentTable table;
    if (which == "characterize") table = run_characterize(config);
    else if (which == "observability") table = run_observability(config);
    else if (which == "convergence") table = run_convergence(config).table;
    else throw ConfigError("unknown experiment '" + which + "'");
    return py::make_tuple(table.columns, table_matrix(table));
  };
  m.def(
      "run_experiment",
      [run_from_text](const std::string& config_text, const std::string& name) {
        return run_from_text(config_text, name);
      },
      py::arg("config_text"), py::arg("name"),
      "Run characterize/observability/convergence; returns (columns, rows)");
}
