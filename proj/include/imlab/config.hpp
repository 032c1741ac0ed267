#pragma once

#include <string>
#include <vector>

#include "imlab/dynamics.hpp"
#include "imlab/injection.hpp"

namespace imlab {

enum class MagneticsKind { linear, saturated };

// Full description of a lab run. Defaults reproduce the reference setup:
// 0.75 kW motor, quartic saturation model, 20 V / 500 Hz square injection.
struct LabConfig {
  MotorParams motor;

  MagneticsKind magnetics_kind = MagneticsKind::saturated;
  SaturatedMagParams magnetics;  // eps ignored for the linear kind

  WaveformKind waveform = WaveformKind::square;
  double injection_hz = 500.0;
  double injection_amp = 20.0;    // [V]
  double injection_theta = 0.0;   // orientation of u_tilde [rad]

  // 0 means "derive": T_inj / samples_per_period when injecting, else 1e-4 s.
  double sim_dt = 0.0;
  double sim_duration = 0.0;      // 0 means command-specific default
  int samples_per_period = 200;

  // Peak rated voltage over rated electrical speed; the flux sweeps are
  // expressed as percentages of this.
  double nominal_flux = 400.0 / (2.0 * M_PI * 50.0);

  std::vector<double> characterize_flux_pcts{5, 75, 100, 125, 150};
  double characterize_omega_s_max = 2.0 * M_PI * 10.0;
  int characterize_omega_s_count = 25;
  int orientation_count = 16;

  std::vector<double> observability_flux_pcts{50, 100, 150};
  double torque_min = -5.0;
  double torque_max = 5.0;
  double torque_step = 0.1;

  std::vector<double> convergence_freqs{250, 500, 1000, 2000};

  double rank_tol = 1e-8;  // relative singular-value cutoff for ranks

  bool per_unit = false;
  int parallel = 1;

  InjectionSpec injection_spec() const {
    InjectionSpec s;
    s.waveform = waveform;
    s.omega_hz = injection_hz;
    s.u_tilde = injection_amp *
                Vec2(std::cos(injection_theta), std::sin(injection_theta));
    return s;
  }

  // Step used by the simulation commands; see sim_dt.
  double effective_dt(bool injecting) const;

  std::vector<double> torque_grid() const;
  std::vector<double> omega_s_grid() const;
};

// Parse the flat `section.key = value` text format. Unknown keys, malformed
// values and out-of-range settings raise ConfigError with a line number.
LabConfig parse_config(const std::string& text);
LabConfig load_config_file(const std::string& path);

// Canonical serialization: every key in a fixed order, full precision.
// parse_config(serialize_config(c)) reproduces c.
std::string serialize_config(const LabConfig& c);

// FNV-1a hash of the canonical serialization, as fixed-width hex.
std::string config_hash(const LabConfig& c);

const char* to_string(MagneticsKind k);
const char* to_string(WaveformKind k);

// Owning model built from the config.
std::unique_ptr<EnergyModel> make_model(const LabConfig& c);

}  // namespace imlab
