#pragma once

#include <string>
#include <vector>

#include "imlab/config.hpp"
#include "imlab/injection.hpp"
#include "imlab/observability.hpp"
#include "imlab/scenario.hpp"

namespace imlab {

inline constexpr const char* kToolVersion = "1.0.0";

// A finished experiment: column names plus numeric rows, ready for CSV.
struct ExperimentTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

// Locked-rotor saliency characterization. For every (flux level, stator
// speed) grid point, runs the injection experiment over the configured
// orientations, fits (a, b, sigma), and puts the fit next to the values read
// directly off the energy hessian. Failed equilibria yield NaN rows.
ExperimentTable run_characterize(const LabConfig& config);

// Condition numbers of the injection observability matrices along the
// zero-stator-speed line, over the configured flux/torque grid.
ExperimentTable run_observability(const LabConfig& config);

struct ConvergenceResult {
  ExperimentTable table;
  // err(freq_k) / err(freq_{k+1}) for consecutive frequencies, for the
  // ripple-slope extraction error and the mean-state deviation.
  std::vector<double> hf_err_ratios;
  std::vector<double> state_err_ratios;
};

// Extraction accuracy against the averaged-model prediction as the injection
// frequency is swept; also measures the ripple peak.
ConvergenceResult run_convergence(const LabConfig& config);

// Time-domain run of a piecewise-constant scenario with the low/high
// frequency decomposition of the stator current appended.
ExperimentTable run_simulate(const LabConfig& config, const Scenario& scenario);

// Write `<out_dir>/<table.name>.csv` with metadata comment lines
// (tool_version, config_hash, timestamp) before the header. Returns the path.
std::string write_table_csv(const ExperimentTable& table,
                            const std::string& out_dir, const LabConfig& config);

// Companion gnuplot scripts referencing the CSV by relative path. Returns the
// paths written.
std::vector<std::string> write_plot_scripts(const ExperimentTable& table,
                                            const std::string& out_dir,
                                            const LabConfig& config);

// Wrap an angle difference into (-pi, pi].
double wrap_angle(double x);

// Mean of is_hf over the tail of a demodulated injection run at a fixed
// operating point; shared by the characterize and convergence drivers.
Vec2 extract_ripple_slope(const Equilibrium& eq, const Vec2& u_tilde,
                          const LabConfig& config, const EnergyModel& model,
                          double omega_hz, int total_periods,
                          int discard_periods);

}  // namespace imlab
