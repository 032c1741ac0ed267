#pragma once

#include <vector>

#include "imlab/dynamics.hpp"
#include "imlab/magnetics.hpp"

namespace imlab {

// Coefficients of the first current derivative expressed in the state
// perturbations, after eliminating the rotor flux through the measured
// current relation.
struct CurrentRateTerms {
  Mat2 flux_gain;       // multiplies -delta phis in d/dt(delta is)
  Mat2 rotor_decay;     // Rr (Hrs - Hrr Hsr^-1 Hss)
  Mat2 cross_rotation;  // Hsr J Hsr^-1
  Vec2 speed_gain;      // Hsr J phir, multiplies delta omega
};

// Linearization at an equilibrium with the injection direction baked into the
// virtual-output matrix. States (delta phis, delta phir, delta omega);
// outputs delta is (physical) and delta(Hss u) (virtual).
struct LinearizedModel {
  Eigen::Matrix<double, 5, 5> A;
  Eigen::Matrix<double, 2, 5> C;
  Eigen::Matrix<double, 2, 5> Cv;
};

// Base quantities for the optional per-unit row/column scaling of the
// observability matrices (defaults: rated 400 V peak, 2 A rms, 50 Hz
// electrical, 5 N m).
struct PerUnitBases {
  double voltage = 400.0;
  double current = 2.0 * M_SQRT2;
  double speed = 2.0 * M_PI * 50.0;
  double torque = 5.0;
  double flux() const { return voltage / speed; }
};

struct ObservabilityOptions {
  double rank_tol = 1e-8;           // relative singular-value threshold
  bool per_unit = false;            // scale matrices before rank/cond
  PerUnitBases bases;
};

// Everything the sweeps and reports need at one operating point.
struct ObservabilityReport {
  Eigen::Matrix<double, 6, 6> obs_plain;      // current derivatives only
  Eigen::Matrix<double, 8, 5> obs_injected;   // physical + virtual stack
  Eigen::Matrix<double, 5, 5> obs_inversion;  // algebraic flux reconstruction
  int rank_plain = 0;
  int rank_injected = 0;
  double cond_injected = 0.0;
  double cond_inversion = 0.0;
  CurrentRateTerms rate;
  LinearizedModel lin;
};

CurrentRateTerms current_rate_terms(const Equilibrium& eq,
                                    const MotorParams& params);

// 6x6 observability matrix of the no-injection model; columns ordered
// (delta phis, delta phir, delta omega, delta Tl).
Eigen::Matrix<double, 6, 6> obs_matrix(const Equilibrium& eq,
                                       const MotorParams& params);

// obs_matrix extended by the next derivative row block of the output
// recursion. The extra rows vanish on the zero-stator-speed line, which is
// exactly why differentiating further adds nothing there.
Eigen::Matrix<double, 8, 6> obs_matrix_extended(const Equilibrium& eq,
                                                const MotorParams& params);

LinearizedModel linearize_with_injection(const Equilibrium& eq,
                                         const Vec2& u_tilde,
                                         const MotorParams& params,
                                         const EnergyModel& model);

// Stack (C; Cv; CA; CvA): full rank 5 means the state is recoverable from
// the physical and virtual measurements and their first derivatives.
Eigen::Matrix<double, 8, 5> injection_obs_matrix(const LinearizedModel& lin);

// Stack (C; Cv; second row of CA): the matrix inverted by control schemes
// that reconstruct the fluxes algebraically, with the rotor flux on the
// d axis.
Eigen::Matrix<double, 5, 5> flux_inversion_matrix(const LinearizedModel& lin);

// Six-state extension appending the load torque as a constant disturbance
// state and restoring the true mechanical row, stacked through the second
// output derivative. Full rank 6 means one extra differentiation recovers
// the torque on top of the rank-5 stack.
Eigen::Matrix<double, 10, 6> torque_extended_obs_matrix(
    const Equilibrium& eq, const Vec2& u_tilde, const MotorParams& params,
    const EnergyModel& model);

// Count of singular values above tol_rel times the largest one.
int numerical_rank(const Eigen::MatrixXd& m, double tol_rel = 1e-8);

// Ratio of extreme singular values; +inf when the smallest is zero
// (anything below 1e-14 of the largest counts as zero).
double condition_number(const Eigen::MatrixXd& m);

ObservabilityReport analyze_equilibrium(const Equilibrium& eq,
                                        const Vec2& u_tilde,
                                        const EnergyModel& model,
                                        const MotorParams& params,
                                        const ObservabilityOptions& opts = {});

struct SweepPoint {
  double flux_wb = 0.0;
  double torque = 0.0;
  double cond_os = 0.0;
  double cond_os_prime = 0.0;
  int rank_o = 0;
  bool feasible = false;
};

// Zero-stator-speed equilibria over a (flux, torque) grid; infeasible points
// are flagged rather than fatal.
std::vector<SweepPoint> condition_sweep(const std::vector<double>& flux_levels,
                                        const std::vector<double>& torque_grid,
                                        const Vec2& u_tilde,
                                        const EnergyModel& model,
                                        const MotorParams& params,
                                        const ObservabilityOptions& opts = {});

}  // namespace imlab
