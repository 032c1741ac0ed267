#pragma once

#include <functional>
#include <vector>

#include "imlab/magnetics.hpp"
#include "imlab/types.hpp"

namespace imlab {

struct MotorParams {
  double Rs = 13.0;   // stator resistance [ohm]
  double Rr = 10.0;   // rotor resistance [ohm]
  int np = 2;         // pole pairs
  double Jl = 5e-3;   // load inertia [kg m^2]
};

// Electromagnetic state in the rotating dq frame.
struct ImState {
  Vec2 phis = Vec2::Zero();  // stator flux linkage [Wb]
  Vec2 phir = Vec2::Zero();  // rotor flux linkage [Wb]
  double omega = 0.0;        // electrical rotor speed [rad/s]
};

struct ImInputs {
  Vec2 us = Vec2::Zero();  // stator voltage [V]
  double omega_s = 0.0;    // frame (stator) speed [rad/s]
  double Tl = 0.0;         // load torque [N m]
};

// A steady operating point together with everything the linearized analyses
// need at that point.
struct Equilibrium {
  ImState state;
  ImInputs inputs;
  Vec2 is = Vec2::Zero();
  Vec2 ir = Vec2::Zero();
  HessianBlocks hess;
  double omega_g = 0.0;  // slip speed omega_s - omega [rad/s]
  int iterations = 0;    // Newton iterations spent (0 for closed forms)
};

struct Trajectory {
  double dt = 0.0;
  std::vector<double> t;
  std::vector<ImState> states;
  std::vector<Vec2> is;
  std::vector<ImInputs> inputs;  // inputs as applied at each sample time

  std::size_t size() const { return t.size(); }
};

using InputSignal = std::function<ImInputs(double)>;

// Right-hand side of the flux/speed dynamics. With locked_rotor the speed is
// frozen (domega/dt = 0) while the electrical equations keep the current
// omega.
ImState state_derivative(const ImState& state, const ImInputs& inputs,
                         const EnergyModel& model, const MotorParams& params,
                         bool locked_rotor = false);

// Classical fixed-step 4th-order integration from t = 0 to t_end, sampling
// the state, the stator current and the applied inputs every dt. Throws
// NumericError if the state stops being finite.
Trajectory simulate(const ImState& state0, const InputSignal& input_signal,
                    double t_end, double dt, const EnergyModel& model,
                    const MotorParams& params, bool locked_rotor = false);

// Residuals of the three steady-state equations at a claimed equilibrium
// (stator flux, rotor flux and torque balance), as a 5-vector in SI units.
Eigen::Matrix<double, 5, 1> equilibrium_residual(const Equilibrium& eq,
                                                 const EnergyModel& model,
                                                 const MotorParams& params);

// Steady state with the shaft mechanically blocked (omega = 0) and the rotor
// flux held at a prescribed dq value. Solves the rotor equation for the
// stator flux with Newton iterations started from the unsaturated closed
// form, then backs out the required stator voltage. The load-torque slot of
// the result holds the electromagnetic torque taken up by the blocking.
Equilibrium equilibrium_locked_rotor(const Vec2& phir_target, double omega_s,
                                     const EnergyModel& model,
                                     const MotorParams& params);

// Steady state on the zero-stator-speed line: omega_s = 0, rotor flux of the
// given magnitude aligned with the d axis, load torque prescribed. Unknowns
// are the stator flux and the rotor speed. Throws NumericError when no
// equilibrium exists for the requested torque.
Equilibrium equilibrium_zero_stator_speed(double phir_mag, double Tl,
                                          const EnergyModel& model,
                                          const MotorParams& params);

}  // namespace imlab
