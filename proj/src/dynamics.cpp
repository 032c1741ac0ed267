#include "imlab/dynamics.hpp"

#include <cmath>
#include <sstream>

namespace imlab {

namespace {

void check_params(const MotorParams& p) {
  if (!(p.Rs > 0.0) || !(p.Rr > 0.0) || p.np <= 0 || !(p.Jl > 0.0)) {
    throw ConfigError("motor parameters must be strictly positive");
  }
}

bool finite(const ImState& s) {
  return s.phis.allFinite() && s.phir.allFinite() && std::isfinite(s.omega);
}

ImState axpy(const ImState& x, double a, const ImState& d) {
  ImState out;
  out.phis = x.phis + a * d.phis;
  out.phir = x.phir + a * d.phir;
  out.omega = x.omega + a * d.omega;
  return out;
}

// Stator flux solving the rotor steady state Rr ir + slip J phir = 0 for the
// model linearized at the origin. Exact for quadratic energies, a Newton
// starting point otherwise.
Vec2 linear_guess_phis(const Vec2& phir, double slip, const EnergyModel& model,
                       const MotorParams& params) {
  const HessianBlocks h0 = model.hessian_blocks(Vec2::Zero(), Vec2::Zero());
  const Vec2 rhs = -(slip / params.Rr) * jrot(phir) - h0.rr * phir;
  return h0.rs().partialPivLu().solve(rhs);
}

}  // namespace

ImState state_derivative(const ImState& state, const ImInputs& inputs,
                         const EnergyModel& model, const MotorParams& params,
                         bool locked_rotor) {
  Vec2 is, ir;
  model.currents(state.phis, state.phir, is, ir);
  ImState d;
  d.phis = inputs.us - params.Rs * is - inputs.omega_s * jrot(state.phis);
  d.phir = -params.Rr * ir - (inputs.omega_s - state.omega) * jrot(state.phir);
  d.omega = locked_rotor
                ? 0.0
                : (params.np / params.Jl) *
                      (torque_stator_side(state.phis, is, params.np) - inputs.Tl);
  return d;
}

Trajectory simulate(const ImState& state0, const InputSignal& input_signal,
                    double t_end, double dt, const EnergyModel& model,
                    const MotorParams& params, bool locked_rotor) {
  check_params(params);
  if (!(dt > 0.0) || !(t_end >= 0.0)) {
    throw ConfigError("simulate: need dt > 0 and t_end >= 0");
  }
  const auto rhs = [&](const ImState& s, const ImInputs& u) {
    return state_derivative(s, u, model, params, locked_rotor);
  };

  const std::size_t steps = static_cast<std::size_t>(std::llround(t_end / dt));
  Trajectory traj;
  traj.dt = dt;
  traj.t.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.is.reserve(steps + 1);
  traj.inputs.reserve(steps + 1);

  ImState x = state0;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const ImInputs u0 = input_signal(t);
    if (!finite(x)) {
      std::ostringstream msg;
      msg << "simulate: state diverged at t = " << t;
      throw NumericError(msg.str());
    }
    Vec2 is, ir;
    model.currents(x.phis, x.phir, is, ir);
    traj.t.push_back(t);
    traj.states.push_back(x);
    traj.is.push_back(is);
    traj.inputs.push_back(u0);
    if (k == steps) break;

    const ImInputs uh = input_signal(t + 0.5 * dt);
    const ImInputs u1 = input_signal(t + dt);
    const ImState k1 = rhs(x, u0);
    const ImState k2 = rhs(axpy(x, 0.5 * dt, k1), uh);
    const ImState k3 = rhs(axpy(x, 0.5 * dt, k2), uh);
    const ImState k4 = rhs(axpy(x, dt, k3), u1);
    x.phis += (dt / 6.0) * (k1.phis + 2.0 * (k2.phis + k3.phis) + k4.phis);
    x.phir += (dt / 6.0) * (k1.phir + 2.0 * (k2.phir + k3.phir) + k4.phir);
    x.omega += (dt / 6.0) * (k1.omega + 2.0 * (k2.omega + k3.omega) + k4.omega);
  }
  return traj;
}

Eigen::Matrix<double, 5, 1> equilibrium_residual(const Equilibrium& eq,
                                                 const EnergyModel& model,
                                                 const MotorParams& params) {
  Vec2 is, ir;
  model.currents(eq.state.phis, eq.state.phir, is, ir);
  Eigen::Matrix<double, 5, 1> r;
  r.segment<2>(0) = eq.inputs.us - params.Rs * is -
                    eq.inputs.omega_s * jrot(eq.state.phis);
  r.segment<2>(2) =
      -params.Rr * ir - (eq.inputs.omega_s - eq.state.omega) * jrot(eq.state.phir);
  r(4) = torque_stator_side(eq.state.phis, is, params.np) - eq.inputs.Tl;
  return r;
}

Equilibrium equilibrium_locked_rotor(const Vec2& phir_target, double omega_s,
                                     const EnergyModel& model,
                                     const MotorParams& params) {
  check_params(params);
  if (!phir_target.allFinite()) {
    throw ConfigError("equilibrium_locked_rotor: rotor flux must be finite");
  }
  constexpr int kMaxIters = 50;
  constexpr double kTol = 1e-12;

  // Rotor steady state: Rr * ir(phis, phir) + omega_s * J phir = 0.
  const Vec2 drive = omega_s * jrot(phir_target);
  const auto residual = [&](const Vec2& phis) {
    Vec2 is, ir;
    model.currents(phis, phir_target, is, ir);
    return Vec2(params.Rr * ir + drive);
  };

  Vec2 phis = linear_guess_phis(phir_target, omega_s, model, params);
  Vec2 f = residual(phis);
  int iters = 0;
  while (f.norm() > kTol && iters < kMaxIters) {
    const HessianBlocks h = model.hessian_blocks(phis, phir_target);
    const Mat2 jac = params.Rr * h.rs();
    const Vec2 step = jac.partialPivLu().solve(-f);
    double lambda = 1.0;
    Vec2 next = phis + step;
    Vec2 fnext = residual(next);
    while (fnext.norm() > f.norm() && lambda > 1e-8) {
      lambda *= 0.5;
      next = phis + lambda * step;
      fnext = residual(next);
    }
    phis = next;
    f = fnext;
    ++iters;
  }
  if (!(f.norm() <= 1e-9)) {
    std::ostringstream msg;
    msg << "equilibrium_locked_rotor did not converge: residual " << f.norm()
        << " after " << iters << " iterations";
    throw NumericError(msg.str());
  }

  Equilibrium eq;
  eq.state.phis = phis;
  eq.state.phir = phir_target;
  eq.state.omega = 0.0;
  model.currents(phis, phir_target, eq.is, eq.ir);
  eq.inputs.us = params.Rs * eq.is + omega_s * jrot(phis);
  eq.inputs.omega_s = omega_s;
  // The blocking hardware supplies the reaction torque.
  eq.inputs.Tl = torque_stator_side(phis, eq.is, params.np);
  eq.hess = model.hessian_blocks(phis, phir_target);
  eq.omega_g = omega_s;
  eq.iterations = iters;
  return eq;
}

Equilibrium equilibrium_zero_stator_speed(double phir_mag, double Tl,
                                          const EnergyModel& model,
                                          const MotorParams& params) {
  check_params(params);
  if (!std::isfinite(phir_mag) || !std::isfinite(Tl)) {
    throw ConfigError("equilibrium_zero_stator_speed: inputs must be finite");
  }
  constexpr int kMaxIters = 50;
  constexpr double kTol = 1e-12;
  const Vec2 phir(phir_mag, 0.0);

  // Unknowns z = (phis_d, phis_q, omega). Rotor equation with omega_s = 0
  // gives -Rr ir + omega J phir = 0; the third equation is torque balance.
  const auto residual = [&](const Eigen::Vector3d& z) {
    const Vec2 phis = z.head<2>();
    Vec2 is, ir;
    model.currents(phis, phir, is, ir);
    Eigen::Vector3d f;
    f.head<2>() = -params.Rr * ir + z(2) * jrot(phir);
    f(2) = torque_stator_side(phis, is, params.np) - Tl;
    return f;
  };

  // Unsaturated slip relation as the starting point.
  Eigen::Vector3d z;
  const double lam2 = std::max(phir_mag * phir_mag, 1e-12);
  z(2) = -params.Rr * Tl / (params.np * lam2);
  z.head<2>() = linear_guess_phis(phir, -z(2), model, params);

  Eigen::Vector3d f = residual(z);
  int iters = 0;
  while (f.norm() > kTol && iters < kMaxIters) {
    const Vec2 phis = z.head<2>();
    Vec2 is, ir;
    model.currents(phis, phir, is, ir);
    const HessianBlocks h = model.hessian_blocks(phis, phir);
    Eigen::Matrix3d jac = Eigen::Matrix3d::Zero();
    jac.block<2, 2>(0, 0) = -params.Rr * h.rs();
    jac.block<2, 1>(0, 2) = jrot(phir);
    // d/dphis of -np phis.(J is) = -np (J is - Hss J phis).
    jac.block<1, 2>(2, 0) =
        (-params.np * (jrot(is) - h.ss * jrot(phis))).transpose();
    const Eigen::Vector3d step = jac.partialPivLu().solve(-f);
    double lambda = 1.0;
    Eigen::Vector3d next = z + step;
    Eigen::Vector3d fnext = residual(next);
    while (fnext.norm() > f.norm() && lambda > 1e-8) {
      lambda *= 0.5;
      next = z + lambda * step;
      fnext = residual(next);
    }
    z = next;
    f = fnext;
    ++iters;
  }
  if (!(f.norm() <= 1e-9)) {
    std::ostringstream msg;
    msg << "equilibrium_zero_stator_speed: no equilibrium for |phir| = "
        << phir_mag << ", Tl = " << Tl << " (residual " << f.norm() << ")";
    throw NumericError(msg.str());
  }

  Equilibrium eq;
  eq.state.phis = z.head<2>();
  eq.state.phir = phir;
  eq.state.omega = z(2);
  model.currents(eq.state.phis, phir, eq.is, eq.ir);
  eq.inputs.us = params.Rs * eq.is;
  eq.inputs.omega_s = 0.0;
  eq.inputs.Tl = Tl;
  eq.hess = model.hessian_blocks(eq.state.phis, phir);
  eq.omega_g = -z(2);
  eq.iterations = iters;
  return eq;
}

}  // namespace imlab
