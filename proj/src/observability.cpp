#include "imlab/observability.hpp"

#include <cmath>
#include <limits>

namespace imlab {

namespace {

const Mat2 kJ = jmat();

Mat2 safe_inverse(const Mat2& m, const char* what) {
  auto [smax, smin] = singular_values_2x2(m);
  if (!(smin > 0.0) || smax / smin > 1e12) {
    throw NumericError(std::string("singular matrix in observability: ") + what);
  }
  return m.inverse();
}

// Row scaling for the stacked current-derivative matrix: derivative order k
// divides by current_base * speed_base^k.
Eigen::VectorXd plain_row_scales(const PerUnitBases& b) {
  Eigen::VectorXd s(6);
  const double i = b.current, w = b.speed;
  s << 1.0 / i, 1.0 / i, 1.0 / (i * w), 1.0 / (i * w), 1.0 / (i * w * w),
      1.0 / (i * w * w);
  return s;
}

Eigen::VectorXd plain_col_scales(const PerUnitBases& b) {
  Eigen::VectorXd s(6);
  const double f = b.flux();
  s << f, f, f, f, b.speed, b.torque;
  return s;
}

Eigen::VectorXd state_col_scales(const PerUnitBases& b) {
  Eigen::VectorXd s(5);
  const double f = b.flux();
  s << f, f, f, f, b.speed;
  return s;
}

}  // namespace

CurrentRateTerms current_rate_terms(const Equilibrium& eq,
                                    const MotorParams& params) {
  const HessianBlocks& h = eq.hess;
  const Mat2 sr_inv = safe_inverse(h.sr, "cross hessian block");
  CurrentRateTerms t;
  t.rotor_decay = params.Rr * (h.rs() - h.rr * sr_inv * h.ss);
  t.cross_rotation = h.sr * kJ * sr_inv;
  t.flux_gain = h.sr * t.rotor_decay + eq.inputs.omega_s * h.ss * kJ -
                eq.omega_g * t.cross_rotation * h.ss;
  t.speed_gain = h.sr * jrot(eq.state.phir);
  return t;
}

Eigen::Matrix<double, 6, 6> obs_matrix(const Equilibrium& eq,
                                       const MotorParams& params) {
  const CurrentRateTerms t = current_rate_terms(eq, params);
  const double np = params.np;
  const Mat2 m_inv = safe_inverse(t.flux_gain, "current-rate flux gain");

  Eigen::Matrix<double, 6, 6> o = Eigen::Matrix<double, 6, 6>::Zero();
  o.block<2, 2>(0, 0) = eq.hess.ss;
  o.block<2, 2>(0, 2) = eq.hess.sr;
  o.block<2, 2>(2, 0) = -t.flux_gain;
  o.block<2, 1>(2, 4) = t.speed_gain;
  // is^T J as a row vector is -(J is)^T.
  o.block<2, 2>(4, 0) =
      -(np * np / params.Jl) * t.speed_gain * jrot(eq.is).transpose();
  o.block<2, 1>(4, 4) =
      eq.inputs.omega_s * t.flux_gain * kJ * m_inv * t.speed_gain;
  o.block<2, 1>(4, 5) = (np / params.Jl) * t.speed_gain;
  return o;
}

Eigen::Matrix<double, 8, 6> obs_matrix_extended(const Equilibrium& eq,
                                                const MotorParams& params) {
  const CurrentRateTerms t = current_rate_terms(eq, params);
  Eigen::Matrix<double, 8, 6> o = Eigen::Matrix<double, 8, 6>::Zero();
  o.topRows<6>() = obs_matrix(eq, params);
  // Next derivative of the output recursion: the rank-one factor
  // speed_gain * (J is)^T reappears contracted with the flux derivative,
  // which reduces to -omega_s J (modulo measured signals).
  const double np = params.np;
  const Mat2 block = (np * np / params.Jl) * eq.inputs.omega_s *
                     t.speed_gain * eq.is.transpose();
  o.block<2, 2>(6, 0) = block;
  return o;
}

LinearizedModel linearize_with_injection(const Equilibrium& eq,
                                         const Vec2& u_tilde,
                                         const MotorParams& params,
                                         const EnergyModel& model) {
  const HessianBlocks& h = eq.hess;
  LinearizedModel lin;
  lin.A.setZero();
  lin.A.block<2, 2>(0, 0) = -params.Rs * h.ss - eq.inputs.omega_s * kJ;
  lin.A.block<2, 2>(0, 2) = -params.Rs * h.sr;
  lin.A.block<2, 2>(2, 0) = -params.Rr * h.rs();
  lin.A.block<2, 2>(2, 2) = -params.Rr * h.rr - eq.omega_g * kJ;
  lin.A.block<2, 1>(2, 4) = jrot(eq.state.phir);

  lin.C.setZero();
  lin.C.block<2, 2>(0, 0) = h.ss;
  lin.C.block<2, 2>(0, 2) = h.sr;

  const ThirdContractions d =
      model.third_contractions(eq.state.phis, eq.state.phir, u_tilde);
  lin.Cv.setZero();
  lin.Cv.block<2, 2>(0, 0) = d.ss;
  lin.Cv.block<2, 2>(0, 2) = d.sr;
  return lin;
}

Eigen::Matrix<double, 8, 5> injection_obs_matrix(const LinearizedModel& lin) {
  Eigen::Matrix<double, 8, 5> os;
  os.middleRows<2>(0) = lin.C;
  os.middleRows<2>(2) = lin.Cv;
  os.middleRows<2>(4) = lin.C * lin.A;
  os.middleRows<2>(6) = lin.Cv * lin.A;
  return os;
}

Eigen::Matrix<double, 5, 5> flux_inversion_matrix(const LinearizedModel& lin) {
  Eigen::Matrix<double, 5, 5> op;
  op.middleRows<2>(0) = lin.C;
  op.middleRows<2>(2) = lin.Cv;
  op.row(4) = (lin.C * lin.A).row(1);
  return op;
}

Eigen::Matrix<double, 10, 6> torque_extended_obs_matrix(
    const Equilibrium& eq, const Vec2& u_tilde, const MotorParams& params,
    const EnergyModel& model) {
  const LinearizedModel lin =
      linearize_with_injection(eq, u_tilde, params, model);
  const double np = params.np;

  Eigen::Matrix<double, 6, 6> a6 = Eigen::Matrix<double, 6, 6>::Zero();
  a6.block<5, 5>(0, 0) = lin.A;
  // mechanical equation: (Jl/np) dw = np is^T J dphis - np phis^T J dis - dTl
  const Eigen::RowVector2d is_j = -jrot(eq.is).transpose();
  const Eigen::RowVector2d phis_j = -jrot(eq.state.phis).transpose();
  a6.block<1, 2>(4, 0) =
      (np * np / params.Jl) * (is_j - phis_j * eq.hess.ss);
  a6.block<1, 2>(4, 2) = -(np * np / params.Jl) * phis_j * eq.hess.sr;
  a6(4, 5) = -np / params.Jl;

  Eigen::Matrix<double, 2, 6> c6 = Eigen::Matrix<double, 2, 6>::Zero();
  c6.leftCols<5>() = lin.C;
  Eigen::Matrix<double, 2, 6> cv6 = Eigen::Matrix<double, 2, 6>::Zero();
  cv6.leftCols<5>() = lin.Cv;

  Eigen::Matrix<double, 10, 6> os;
  os.middleRows<2>(0) = c6;
  os.middleRows<2>(2) = cv6;
  os.middleRows<2>(4) = c6 * a6;
  os.middleRows<2>(6) = cv6 * a6;
  os.middleRows<2>(8) = c6 * a6 * a6;
  return os;
}

int numerical_rank(const Eigen::MatrixXd& m, double tol_rel) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return 0;
  const double cutoff = tol_rel * sv(0);
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) ++rank;
  }
  return rank;
}

double condition_number(const Eigen::MatrixXd& m) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return std::numeric_limits<double>::infinity();
  const double smin = sv(sv.size() - 1);
  // a smallest singular value at round-off level is a numerical zero
  if (!(smin > 1e-14 * sv(0))) return std::numeric_limits<double>::infinity();
  return sv(0) / smin;
}

ObservabilityReport analyze_equilibrium(const Equilibrium& eq,
                                        const Vec2& u_tilde,
                                        const EnergyModel& model,
                                        const MotorParams& params,
                                        const ObservabilityOptions& opts) {
  ObservabilityReport rep;
  rep.rate = current_rate_terms(eq, params);
  rep.obs_plain = obs_matrix(eq, params);
  rep.lin = linearize_with_injection(eq, u_tilde, params, model);
  rep.obs_injected = injection_obs_matrix(rep.lin);
  rep.obs_inversion = flux_inversion_matrix(rep.lin);

  Eigen::MatrixXd plain = rep.obs_plain;
  Eigen::MatrixXd injected = rep.obs_injected;
  Eigen::MatrixXd inversion = rep.obs_inversion;
  if (opts.per_unit) {
    const Eigen::VectorXd rs6 = plain_row_scales(opts.bases);
    const Eigen::VectorXd cs6 = plain_col_scales(opts.bases);
    plain = rs6.asDiagonal() * plain * cs6.asDiagonal();

    const double i = opts.bases.current, w = opts.bases.speed;
    Eigen::VectorXd rs8(8);
    rs8 << 1.0 / i, 1.0 / i, 1.0 / (i * w), 1.0 / (i * w), 1.0 / (i * w),
        1.0 / (i * w), 1.0 / (i * w * w), 1.0 / (i * w * w);
    const Eigen::VectorXd cs5 = state_col_scales(opts.bases);
    injected = rs8.asDiagonal() * injected * cs5.asDiagonal();

    Eigen::VectorXd rs5(5);
    rs5 << 1.0 / i, 1.0 / i, 1.0 / (i * w), 1.0 / (i * w), 1.0 / (i * w);
    inversion = rs5.asDiagonal() * inversion * cs5.asDiagonal();
  }
  rep.rank_plain = numerical_rank(plain, opts.rank_tol);
  rep.rank_injected = numerical_rank(injected, opts.rank_tol);
  rep.cond_injected = condition_number(injected);
  rep.cond_inversion = condition_number(inversion);
  return rep;
}

std::vector<SweepPoint> condition_sweep(const std::vector<double>& flux_levels,
                                        const std::vector<double>& torque_grid,
                                        const Vec2& u_tilde,
                                        const EnergyModel& model,
                                        const MotorParams& params,
                                        const ObservabilityOptions& opts) {
  std::vector<SweepPoint> rows;
  rows.reserve(flux_levels.size() * torque_grid.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const double flux : flux_levels) {
    for (const double tl : torque_grid) {
      SweepPoint pt;
      pt.flux_wb = flux;
      pt.torque = tl;
      try {
        const Equilibrium eq =
            equilibrium_zero_stator_speed(flux, tl, model, params);
        const ObservabilityReport rep =
            analyze_equilibrium(eq, u_tilde, model, params, opts);
        pt.cond_os = rep.cond_injected;
        pt.cond_os_prime = rep.cond_inversion;
        pt.rank_o = rep.rank_plain;
        pt.feasible = true;
      } catch (const NumericError&) {
        pt.cond_os = nan;
        pt.cond_os_prime = nan;
        pt.rank_o = 0;
        pt.feasible = false;
      }
      rows.push_back(pt);
    }
  }
  return rows;
}

}  // namespace imlab
