#include "imlab/magnetics.hpp"

#include <cmath>

namespace imlab {

namespace {

// Shared scratch for the p/m change of variables p = phis + phir,
// m = phis - phir used by both closed-form models.
struct PmPoint {
  Vec2 p, m;
  double P, Q;  // |p|^2, |m|^2
};

PmPoint pm_point(const Vec2& phis, const Vec2& phir) {
  PmPoint x;
  x.p = phis + phir;
  x.m = phis - phir;
  x.P = x.p.squaredNorm();
  x.Q = x.m.squaredNorm();
  return x;
}

}  // namespace

namespace detail {

void require_nondegenerate(const HessianBlocks& blocks) {
  constexpr double kMaxCond = 1e12;
  const Mat2* mats[] = {&blocks.ss, &blocks.sr, &blocks.rr};
  const char* names[] = {"ss", "sr", "rr"};
  for (int i = 0; i < 3; ++i) {
    auto [smax, smin] = singular_values_2x2(*mats[i]);
    if (!(smin > 0.0) || smax / smin > kMaxCond) {
      throw NumericError(std::string("degenerate energy: hessian block ") +
                         names[i] + " is singular within tolerance");
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Linear (unsaturated) model

LinearEnergyModel::LinearEnergyModel(const LinearMagParams& p) : params_(p) {
  if (!(p.Lm > 0.0) || !(p.Ll > 0.0)) {
    throw ConfigError("inductances must be positive");
  }
  gp_ = 1.0 / (4.0 * (2.0 * p.Lm + p.Ll));
  gq_ = 1.0 / (4.0 * p.Ll);
}

double LinearEnergyModel::energy(const Vec2& phis, const Vec2& phir) const {
  const PmPoint x = pm_point(phis, phir);
  return x.P * gp_ + x.Q * gq_;
}

void LinearEnergyModel::currents(const Vec2& phis, const Vec2& phir, Vec2& is,
                                 Vec2& ir) const {
  const PmPoint x = pm_point(phis, phir);
  const Vec2 a = 2.0 * gp_ * x.p;
  const Vec2 b = 2.0 * gq_ * x.m;
  is = a + b;
  ir = a - b;
}

HessianBlocks LinearEnergyModel::hessian_blocks(const Vec2&,
                                                const Vec2&) const {
  HessianBlocks h;
  h.ss = 2.0 * (gp_ + gq_) * Mat2::Identity();
  h.sr = 2.0 * (gp_ - gq_) * Mat2::Identity();
  h.rr = h.ss;
  detail::require_nondegenerate(h);
  return h;
}

ThirdContractions LinearEnergyModel::third_contractions(const Vec2&,
                                                        const Vec2&,
                                                        const Vec2&) const {
  return {Mat2::Zero(), Mat2::Zero()};
}

// ---------------------------------------------------------------------------
// Saturated model
//
// Energy in p/m variables: g(P,Q) = (1 + eps_m P) P / c1 + (1 + eps_l P) Q / c2
// with c1 = 4(2Lm + Ll), c2 = 4Ll. Both saturation factors grow with the
// magnetizing flux |p|^2.

SaturatedEnergyModel::SaturatedEnergyModel(const SaturatedMagParams& p)
    : params_(p) {
  if (!(p.Lm > 0.0) || !(p.Ll > 0.0)) {
    throw ConfigError("inductances must be positive");
  }
  if (p.eps_m < 0.0 || p.eps_l < 0.0) {
    throw ConfigError("saturation factors must be nonnegative");
  }
  inv_c1_ = 1.0 / (4.0 * (2.0 * p.Lm + p.Ll));
  inv_c2_ = 1.0 / (4.0 * p.Ll);
}

double SaturatedEnergyModel::energy(const Vec2& phis, const Vec2& phir) const {
  const PmPoint x = pm_point(phis, phir);
  return (1.0 + params_.eps_m * x.P) * x.P * inv_c1_ +
         (1.0 + params_.eps_l * x.P) * x.Q * inv_c2_;
}

void SaturatedEnergyModel::currents(const Vec2& phis, const Vec2& phir,
                                    Vec2& is, Vec2& ir) const {
  const PmPoint x = pm_point(phis, phir);
  const double gp =
      (1.0 + 2.0 * params_.eps_m * x.P) * inv_c1_ + params_.eps_l * x.Q * inv_c2_;
  const double gq = (1.0 + params_.eps_l * x.P) * inv_c2_;
  const Vec2 a = 2.0 * gp * x.p;
  const Vec2 b = 2.0 * gq * x.m;
  is = a + b;
  ir = a - b;
}

HessianBlocks SaturatedEnergyModel::hessian_blocks(const Vec2& phis,
                                                   const Vec2& phir) const {
  const PmPoint x = pm_point(phis, phir);
  const double gp =
      (1.0 + 2.0 * params_.eps_m * x.P) * inv_c1_ + params_.eps_l * x.Q * inv_c2_;
  const double gq = (1.0 + params_.eps_l * x.P) * inv_c2_;
  const double gpp = 2.0 * params_.eps_m * inv_c1_;
  const double gpq = params_.eps_l * inv_c2_;

  const Mat2 ppt = x.p * x.p.transpose();
  const Mat2 pmt = x.p * x.m.transpose();
  const Mat2 mpt = pmt.transpose();

  HessianBlocks h;
  h.ss = 2.0 * (gp + gq) * Mat2::Identity() + 4.0 * gpp * ppt +
         4.0 * gpq * (pmt + mpt);
  h.sr = 2.0 * (gp - gq) * Mat2::Identity() + 4.0 * gpp * ppt +
         4.0 * gpq * (mpt - pmt);
  h.rr = 2.0 * (gp + gq) * Mat2::Identity() + 4.0 * gpp * ppt -
         4.0 * gpq * (pmt + mpt);
  detail::require_nondegenerate(h);
  return h;
}

ThirdContractions SaturatedEnergyModel::third_contractions(
    const Vec2& phis, const Vec2& phir, const Vec2& u) const {
  const PmPoint x = pm_point(phis, phir);
  const double gpp = 2.0 * params_.eps_m * inv_c1_;
  const double gpq = params_.eps_l * inv_c2_;

  const double pu = x.p.dot(u);
  const double mu = x.m.dot(u);
  const Mat2 put = x.p * u.transpose();
  const Mat2 mut = x.m * u.transpose();
  const Mat2 id = Mat2::Identity();

  ThirdContractions d;
  d.ss = 4.0 * u * ((gpp + gpq) * x.p + gpq * x.m).transpose() +
         4.0 * gpp * (pu * id + put) +
         4.0 * gpq * ((pu + mu) * id + put + mut);
  d.sr = 4.0 * u * ((gpp + gpq) * x.p - gpq * x.m).transpose() +
         4.0 * gpp * (pu * id + put) +
         4.0 * gpq * ((mu - pu) * id + mut - put);
  return d;
}

// ---------------------------------------------------------------------------
// Generic invariant energy with finite-differenced higher derivatives

double fd_gradient_step(const Vec2& phis, const Vec2& phir) {
  const double scale = std::sqrt(phis.squaredNorm() + phir.squaredNorm());
  return std::max(1e-6, 1e-5 * scale);
}

double fd_hessian_step(const Vec2& phis, const Vec2& phir) {
  // Near the fourth-root-of-eps optimum for second differences; keeps the
  // truncation error of quartic energies around 1e-7 relative.
  return std::sqrt(0.1 * fd_gradient_step(phis, phir));
}

ThreeInvariantEnergyModel::ThreeInvariantEnergyModel(Fn h, GradFn grad_h)
    : h_(std::move(h)), grad_h_(std::move(grad_h)) {
  if (!h_ || !grad_h_) {
    throw ConfigError("invariant energy requires h and its gradient");
  }
}

double ThreeInvariantEnergyModel::energy(const Vec2& phis,
                                         const Vec2& phir) const {
  return h_(0.5 * phis.squaredNorm(), phis.dot(phir), 0.5 * phir.squaredNorm());
}

void ThreeInvariantEnergyModel::currents(const Vec2& phis, const Vec2& phir,
                                         Vec2& is, Vec2& ir) const {
  const auto g =
      grad_h_(0.5 * phis.squaredNorm(), phis.dot(phir), 0.5 * phir.squaredNorm());
  is = g[0] * phis + g[1] * phir;
  ir = g[1] * phis + g[2] * phir;
}

HessianBlocks ThreeInvariantEnergyModel::hessian_blocks(
    const Vec2& phis, const Vec2& phir) const {
  const double h = fd_hessian_step(phis, phir);
  HessianBlocks out;
  Vec2 isp, irp, isn, irn;
  for (int j = 0; j < 2; ++j) {
    Vec2 e = Vec2::Zero();
    e[j] = h;
    currents(phis + e, phir, isp, irp);
    currents(phis - e, phir, isn, irn);
    out.ss.col(j) = (isp - isn) / (2.0 * h);
    currents(phis, phir + e, isp, irp);
    currents(phis, phir - e, isn, irn);
    out.sr.col(j) = (isp - isn) / (2.0 * h);
    out.rr.col(j) = (irp - irn) / (2.0 * h);
  }
  out.ss = (0.5 * (out.ss + out.ss.transpose())).eval();
  out.rr = (0.5 * (out.rr + out.rr.transpose())).eval();
  detail::require_nondegenerate(out);
  return out;
}

ThirdContractions ThreeInvariantEnergyModel::third_contractions(
    const Vec2& phis, const Vec2& phir, const Vec2& u) const {
  ThirdContractions d{Mat2::Zero(), Mat2::Zero()};
  const double unorm = u.norm();
  if (unorm == 0.0) return d;

  const double h = fd_hessian_step(phis, phir);
  // Directional derivative of the currents along u gives Hss*u without
  // forming the full hessian.
  const auto hss_u = [&](const Vec2& ps, const Vec2& pr) {
    const double eps = h / unorm;
    Vec2 isp, irp, isn, irn;
    currents(ps + eps * u, pr, isp, irp);
    currents(ps - eps * u, pr, isn, irn);
    return Vec2(((isp - isn) / (2.0 * eps)).eval());
  };

  for (int j = 0; j < 2; ++j) {
    Vec2 e = Vec2::Zero();
    e[j] = h;
    d.ss.col(j) = (hss_u(phis + e, phir) - hss_u(phis - e, phir)) / (2.0 * h);
    d.sr.col(j) = (hss_u(phis, phir + e) - hss_u(phis, phir - e)) / (2.0 * h);
  }
  return d;
}

// ---------------------------------------------------------------------------

double torque_rotor_side(const Vec2& phir, const Vec2& ir, int np) {
  return np * (phir.y() * ir.x() - phir.x() * ir.y());
}

double torque_stator_side(const Vec2& phis, const Vec2& is, int np) {
  return -np * (phis.y() * is.x() - phis.x() * is.y());
}

SaliencyParams saliency_params(const Mat2& hss) {
  const double tol = 1e-10 * std::max(1.0, hss.cwiseAbs().maxCoeff());
  if (std::abs(hss(0, 1) - hss(1, 0)) > tol) {
    throw std::invalid_argument("saliency_params: matrix is not symmetric");
  }
  SaliencyParams sp;
  sp.a = 0.5 * (hss(0, 0) + hss(1, 1));
  const double c = 0.5 * (hss(0, 0) - hss(1, 1));
  const double s = 0.5 * (hss(0, 1) + hss(1, 0));
  sp.b = std::hypot(c, s);
  sp.sigma = sp.b == 0.0 ? 0.0 : std::atan2(s, c);
  if (sp.sigma <= -M_PI) sp.sigma = M_PI;  // keep the (-pi, pi] branch
  return sp;
}

Mat2 saliency_matrix(const SaliencyParams& sp) {
  Mat2 m;
  const double bc = sp.b * std::cos(sp.sigma);
  const double bs = sp.b * std::sin(sp.sigma);
  m << sp.a + bc, bs, bs, sp.a - bc;
  return m;
}

}  // namespace imlab
