#pragma once

#include <array>
#include <functional>
#include <memory>

#include "imlab/types.hpp"

namespace imlab {

// Inductances of the unsaturated current-flux relation.
struct LinearMagParams {
  double Lm = 0.42;  // mutual inductance [H]
  double Ll = 0.12;  // leakage inductance [H]
};

// Quartic saturation model: the quadratic energy with both terms rescaled by
// (1 + eps * |phis + phir|^2).
struct SaturatedMagParams {
  double Lm = 0.42;    // [H]
  double Ll = 0.12;    // [H]
  double eps_m = 0.1;  // mutual saturation factor [1/Wb^2]
  double eps_l = 1.0;  // leakage saturation factor [1/Wb^2]
};

// Second derivatives of the magnetic energy. ss and rr are symmetric; the
// rotor/stator cross block is sr transposed (reciprocity).
struct HessianBlocks {
  Mat2 ss, sr, rr;
  Mat2 rs() const { return sr.transpose(); }
};

// Directional third derivatives d/dphis (Hss u) and d/dphir (Hss u).
struct ThirdContractions {
  Mat2 ss, sr;
};

// (a, b, sigma) parametrization of a symmetric 2x2 inverse-inductance matrix:
// [[a + b cos s, b sin s], [b sin s, a - b cos s]], b >= 0, sigma in (-pi, pi].
struct SaliencyParams {
  double a = 0.0;      // mean inverse inductance [1/H]
  double b = 0.0;      // saliency amplitude [1/H]
  double sigma = 0.0;  // saliency orientation [rad]
};

// Magnetic energy of the machine as a function of the stator and rotor flux
// linkages. Implementations must have the invariant form
// h(|phis|^2/2, phis.phir, |phir|^2/2), which makes the energy unchanged by
// rotating both fluxes by the same angle and by reflecting both across the
// d axis.
class EnergyModel {
 public:
  virtual ~EnergyModel() = default;

  // Magnetic energy [J].
  virtual double energy(const Vec2& phis, const Vec2& phir) const = 0;

  // Stator and rotor currents: the gradient of the energy with respect to
  // (phis, phir).
  virtual void currents(const Vec2& phis, const Vec2& phir, Vec2& is,
                        Vec2& ir) const = 0;

  // Second-derivative blocks. Throws NumericError if any block is singular
  // beyond condition number 1e12.
  virtual HessianBlocks hessian_blocks(const Vec2& phis,
                                       const Vec2& phir) const = 0;

  // Derivatives of the hessian-vector product Hss*u with respect to both
  // fluxes. Identically zero for a quadratic energy.
  virtual ThirdContractions third_contractions(const Vec2& phis,
                                               const Vec2& phir,
                                               const Vec2& u) const = 0;
};

class LinearEnergyModel final : public EnergyModel {
 public:
  explicit LinearEnergyModel(const LinearMagParams& p);

  double energy(const Vec2& phis, const Vec2& phir) const override;
  void currents(const Vec2& phis, const Vec2& phir, Vec2& is,
                Vec2& ir) const override;
  HessianBlocks hessian_blocks(const Vec2& phis,
                               const Vec2& phir) const override;
  ThirdContractions third_contractions(const Vec2& phis, const Vec2& phir,
                                       const Vec2& u) const override;

  const LinearMagParams& params() const { return params_; }

 private:
  LinearMagParams params_;
  double gp_, gq_;  // constant energy derivatives wrt |p|^2 and |m|^2
};

class SaturatedEnergyModel final : public EnergyModel {
 public:
  explicit SaturatedEnergyModel(const SaturatedMagParams& p);

  double energy(const Vec2& phis, const Vec2& phir) const override;
  void currents(const Vec2& phis, const Vec2& phir, Vec2& is,
                Vec2& ir) const override;
  HessianBlocks hessian_blocks(const Vec2& phis,
                               const Vec2& phir) const override;
  ThirdContractions third_contractions(const Vec2& phis, const Vec2& phir,
                                       const Vec2& u) const override;

  const SaturatedMagParams& params() const { return params_; }

 private:
  SaturatedMagParams params_;
  double inv_c1_, inv_c2_;  // 1/(4(2Lm+Ll)), 1/(4Ll)
};

// Wrapper for a user-supplied invariant energy h(x1, x2, x3) with
// x1 = |phis|^2/2, x2 = phis.phir, x3 = |phir|^2/2. The caller provides h and
// its three first partial derivatives; second and third derivatives are
// obtained by central finite differences of the analytic gradient.
class ThreeInvariantEnergyModel final : public EnergyModel {
 public:
  using Fn = std::function<double(double, double, double)>;
  using GradFn = std::function<std::array<double, 3>(double, double, double)>;

  ThreeInvariantEnergyModel(Fn h, GradFn grad_h);

  double energy(const Vec2& phis, const Vec2& phir) const override;
  void currents(const Vec2& phis, const Vec2& phir, Vec2& is,
                Vec2& ir) const override;
  HessianBlocks hessian_blocks(const Vec2& phis,
                               const Vec2& phir) const override;
  ThirdContractions third_contractions(const Vec2& phis, const Vec2& phir,
                                       const Vec2& u) const override;

 private:
  Fn h_;
  GradFn grad_h_;
};

// Electromagnetic torque, rotor side: np * phir . (J ir).
double torque_rotor_side(const Vec2& phir, const Vec2& ir, int np);

// Electromagnetic torque, stator side: -np * phis . (J is). Equal to the
// rotor-side value when the currents come from the same energy gradient.
double torque_stator_side(const Vec2& phis, const Vec2& is, int np);

// Decompose a symmetric 2x2 matrix into (a, b, sigma). Rejects input whose
// off-diagonal entries differ by more than 1e-10 (absolute, scaled by the
// matrix norm). Convention: sigma = 0 when b = 0; sigma = pi (not -pi) on the
// branch cut.
SaliencyParams saliency_params(const Mat2& hss);

// Rebuild the symmetric matrix from its (a, b, sigma) parameters.
Mat2 saliency_matrix(const SaliencyParams& sp);

// Central-difference step for gradients at the given point, and the larger
// step used for second differences. Fixed here so every finite-difference
// consumer is reproducible.
double fd_gradient_step(const Vec2& phis, const Vec2& phir);
double fd_hessian_step(const Vec2& phis, const Vec2& phir);

namespace detail {
// Throws NumericError if any block has condition number above 1e12.
void require_nondegenerate(const HessianBlocks& blocks);
}  // namespace detail

}  // namespace imlab
