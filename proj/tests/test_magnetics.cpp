#include <doctest.h>

#include "imlab/magnetics.hpp"
#include "oracles.hpp"

using namespace imlab;
using namespace imlab::testing;

namespace {
constexpr double kAlpha = 4.6875;            // 1/(2(2Lm+Ll)) + 1/(2Ll)
constexpr double kBeta = -175.0 / 48.0;      // 1/(2(2Lm+Ll)) - 1/(2Ll)
}  // namespace

TEST_CASE("energy closed forms") {
  const auto lin = table_linear();
  const auto sat = table_saturated();
  const Vec2 zero = Vec2::Zero();
  CHECK(lin.energy(zero, zero) == 0.0);
  CHECK(sat.energy(zero, zero) == 0.0);
  // |2 e_d|^2 / (4 * 0.96) = 25/24
  CHECK(lin.energy(Vec2(1, 0), Vec2(1, 0)) == doctest::Approx(25.0 / 24.0).epsilon(1e-14));
}

TEST_CASE("currents match the energy gradient") {
  const auto lin = table_linear();
  const auto sat = table_saturated();
  Vec2 is, ir;

  lin.currents(Vec2::Zero(), Vec2::Zero(), is, ir);
  CHECK(is.norm() == 0.0);
  CHECK(ir.norm() == 0.0);

  lin.currents(Vec2(1, 0), Vec2(1, 0), is, ir);
  CHECK(is.x() == doctest::Approx(25.0 / 24.0).epsilon(1e-14));
  CHECK((is - ir).norm() < 1e-15);

  const Vec2 phis(1.0, 0.2), phir(0.9, 0.0);
  sat.currents(phis, phir, is, ir);
  Eigen::Vector4d g;
  g << is, ir;
  const Eigen::Vector4d ref = fd_energy_gradient(sat, phis, phir);
  CHECK((g - ref).norm() / ref.norm() < 1e-6);
}

TEST_CASE("hessian blocks") {
  const auto lin = table_linear();
  const auto sat = table_saturated();

  const HessianBlocks hl = lin.hessian_blocks(Vec2(0.3, -1.0), Vec2(0.1, 0.4));
  CHECK((hl.ss - kAlpha * Mat2::Identity()).norm() < 1e-12);
  CHECK((hl.rr - kAlpha * Mat2::Identity()).norm() < 1e-12);
  CHECK((hl.sr - kBeta * Mat2::Identity()).norm() < 1e-12);

  // quartic terms have zero second derivative at the origin
  const HessianBlocks hs0 = sat.hessian_blocks(Vec2::Zero(), Vec2::Zero());
  CHECK((hs0.ss - kAlpha * Mat2::Identity()).norm() == 0.0);
  CHECK((hs0.sr - kBeta * Mat2::Identity()).norm() == 0.0);

  FluxSampler sampler(7);
  for (int n = 0; n < 50; ++n) {
    const auto [phis, phir] = sampler.next();
    const HessianBlocks h = sat.hessian_blocks(phis, phir);
    Eigen::Matrix4d full;
    full.block<2, 2>(0, 0) = h.ss;
    full.block<2, 2>(0, 2) = h.sr;
    full.block<2, 2>(2, 0) = h.rs();
    full.block<2, 2>(2, 2) = h.rr;
    const Eigen::Matrix4d ref = fd_energy_hessian(sat, phis, phir);
    CHECK((full - ref).norm() / ref.norm() < 1e-5);
    CHECK((h.ss - h.ss.transpose()).norm() < 1e-12 * h.ss.norm());
    CHECK((h.rr - h.rr.transpose()).norm() < 1e-12 * h.rr.norm());
  }
}

TEST_CASE("third contractions") {
  const auto lin = table_linear();
  const auto sat = table_saturated();
  const Vec2 u(20.0, 0.0);

  const ThirdContractions dl = lin.third_contractions(Vec2(1, 0.5), Vec2(0.2, 0), u);
  CHECK(dl.ss.norm() == 0.0);
  CHECK(dl.sr.norm() == 0.0);

  const ThirdContractions zero =
      sat.third_contractions(Vec2(1, 0), Vec2(1, 0), Vec2::Zero());
  CHECK(zero.ss.norm() == 0.0);
  CHECK(zero.sr.norm() == 0.0);

  const ThirdContractions d = sat.third_contractions(Vec2(1, 0), Vec2(1, 0), u);
  const ThirdContractions ref = fd_third_contractions(sat, Vec2(1, 0), Vec2(1, 0), u);
  CHECK((d.ss - ref.ss).norm() / ref.ss.norm() < 1e-5);
  CHECK((d.sr - ref.sr).norm() / ref.sr.norm() < 1e-5);
}

TEST_CASE("torque formulas") {
  const auto lin = table_linear();
  const auto sat = table_saturated();
  Vec2 is, ir;

  lin.currents(Vec2(1, 0), Vec2(1, 0), is, ir);
  CHECK(torque_rotor_side(Vec2(1, 0), ir, 2) == 0.0);
  CHECK(torque_stator_side(Vec2(1, 0), is, 2) == 0.0);

  const Vec2 phis(1.0, 0.2), phir(0.9, -0.1);
  sat.currents(phis, phir, is, ir);
  const double tr = torque_rotor_side(phir, ir, 2);
  const double ts = torque_stator_side(phis, is, 2);
  CHECK(std::abs(tr - ts) < 1e-10 * std::max(1.0, std::abs(tr)));
  CHECK(tr != 0.0);

  CHECK(torque_rotor_side(Vec2(0.5, 2.0), Vec2::Zero(), 2) == 0.0);
}

TEST_CASE("torque equivalence on random points") {
  const auto lin = table_linear();
  const auto sat = table_saturated();
  FluxSampler sampler(11);
  for (int n = 0; n < 1000; ++n) {
    const auto [phis, phir] = sampler.next();
    for (const EnergyModel* m : {(const EnergyModel*)&lin, (const EnergyModel*)&sat}) {
      Vec2 is, ir;
      m->currents(phis, phir, is, ir);
      const double tr = torque_rotor_side(phir, ir, 2);
      const double ts = torque_stator_side(phis, is, 2);
      CHECK(std::abs(tr - ts) <= 1e-10 * std::max(1.0, std::abs(tr)));
    }
  }
}

TEST_CASE("rotation and reflection invariance") {
  const auto lin = table_linear();
  const auto sat = table_saturated();
  FluxSampler sampler(13);
  const Mat2 refl = dq_reflection();
  for (int n = 0; n < 200; ++n) {
    const auto [phis, phir] = sampler.next();
    const double eta = 0.1 + 0.37 * n;
    const Mat2 r = rot(eta);
    for (const EnergyModel* m : {(const EnergyModel*)&lin, (const EnergyModel*)&sat}) {
      const double e0 = m->energy(phis, phir);
      CHECK(m->energy(r * phis, r * phir) ==
            doctest::Approx(e0).epsilon(1e-12));
      CHECK(m->energy(refl * phis, refl * phir) ==
            doctest::Approx(e0).epsilon(1e-12));
    }
  }
}

TEST_CASE("saturated model with zero factors equals the linear model") {
  const auto lin = table_linear();
  const SaturatedEnergyModel sat0(SaturatedMagParams{0.42, 0.12, 0.0, 0.0});
  FluxSampler sampler(17);
  for (int n = 0; n < 20; ++n) {
    const auto [phis, phir] = sampler.next();
    CHECK(sat0.energy(phis, phir) == lin.energy(phis, phir));
    Vec2 isa, ira, isb, irb;
    sat0.currents(phis, phir, isa, ira);
    lin.currents(phis, phir, isb, irb);
    CHECK(isa == isb);
    CHECK(ira == irb);
    const HessianBlocks ha = sat0.hessian_blocks(phis, phir);
    const HessianBlocks hb = lin.hessian_blocks(phis, phir);
    CHECK(ha.ss == hb.ss);
    CHECK(ha.sr == hb.sr);
    CHECK(ha.rr == hb.rr);
    const ThirdContractions d = sat0.third_contractions(phis, phir, Vec2(3, -1));
    CHECK(d.ss.norm() == 0.0);
    CHECK(d.sr.norm() == 0.0);
  }
}

TEST_CASE("generic invariant-energy wrapper reproduces the saturated model") {
  const auto sat = table_saturated();
  const double c1 = 4.0 * (2.0 * 0.42 + 0.12), c2 = 4.0 * 0.12;
  const double em = 0.1, el = 1.0;
  // p/m invariants in terms of (x1, x2, x3)
  const auto h = [=](double x1, double x2, double x3) {
    const double P = 2.0 * (x1 + x2 + x3), Q = 2.0 * (x1 - x2 + x3);
    return (1.0 + em * P) * P / c1 + (1.0 + el * P) * Q / c2;
  };
  const auto grad = [=](double x1, double x2, double x3) {
    const double P = 2.0 * (x1 + x2 + x3), Q = 2.0 * (x1 - x2 + x3);
    const double gP = (1.0 + 2.0 * em * P) / c1 + el * Q / c2;
    const double gQ = (1.0 + el * P) / c2;
    // dP/dx = (2, 2, 2), dQ/dx = (2, -2, 2)
    return std::array<double, 3>{2.0 * (gP + gQ), 2.0 * (gP - gQ),
                                 2.0 * (gP + gQ)};
  };
  const ThreeInvariantEnergyModel wrapped(h, grad);

  FluxSampler sampler(19);
  for (int n = 0; n < 20; ++n) {
    const auto [phis, phir] = sampler.next();
    CHECK(wrapped.energy(phis, phir) ==
          doctest::Approx(sat.energy(phis, phir)).epsilon(1e-14));
    Vec2 isa, ira, isb, irb;
    wrapped.currents(phis, phir, isa, ira);
    sat.currents(phis, phir, isb, irb);
    CHECK((isa - isb).norm() < 1e-12 * std::max(1.0, isb.norm()));
    const HessianBlocks hw = wrapped.hessian_blocks(phis, phir);
    const HessianBlocks hs = sat.hessian_blocks(phis, phir);
    CHECK((hw.ss - hs.ss).norm() / hs.ss.norm() < 1e-5);
    CHECK((hw.sr - hs.sr).norm() / hs.sr.norm() < 1e-5);
    CHECK((hw.rr - hs.rr).norm() / hs.rr.norm() < 1e-5);
  }
  // finite-differenced thirds are less accurate than the analytic fast path
  const ThirdContractions dw =
      wrapped.third_contractions(Vec2(1, 0.2), Vec2(0.9, 0), Vec2(20, 0));
  const ThirdContractions ds =
      sat.third_contractions(Vec2(1, 0.2), Vec2(0.9, 0), Vec2(20, 0));
  CHECK((dw.ss - ds.ss).norm() / ds.ss.norm() < 1e-3);
  CHECK((dw.sr - ds.sr).norm() / ds.sr.norm() < 1e-3);
}

TEST_CASE("degenerate energy is rejected") {
  // No stator/rotor coupling: the cross hessian block is identically zero.
  const ThreeInvariantEnergyModel decoupled(
      [](double x1, double, double x3) { return x1 + x3; },
      [](double, double, double) { return std::array<double, 3>{1.0, 0.0, 1.0}; });
  CHECK_THROWS_AS(decoupled.hessian_blocks(Vec2(1, 0), Vec2(0.5, 0)),
                  NumericError);
}

TEST_CASE("saliency parametrization") {
  const SaliencyParams iso = saliency_params(kAlpha * Mat2::Identity());
  CHECK(iso.a == doctest::Approx(kAlpha).epsilon(1e-15));
  CHECK(iso.b == 0.0);
  CHECK(iso.sigma == 0.0);

  Mat2 m;
  m << 5, 1, 1, 3;
  const SaliencyParams sp = saliency_params(m);
  CHECK(sp.a == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(sp.b == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(sp.sigma == doctest::Approx(M_PI / 4.0).epsilon(1e-14));
  CHECK((saliency_matrix(sp) - m).norm() < 1e-12);

  // d-axis deficit lands exactly on the branch cut: sigma = +pi
  Mat2 cut;
  cut << 3.0, 0.0, 0.0, 5.0;
  CHECK(saliency_params(cut).sigma == M_PI);

  Mat2 asym;
  asym << 1.0, 2.0, 2.0 + 1e-6, 1.0;
  CHECK_THROWS_AS(saliency_params(asym), std::invalid_argument);

  std::mt19937 gen(23);
  std::uniform_real_distribution<double> dist(-5.0, 5.0);
  for (int n = 0; n < 100; ++n) {
    Mat2 s;
    const double off = dist(gen);
    s << dist(gen), off, off, dist(gen);
    const SaliencyParams p = saliency_params(s);
    CHECK(p.b >= 0.0);
    CHECK(p.sigma <= M_PI);
    CHECK(p.sigma > -M_PI);
    CHECK((saliency_matrix(p) - s).norm() < 1e-12);
  }
}

TEST_CASE("unsaturated model has constant a and zero b") {
  const auto lin = table_linear();
  FluxSampler sampler(29);
  for (int n = 0; n < 50; ++n) {
    const auto [phis, phir] = sampler.next();
    const SaliencyParams sp = saliency_params(lin.hessian_blocks(phis, phir).ss);
    CHECK(sp.a == doctest::Approx(kAlpha).epsilon(1e-15));
    CHECK(sp.b <= 1e-12 * sp.a);
  }
}
