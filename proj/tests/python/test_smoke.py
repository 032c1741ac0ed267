"""Smoke tests for the python bindings."""

import math

import numpy as np
import pytest

import imlab


NOMINAL_FLUX = 400.0 / (2 * math.pi * 50.0)


@pytest.fixture(scope="module")
def motor():
    return imlab.MotorParams()


@pytest.fixture(scope="module")
def linear():
    return imlab.LinearEnergyModel(imlab.LinearMagParams(0.42, 0.12))


@pytest.fixture(scope="module")
def saturated():
    return imlab.SaturatedEnergyModel(imlab.SaturatedMagParams(0.42, 0.12, 0.1, 1.0))


def test_linear_hessian_constants(linear):
    h = linear.hessian_blocks([0.0, 0.0], [0.0, 0.0])
    assert h.ss[0, 0] == pytest.approx(4.6875, abs=1e-12)
    assert h.sr[0, 0] == pytest.approx(-175.0 / 48.0, abs=1e-12)
    sp = imlab.saliency_params(h.ss)
    assert sp.b == 0.0


def test_energy_and_currents(linear, saturated):
    assert linear.energy([1, 0], [1, 0]) == pytest.approx(25.0 / 24.0, rel=1e-14)
    is_, ir = saturated.currents([1.0, 0.2], [0.9, 0.0])
    assert np.all(np.isfinite(is_)) and np.all(np.isfinite(ir))


def test_locked_rotor_equilibrium(linear, motor):
    eq = imlab.equilibrium_locked_rotor([1.0, 0.0], 0.0, linear, motor)
    assert eq.state.phis[0] == pytest.approx(9.0 / 7.0, rel=1e-12)
    assert eq.is_[0] == pytest.approx(50.0 / 21.0, rel=1e-12)
    r = imlab.equilibrium_residual(eq, linear, motor)
    assert np.linalg.norm(r) < 1e-9


def test_rank_dichotomy(saturated, motor):
    eq0 = imlab.equilibrium_zero_stator_speed(1.27, 2.0, saturated, motor)
    assert imlab.numerical_rank(imlab.obs_matrix(eq0, motor)) == 5
    eq1 = imlab.equilibrium_locked_rotor([1.27, 0.0], 2 * math.pi * 50, saturated, motor)
    assert imlab.numerical_rank(imlab.obs_matrix(eq1, motor)) == 6

    rep = imlab.analyze_equilibrium(eq0, [20.0, 0.0], saturated, motor)
    assert rep.rank_injected == 5
    assert math.isfinite(rep.cond_injected)

    lin = imlab.LinearEnergyModel(imlab.LinearMagParams(0.42, 0.12))
    eql = imlab.equilibrium_zero_stator_speed(1.27, 2.0, lin, motor)
    repl = imlab.analyze_equilibrium(eql, [20.0, 0.0], lin, motor)
    assert repl.rank_injected <= 4


def test_injection_extraction(saturated, motor):
    lam = 0.5 * NOMINAL_FLUX
    eq = imlab.equilibrium_locked_rotor([lam, 0.0], 0.0, saturated, motor)
    spec = imlab.InjectionSpec()
    wave = imlab.Waveform(imlab.WaveformKind.square)
    omega, n, periods = 500.0, 200, 8
    u = np.array([20.0, 0.0])

    state0 = imlab.ImState()
    state0.phis = eq.state.phis + (wave.S(0.0) / omega) * u
    state0.phir = eq.state.phir
    base = eq.inputs.us.copy()

    def inputs(t):
        x = imlab.ImInputs()
        x.us = base + wave.s(omega * t) * u
        return x

    traj = imlab.simulate(state0, inputs, periods / omega, 1.0 / (omega * n),
                          saturated, motor, True)
    d = imlab.demodulate(traj, spec)
    got = d["is_hf"][4 * n:].mean(axis=0)
    pred = imlab.predicted_virtual_current(saturated, eq.state.phis, eq.state.phir, u)
    assert np.linalg.norm(got - pred.ravel()) / np.linalg.norm(pred) < 0.01


def test_saliency_fit_roundtrip():
    truth = imlab.SaliencyParams(4.0, math.sqrt(2.0), math.pi / 4)
    hss = imlab.saliency_matrix(truth)
    samples = []
    for k in range(8):
        theta = 2 * math.pi * k / 8
        u = 20.0 * np.array([math.cos(theta), math.sin(theta)])
        samples.append((theta, hss @ u))
    fit = imlab.fit_saliency(samples, 20.0)
    assert fit.a == pytest.approx(4.0, abs=1e-10)
    assert fit.b == pytest.approx(math.sqrt(2.0), abs=1e-10)
    assert fit.sigma == pytest.approx(math.pi / 4, abs=1e-10)

    with pytest.raises(imlab.NumericError):
        imlab.fit_saliency(samples[:2], 20.0)


def test_experiment_driver_runs():
    cfg = imlab.default_config_text()
    cfg = cfg.replace("sweep.torque_step = 0.10000000000000001",
                      "sweep.torque_step = 1")
    cols, rows = imlab.run_experiment(cfg, "observability")
    assert cols[0] == "flux_pct"
    assert rows.shape == (3 * 11, 6)
    feasible = rows[rows[:, 5] == 1.0]
    assert np.all(feasible[:, 4] == 5.0)

    with pytest.raises(imlab.ConfigError):
        imlab.run_experiment("bogus = 1\n", "observability")
