import math

import numpy as np
import pytest

from aptsense.dynamics import (
    FockLindbladConfig,
    cross_validate,
    lindblad_evolve,
    lindblad_run,
    propagator,
    propagator_evolve,
    semiclassical_evolve,
)
from aptsense.errors import CutoffLeak, GainNotLindblad, InvalidParameters
from aptsense.model import (
    FullFrameParams,
    SystemParams,
    build_effective_hamiltonian,
    build_full_hamiltonian,
    eigensystem,
)


def frame(wa, wb, big_gamma, gamma0):
    return FullFrameParams(wa, wb, SystemParams(wa - wb, big_gamma, gamma0))


TIMES = np.linspace(0.0, 3.0, 61)


def test_decoupled_decay():
    traj = semiclassical_evolve(frame(0, 0, 0.0, 1.0), 1.0, 0.0, TIMES)
    np.testing.assert_allclose(traj.a_mean, np.exp(-TIMES), atol=1e-10)
    np.testing.assert_array_equal(traj.b_mean, 0)


def test_fixed_point():
    traj = semiclassical_evolve(frame(1, 0, 1.0, -1.0), 0.0, 0.0, TIMES)
    assert not np.any(traj.a_mean) and not np.any(traj.b_mean)


def test_symmetric_supermode_decay():
    traj = semiclassical_evolve(frame(0, 0, 1.0, 1.0), 1.0, 1.0, TIMES)
    np.testing.assert_allclose(traj.a_mean, np.exp(-3 * TIMES), atol=1e-10)


def test_ep_jordan_growth():
    h = build_effective_hamiltonian(SystemParams(2.0, 1.0, -1.0))
    a0, b0 = 0.3 + 0.1j, -0.2
    traj = propagator_evolve(h, a0, b0, TIMES)
    expected = a0 - TIMES * (1j * h[0] @ np.array([a0, b0]))
    np.testing.assert_allclose(traj.a_mean, expected, atol=1e-13)
    ode = semiclassical_evolve(frame(2, 0, 1.0, -1.0), a0, b0, TIMES)
    shift = np.exp(-1j * 1.0 * TIMES)  # frame frequency (2 + 0) / 2
    np.testing.assert_allclose(ode.a_mean, expected * shift, atol=1e-8)


def test_propagator_trivial_cases():
    h = build_effective_hamiltonian(SystemParams(0.7, 0.4, 0.2))
    np.testing.assert_array_equal(propagator(h, 0.0), np.eye(2))
    d = np.diag([1.0 - 0.5j, -2.0 - 0.1j])
    np.testing.assert_allclose(propagator(d, 1.7), np.diag(np.exp(-1j * np.diag(d) * 1.7)), atol=1e-14)


@pytest.mark.parametrize(
    "wa, wb, big_gamma, gamma0",
    [(2, 0, 1.0, -1.0), (4, 0, 1.0, -1.0), (1, 0, 1.0, 1.0), (1.9, 0, 1.0, -1.0), (3, 3, 0.5, 0.2)],
)
def test_ode_matches_propagator_over_long_window(wa, wb, big_gamma, gamma0):
    p = frame(wa, wb, big_gamma, gamma0)
    times = np.linspace(0.0, 10.0 / big_gamma, 101)
    ode = semiclassical_evolve(p, 0.4, 0.1j, times)
    prop = propagator_evolve(build_full_hamiltonian(p), 0.4, 0.1j, times)
    scale = max(1.0, np.max(np.abs(prop.a_mean)), np.max(np.abs(prop.b_mean)))
    assert np.max(np.abs(ode.a_mean - prop.a_mean)) <= 1e-8 * scale
    assert np.max(np.abs(ode.b_mean - prop.b_mean)) <= 1e-8 * scale


def test_supermode_decay_rates():
    p = frame(0.5, 0, 1.0, 0.3)
    h = build_full_hamiltonian(p)
    s = eigensystem(build_effective_hamiltonian(p.system))
    times = np.linspace(0.0, 2.0, 41)
    for lam, psi in ((s.lambda_plus, s.psi_plus), (s.lambda_minus, s.psi_minus)):
        traj = semiclassical_evolve(p, psi[0], psi[1], times)
        rate = -np.polyfit(times, np.log(np.abs(traj.a_mean)), 1)[0]
        assert rate == pytest.approx(-lam.imag, rel=1e-6)


def test_lindblad_coherent_decay():
    cfg = FockLindbladConfig(alpha_a=0.3, alpha_b=0.0, n_max=5)
    traj = lindblad_evolve(frame(0, 0, 0.0, 1.0), cfg)
    np.testing.assert_allclose(traj.a_mean, 0.3 * np.exp(-traj.times), atol=1e-6)


def test_cutoff_guard_fires_for_small_fock_space():
    with pytest.raises(CutoffLeak):
        lindblad_run(frame(0, 0, 0.0, 1.0), FockLindbladConfig(alpha_a=0.3, alpha_b=0.0, n_max=3))


def test_lindblad_vacuum_is_stationary():
    run = lindblad_run(frame(1, 0, 1.0, 1.0), FockLindbladConfig(alpha_a=0.0, alpha_b=0.0, n_max=2))
    assert np.max(np.abs(run.trajectory.a_mean)) == 0.0
    assert run.max_trace_error <= 1e-12


def test_lindblad_matches_ode_for_collective_loss():
    p = frame(0, 0, 0.5, 1.0)
    cfg = FockLindbladConfig(alpha_a=0.2, alpha_b=0.2)
    run = lindblad_run(p, cfg)
    ode = semiclassical_evolve(p, 0.2, 0.2, run.trajectory.times)
    assert np.max(np.abs(run.trajectory.a_mean - ode.a_mean)) <= 1e-6
    assert run.max_trace_error <= 1e-8
    assert run.min_eigenvalue >= -1e-8


def test_lindblad_rejects_gain():
    with pytest.raises(GainNotLindblad):
        lindblad_run(frame(2, 0, 1.0, -1.0), FockLindbladConfig())


def test_config_validation():
    with pytest.raises(InvalidParameters):
        FockLindbladConfig(alpha_a=1.5, n_max=5)
    with pytest.raises(InvalidParameters):
        FockLindbladConfig(dt=0.0)


@pytest.mark.parametrize(
    "p, expected",
    [
        (frame(1, 0, 1.0, 1.0), {"ode_vs_propagator": "pass", "lindblad_vs_ode": "pass"}),
        (frame(2, 0, 1.0, -1.0), {"ode_vs_propagator": "pass", "lindblad_vs_ode": "skipped"}),
        (frame(0, 0, 0.0, 1.0), {"ode_vs_propagator": "pass", "lindblad_vs_ode": "pass",
                                 "ode_vs_analytic": "pass"}),
    ],
    ids=["lossy", "ep-gain", "decoupled"],
)
def test_cross_validate(p, expected):
    report = cross_validate(p, FockLindbladConfig(alpha_a=0.2, alpha_b=0.2))
    assert {k: v["status"] for k, v in report.legs.items()} == expected
    assert report.passed
    if expected["lindblad_vs_ode"] == "skipped":
        assert report.legs["lindblad_vs_ode"]["detail"] == "GainNotLindblad"


def test_odd_shaped_time_grid_rejected():
    with pytest.raises(ValueError):
        semiclassical_evolve(frame(0, 0, 1.0, 1.0), 1.0, 0.0, [0.1, 0.2])
    with pytest.raises(ValueError):
        semiclassical_evolve(frame(0, 0, 1.0, 1.0), 1.0, 0.0, [0.0, 0.2, 0.1])
