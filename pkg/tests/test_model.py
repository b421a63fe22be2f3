import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aptsense.errors import InvalidParameters, NonFiniteMatrix
from aptsense.model import (
    FullFrameParams,
    Phase,
    SystemParams,
    build_effective_hamiltonian,
    build_full_hamiltonian,
    check_anti_pt,
    classify_phase,
    eigensystem,
)

rates = st.floats(0.05, 5.0)
detunings = st.floats(-10.0, 10.0)
losses = st.floats(-5.0, 5.0)


@pytest.mark.parametrize(
    "delta, gamma0, big_gamma, expected",
    [
        (0.0, 1.0, 1.0, [[-2j, -1j], [-1j, -2j]]),
        (2.0, -1.0, 1.0, [[1, -1j], [-1j, -1]]),
        (4.0, 0.0, 0.5, [[2 - 0.5j, -0.5j], [-0.5j, -2 - 0.5j]]),
    ],
)
def test_effective_hamiltonian_examples(delta, gamma0, big_gamma, expected):
    h = build_effective_hamiltonian(SystemParams(delta, big_gamma, gamma0))
    np.testing.assert_array_equal(h, np.array(expected))


def test_full_hamiltonian_frame_shift():
    base = SystemParams(0.0, 1.0, 1.0)
    h = build_full_hamiltonian(FullFrameParams(5.0, 5.0, base))
    np.testing.assert_allclose(h, build_effective_hamiltonian(base) + 5 * np.eye(2), atol=0)

    det = SystemParams(2.0, 1.0, 1.0)
    h = build_full_hamiltonian(FullFrameParams(6.0, 4.0, det))
    np.testing.assert_allclose(h - 5 * np.eye(2), build_effective_hamiltonian(det), atol=1e-15)

    h = build_full_hamiltonian(FullFrameParams(0.0, 0.0, base))
    np.testing.assert_array_equal(h, build_effective_hamiltonian(base))


def test_params_validation():
    with pytest.raises(InvalidParameters):
        SystemParams(math.nan, 1.0, 1.0)
    with pytest.raises(InvalidParameters):
        SystemParams(1.0, -1.0, 1.0)
    with pytest.raises(InvalidParameters):
        FullFrameParams(3.0, 1.0, SystemParams(1.0, 1.0, 1.0))
    p = SystemParams(1.0, 1.0, -1.0, gamma_c=0.5)
    assert p.intrinsic_loss == -1.5
    assert p.gamma_bath == 1.0


@pytest.mark.parametrize("gamma0", [-1.0, 0.0, 0.3, 2.5])
def test_ep_eigenvalues_coalesce(gamma0):
    s = eigensystem(build_effective_hamiltonian(SystemParams(2.0, 1.0, gamma0)))
    assert s.phase is Phase.EXCEPTIONAL_POINT
    assert s.lambda_plus == s.lambda_minus
    assert abs(s.lambda_plus - (-1j * (gamma0 + 1.0))) < 1e-14


def test_eigenvalue_examples_against_numpy():
    s = eigensystem(build_effective_hamiltonian(SystemParams(0.0, 1.0, 1.0)))
    assert s.phase is Phase.UNBROKEN
    assert abs(s.lambda_plus + 1j) < 1e-14 and abs(s.lambda_minus + 3j) < 1e-14

    h = build_effective_hamiltonian(SystemParams(4.0, 1.0, 0.0))
    s = eigensystem(h)
    assert s.phase is Phase.BROKEN
    assert abs(s.lambda_plus - (-1j + math.sqrt(3))) < 1e-14
    assert abs(s.lambda_minus - (-1j - math.sqrt(3))) < 1e-14
    ref = sorted(np.linalg.eigvals(h), key=lambda z: -z.real)
    np.testing.assert_allclose([s.lambda_plus, s.lambda_minus], ref, atol=1e-13)


@pytest.mark.parametrize("delta, expected", [(1.0, Phase.UNBROKEN), (-2.0, Phase.EXCEPTIONAL_POINT),
                                             (3.0, Phase.BROKEN)])
def test_classify_phase(delta, expected):
    assert classify_phase(SystemParams(delta, 1.0, 0.5)) is expected


def test_anti_pt_examples():
    assert check_anti_pt(build_effective_hamiltonian(SystemParams(2.0, 1.0, -1.0))) == 0.0
    assert check_anti_pt(np.eye(2)) == 2.0
    assert check_anti_pt(build_effective_hamiltonian(SystemParams(0.7, 1.2, 0.3))) <= 1e-14


def test_non_finite_matrix():
    with pytest.raises(NonFiniteMatrix):
        eigensystem(np.array([[np.nan, 0], [0, 1]], dtype=complex))


@settings(max_examples=300, deadline=None)
@given(detunings, rates, losses)
def test_spectral_properties(delta, big_gamma, gamma0):
    p = SystemParams(delta, big_gamma, gamma0)
    h = build_effective_hamiltonian(p)
    s = eigensystem(h)
    tr, det = np.trace(h), np.linalg.det(h)
    # absolute floor at rounding level of the entries, for near-cancelling traces/determinants
    scale = np.max(np.abs(h))
    assert abs(s.lambda_plus + s.lambda_minus - tr) <= 1e-12 * abs(tr) + 1e-15 * scale
    assert abs(s.lambda_plus * s.lambda_minus - det) <= 1e-12 * abs(det) + 1e-15 * scale**2
    assert check_anti_pt(h) <= 1e-14 * np.max(np.abs(h))

    disc = 0.25 * delta**2 - big_gamma**2
    if s.phase is Phase.UNBROKEN:
        assert abs(s.lambda_plus.real) <= 1e-10 * big_gamma
        assert abs(s.lambda_minus.real) <= 1e-10 * big_gamma
    elif s.phase is Phase.BROKEN:
        root = math.sqrt(disc)
        assert abs(s.lambda_plus.real - root) <= 1e-10 * root
        assert abs(s.lambda_minus.real + root) <= 1e-10 * root
    if s.phase is not Phase.EXCEPTIONAL_POINT:
        norm = np.linalg.norm(h)
        for lam, psi in ((s.lambda_plus, s.psi_plus), (s.lambda_minus, s.psi_minus)):
            assert np.linalg.norm(h @ psi - lam * psi) <= 1e-10 * norm * np.linalg.norm(psi)


@settings(max_examples=100, deadline=None)
@given(detunings, rates, losses, st.floats(0.0, 50.0))
def test_frame_covariance(delta, big_gamma, gamma0, centre):
    p = SystemParams(delta, big_gamma, gamma0)
    frame = FullFrameParams.centered(p, centre + abs(delta) / 2)
    full = eigensystem(build_full_hamiltonian(frame))
    eff = eigensystem(build_effective_hamiltonian(p))
    w0 = frame.frame_frequency
    for x, y in ((full.lambda_plus, eff.lambda_plus), (full.lambda_minus, eff.lambda_minus)):
        assert abs(x - (y + w0)) <= 1e-12 * max(abs(y + w0), 1.0)
