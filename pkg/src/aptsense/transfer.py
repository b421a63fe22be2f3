"""Quadrature transfer function and its critical (lasing) frequencies.

Quadrature rows and columns are ordered (x_a, x_b, y_a, y_b).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from aptsense.errors import SingularAtFrequency
from aptsense.model import SystemParams

SINGULARITY_FLOOR = 1e-250
ROOT_TOL = 1e-10
LOCUS_TOL = 1e-8

# derivative of the inverse transfer matrix with respect to omega
INVERSE_DERIVATIVE = np.array(
    [
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [-1.0, 0.0, 0.0, 0.0],
        [0.0, -1.0, 0.0, 0.0],
    ]
)

# exchanges the two cavities in both quadrature blocks; maps delta -> -delta
MODE_SWAP = np.eye(4)[[1, 0, 3, 2]]


class CriticalCase(str, Enum):
    BROKEN_DETUNED = "broken_detuned"
    UNBROKEN_LOCUS = "unbroken_locus"
    EXCEPTIONAL_POINT = "exceptional_point"
    NO_REAL_ROOT = "no_real_root"


@dataclass(frozen=True)
class TransferMatrix:
    omega: float
    matrix: np.ndarray


@dataclass(frozen=True)
class CriticalFrequencies:
    omega_sq_plus: complex
    omega_sq_minus: complex
    real_roots: tuple[float, ...]
    case_label: CriticalCase


def inverse_transfer_matrix(p: SystemParams, omega: float) -> TransferMatrix:
    g = p.gamma0 + p.big_gamma
    G = p.big_gamma
    lo = omega - 0.5 * p.delta
    hi = omega + 0.5 * p.delta
    m = np.array(
        [
            [g, G, lo, 0.0],
            [G, g, 0.0, hi],
            [-lo, 0.0, g, G],
            [0.0, -hi, G, g],
        ]
    )
    return TransferMatrix(float(omega), m)


def transfer_determinant(p: SystemParams, omega: float) -> float:
    """det of the inverse transfer matrix by LU factorisation."""
    return float(np.linalg.det(inverse_transfer_matrix(p, omega).matrix))


def determinant_closed_form(p: SystemParams, omega: float) -> float:
    """(g^2 - w^2 + K)^2 + 4 g^2 w^2 with g = gamma0 + Gamma, K = delta^2/4 - Gamma^2.

    The 4x4 matrix has block form [[A, B], [-B, A]], whose determinant is
    |det(A + iB)|^2, and det(A + iB) = g^2 - w^2 + K + 2 i g w.
    """
    g = p.gamma0 + p.big_gamma
    k = 0.25 * p.delta**2 - p.big_gamma**2
    return (g * g - omega * omega + k) ** 2 + 4.0 * g * g * omega * omega


def transfer_matrix(p: SystemParams, omega: float) -> TransferMatrix:
    inv = inverse_transfer_matrix(p, omega).matrix
    det = np.linalg.det(inv)
    if not abs(det) > SINGULARITY_FLOOR:
        raise SingularAtFrequency(omega, det)
    return TransferMatrix(float(omega), np.linalg.inv(inv))


def omega_squared_roots(p: SystemParams) -> tuple[complex, complex]:
    """Both roots in omega^2 of det = 0."""
    g0, G, d = p.gamma0, p.big_gamma, p.delta
    base = -(g0 * g0 + 2.0 * g0 * G + 2.0 * G * G) + 0.25 * d * d
    radical = cmath.sqrt((g0 + G) ** 2 * (4.0 * G * G - d * d))
    return base + radical, base - radical


def on_lasing_locus(p: SystemParams, tol: float = LOCUS_TOL) -> bool:
    """Whether 4 gamma0^2 + delta^2 + 8 gamma0 Gamma vanishes (undetuned lasing)."""
    residual = 4.0 * p.gamma0**2 + p.delta**2 + 8.0 * p.gamma0 * p.big_gamma
    return abs(residual) <= tol * p.rate_scale**2


def is_gain_balanced(p: SystemParams, tol: float = LOCUS_TOL) -> bool:
    return abs(p.gamma0 + p.big_gamma) <= tol * p.rate_scale


def critical_frequencies(p: SystemParams, root_tol: float = ROOT_TOL) -> CriticalFrequencies:
    plus, minus = omega_squared_roots(p)
    scale = p.rate_scale**2

    roots: set[float] = set()
    for w2 in (plus, minus):
        if abs(w2.imag) <= root_tol * scale and w2.real >= -root_tol * scale:
            w = math.sqrt(max(w2.real, 0.0))
            roots.update((w, -w) if w > 0 else (0.0,))

    balanced = is_gain_balanced(p)
    band = abs(abs(p.delta) - 2.0 * p.big_gamma) <= LOCUS_TOL * p.rate_scale
    if balanced and band:
        label = CriticalCase.EXCEPTIONAL_POINT
    elif balanced and abs(p.delta) > 2.0 * p.big_gamma:
        label = CriticalCase.BROKEN_DETUNED
    elif on_lasing_locus(p):
        label = CriticalCase.UNBROKEN_LOCUS
    else:
        label = CriticalCase.NO_REAL_ROOT

    return CriticalFrequencies(plus, minus, tuple(sorted(roots)), label)


def unbroken_lasing_locus(gamma0: float, big_gamma: float) -> float | None:
    """Positive detuning that puts (gamma0, Gamma) on the undetuned lasing locus."""
    if big_gamma <= 0:
        raise ValueError("big_gamma must be > 0")
    if not -2.0 * big_gamma < gamma0 < 0.0:
        return None
    return math.sqrt(-4.0 * gamma0 * (gamma0 + 2.0 * big_gamma))
