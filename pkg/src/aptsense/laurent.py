"""Laurent expansion of the transfer matrix at its critical frequencies.

All scalar prefactors are folded into ``coefficient`` so that, in every
case, ``(omega - omega0)**order_m * G(omega) -> coefficient``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from aptsense.errors import InsufficientData, NotOnCriticalLocus, WrongPoleOrder
from aptsense.metrology import QcrbSweep
from aptsense.model import SystemParams
from aptsense.transfer import (
    MODE_SWAP,
    CriticalCase,
    critical_frequencies,
    transfer_matrix,
)

EP_COUPLING = np.array(
    [
        [0.0, 1.0, -1.0, 0.0],
        [1.0, 0.0, 0.0, 1.0],
        [1.0, 0.0, 0.0, 1.0],
        [0.0, -1.0, 1.0, 0.0],
    ]
)

MIN_FIT_ROWS = 8


@dataclass(frozen=True)
class LaurentExpansion:
    omega0: float
    order_m: int
    coefficient: np.ndarray
    case_label: CriticalCase


@dataclass(frozen=True)
class ResidueEstimate:
    limit: np.ndarray
    radii: tuple[float, ...]
    deviations: tuple[float, ...]
    increments: tuple[float, ...]
    two_sided_gap: float


@dataclass(frozen=True)
class PoleFit:
    m_estimate: float
    intercept: float
    r_squared: float
    window: tuple[float, float]
    n_points: int


def _unbroken_coefficient(p: SystemParams) -> np.ndarray:
    g = p.gamma0 + p.big_gamma
    h = math.sqrt(max(-p.gamma0 * (p.gamma0 + 2.0 * p.big_gamma), 0.0)) / g
    f = p.big_gamma / g
    return 0.5 * np.array(
        [
            [h, 0.0, -1.0, f],
            [0.0, -h, f, -1.0],
            [1.0, -f, h, 0.0],
            [-f, 1.0, 0.0, -h],
        ]
    )


def _broken_coefficient(p: SystemParams, omega0: float) -> np.ndarray:
    G, d = p.big_gamma, abs(p.delta)
    c1 = np.array(
        [
            [0.0, G, -omega0 - 0.5 * d, 0.0],
            [G, 0.0, 0.0, -omega0 + 0.5 * d],
            [omega0 + 0.5 * d, 0.0, 0.0, G],
            [0.0, omega0 - 0.5 * d, G, 0.0],
        ]
    )
    return c1 / (2.0 * omega0)


def analytic_laurent(p: SystemParams) -> LaurentExpansion:
    """Leading Laurent term of G at the positive critical frequency.

    Closed forms are tabulated for delta > 0; negative detuning is mapped
    through the cavity exchange, which sends G to S G S.
    """
    case = critical_frequencies(p).case_label
    if case is CriticalCase.EXCEPTIONAL_POINT:
        omega0, order, coeff = 0.0, 2, p.big_gamma * EP_COUPLING
    elif case is CriticalCase.BROKEN_DETUNED:
        omega0 = math.sqrt(0.25 * p.delta**2 - p.big_gamma**2)
        order, coeff = 1, _broken_coefficient(p, omega0)
    elif case is CriticalCase.UNBROKEN_LOCUS:
        if abs(p.gamma0 + p.big_gamma) == 0.0 or p.delta == 0.0:
            raise NotOnCriticalLocus("locus endpoints have no tabulated expansion")
        omega0, order, coeff = 0.0, 1, _unbroken_coefficient(p)
    else:
        raise NotOnCriticalLocus(
            f"parameters {p} are not on a lasing locus, the gain-balanced "
            "broken phase, or an exceptional point"
        )
    if p.delta < 0:
        coeff = MODE_SWAP @ coeff @ MODE_SWAP
    return LaurentExpansion(omega0, order, coeff, case)


def _scaled(p: SystemParams, omega0: float, m: int, offset: float) -> np.ndarray:
    return offset**m * transfer_matrix(p, omega0 + offset).matrix


def _richardson(radii, values) -> np.ndarray:
    # cancels the O(r) term of the next Laurent order
    r1, r2 = radii[-2], radii[-1]
    return (r1 * values[-1] - r2 * values[-2]) / (r1 - r2)


def numerical_residue(p: SystemParams, omega0: float, m: int, radii) -> ResidueEstimate:
    """Probe ``(omega - omega0)**m G(omega)`` on both sides of ``omega0``.

    The returned limit is the mean of the two one-sided Richardson limits.
    ``WrongPoleOrder`` is raised when the successive increments between
    radii grow (order too low) or the limit vanishes (order too high).
    """
    radii = tuple(float(r) for r in radii)
    if len(radii) < 2:
        raise ValueError("need at least two radii")
    if any(r <= 0 for r in radii) or any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be positive and strictly decreasing")
    if radii[-1] < 1e-6 * p.rate_scale:
        raise ValueError("smallest radius must be >= 1e-6 * big_gamma")
    if m < 1:
        raise ValueError("pole order must be >= 1")

    right = [_scaled(p, omega0, m, r) for r in radii]
    left = [_scaled(p, omega0, m, -r) for r in radii]
    lim_right = _richardson(radii, right)
    lim_left = _richardson(radii, left)
    limit = 0.5 * (lim_right + lim_left)

    increments = tuple(
        float(np.max(np.abs(b - a))) for a, b in zip(right, right[1:])
    )
    if any(later > earlier for earlier, later in zip(increments, increments[1:])) or (
        len(increments) == 1 and increments[0] > np.max(np.abs(right[0]))
    ):
        raise WrongPoleOrder(f"residue diverges as radius shrinks with m={m}")
    # with m one too high, r^m G shrinks like r and extrapolates to ~0
    peak = max(float(np.max(np.abs(v))) for v in right)
    if float(np.max(np.abs(limit))) <= 1e-3 * peak:
        raise WrongPoleOrder(f"residue vanishes with m={m}; the pole order is lower")

    deviations = tuple(float(np.max(np.abs(v - limit))) for v in right)
    gap = float(np.max(np.abs(lim_right - lim_left)))
    return ResidueEstimate(limit, radii, deviations, increments, gap)


def pole_order_fit(sweep: QcrbSweep, omega0: float, window: tuple[float, float],
                   min_rows: int = MIN_FIT_ROWS) -> PoleFit:
    """Least-squares slope of log10(qcrb) against log10|omega - omega0|.

    ``window`` bounds the offset |omega - omega0|, not omega itself.
    """
    lo, hi = float(window[0]), float(window[1])
    if not 0 < lo < hi:
        raise ValueError("window must satisfy 0 < lo < hi")
    offset = np.abs(sweep.omega - omega0)
    floor = 10.0 * sweep.probe.derivative_step
    mask = sweep.usable() & (offset >= lo) & (offset <= hi) & (offset >= floor)
    n = int(mask.sum())
    if n < min_rows:
        raise InsufficientData(f"{n} usable rows in window [{lo}, {hi}], need {min_rows}")

    x = np.log10(offset[mask])
    y = np.log10(sweep.qcrb[mask])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return PoleFit(float(slope), float(intercept), min(max(r2, 0.0), 1.0), (lo, hi), n)
