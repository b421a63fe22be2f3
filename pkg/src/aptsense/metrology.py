"""Gaussian output statistics, quantum Fisher information and QCRB sweeps.

The output covariance has the form ``G W G^T`` with ``G`` the transfer
matrix and ``W`` built from the (polynomial) inverse transfer matrix.
Near a pole ``G`` grows without bound while ``W`` stays well conditioned,
so the Fisher information is evaluated through ``W`` rather than by
inverting the output covariance directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from aptsense.errors import InvalidParameters, SingularAtFrequency, SingularCovariance
from aptsense.model import SystemParams
from aptsense.transfer import (
    INVERSE_DERIVATIVE,
    critical_frequencies,
    inverse_transfer_matrix,
    transfer_matrix,
)

# relative distance (in units of Gamma) below which omega counts as on a root
CRITICAL_GUARD = 1e-12
# the difference step never exceeds this fraction of the distance to a root
STEP_FRACTION = 1e-3
# W is declared singular beyond this condition number
MAX_CONDITION = 1e13

VACUUM_AS_WRITTEN = np.array(
    [
        [1, 0, 1j, 0],
        [0, 1, 0, 1j],
        [-1j, 0, 1, 0],
        [0, -1j, 0, 1],
    ],
    dtype=complex,
)


class CovarianceMode(str, Enum):
    SYMMETRIC_VACUUM = "symmetric"
    AS_WRITTEN = "as-written"


@dataclass(frozen=True)
class ProbeConfig:
    """Coherent probe mean and noise model.

    ``mu_in`` holds the mean input quadratures (x_a, x_b, y_a, y_b); the
    default is a unit coherent amplitude in each cavity.
    """

    mu_in: tuple[float, float, float, float] = (2.0, 2.0, 0.0, 0.0)
    covariance_mode: CovarianceMode = CovarianceMode.SYMMETRIC_VACUUM
    derivative_step: float = 1e-6

    def __post_init__(self):
        mu = tuple(float(x) for x in self.mu_in)
        if len(mu) != 4 or not np.all(np.isfinite(mu)):
            raise InvalidParameters(f"mu_in must be 4 finite numbers, got {self.mu_in!r}")
        object.__setattr__(self, "mu_in", mu)
        object.__setattr__(self, "covariance_mode", CovarianceMode(self.covariance_mode))
        if not self.derivative_step > 0:
            raise InvalidParameters("derivative_step must be > 0")

    def check_against(self, p: SystemParams) -> None:
        if self.derivative_step > 1e-2 * p.rate_scale:
            raise InvalidParameters(
                f"derivative_step {self.derivative_step} exceeds 1e-2 * big_gamma"
            )


def _noise_matrix(mode: CovarianceMode) -> np.ndarray:
    if mode is CovarianceMode.SYMMETRIC_VACUUM:
        return np.eye(4)
    return VACUUM_AS_WRITTEN


def _noise_rates(p: SystemParams) -> tuple[float, float]:
    # |gamma0 - gamma_c| keeps the intrinsic noise power non-negative under gain
    return p.gamma_c * abs(p.intrinsic_loss), p.gamma_c * p.gamma_bath


def output_mean(p: SystemParams, omega: float, probe: ProbeConfig) -> np.ndarray:
    """(I - gamma_c G(omega)) mu_in."""
    mu = np.asarray(probe.mu_in)
    if p.gamma_c == 0.0:
        return mu.copy()
    g = transfer_matrix(p, omega).matrix
    return mu - p.gamma_c * (g @ mu)


def output_covariance(p: SystemParams, omega: float, probe: ProbeConfig) -> np.ndarray:
    """Output noise covariance, assembled term by term.

    Real and symmetric for the symmetric vacuum; complex for the as-written
    vacuum correlators.
    """
    v = _noise_matrix(probe.covariance_mode)
    if p.gamma_c == 0.0:
        return v.copy()
    g = transfer_matrix(p, omega).matrix
    a = np.eye(4) - p.gamma_c * g
    rate_i, rate_bath = _noise_rates(p)
    return a @ v @ a.T + rate_i * (g @ v @ g.T) + rate_bath * (g @ v @ g.T)


def _distance_to_root(p: SystemParams, omega: float) -> float:
    roots = critical_frequencies(p).real_roots
    if not roots:
        return np.inf
    return min(abs(omega - r) for r in roots)


def effective_step(p: SystemParams, omega: float, probe: ProbeConfig) -> float:
    """Central-difference step, shrunk so the stencil never straddles a root."""
    dist = _distance_to_root(p, omega)
    if dist <= CRITICAL_GUARD * p.rate_scale:
        det = np.linalg.det(inverse_transfer_matrix(p, omega).matrix)
        raise SingularAtFrequency(omega, det)
    return min(probe.derivative_step, STEP_FRACTION * dist)


def output_mean_derivative(p: SystemParams, omega: float, probe: ProbeConfig,
                           method: str = "central") -> np.ndarray:
    """d mu_out / d omega, by central difference or in closed form.

    The closed form uses dG/domega = -G (dG^-1/domega) G.
    """
    if method == "analytic":
        if p.gamma_c == 0.0:
            return np.zeros(4)
        g = transfer_matrix(p, omega).matrix
        mu = np.asarray(probe.mu_in)
        return p.gamma_c * (g @ INVERSE_DERIVATIVE @ g @ mu)
    if method != "central":
        raise ValueError(f"unknown derivative method {method!r}")
    h = effective_step(p, omega, probe)
    return (output_mean(p, omega + h, probe) - output_mean(p, omega - h, probe)) / (2 * h)


def qfi(p: SystemParams, omega: float, probe: ProbeConfig | None = None,
        method: str = "central") -> float:
    """Gaussian Fisher information about omega carried by the output mean."""
    probe = probe or ProbeConfig()
    probe.check_against(p)
    if p.gamma_c == 0.0:
        return 0.0

    dmu = output_mean_derivative(p, omega, probe, method)
    m = inverse_transfer_matrix(p, omega).matrix
    v = _noise_matrix(probe.covariance_mode)
    rate_i, rate_bath = _noise_rates(p)
    n = m - p.gamma_c * np.eye(4)
    w = n @ v @ n.T + (rate_i + rate_bath) * v
    if np.linalg.cond(w) > MAX_CONDITION:
        raise SingularCovariance(f"output covariance is not invertible at omega={omega!r}")

    # V_out^-1 = M^T W^-1 M
    u = m @ dmu
    value = u @ np.linalg.solve(w, u)
    return float(np.real(value))


def qcrb(p: SystemParams, omega: float, probe: ProbeConfig | None = None,
         method: str = "central") -> float:
    return qcrb_from_qfi(qfi(p, omega, probe, method))


def qcrb_from_qfi(info: float) -> float:
    """1/sqrt(I), infinite when the information vanishes."""
    if info > 0:
        return 1.0 / np.sqrt(info)
    if info <= 0:
        return np.inf
    return np.nan


@dataclass(frozen=True)
class QcrbSweep:
    """QFI and QCRB over a frequency grid.

    Rows on a critical frequency are flagged with ``qfi = inf`` and
    ``qcrb = 0``; rows whose covariance is singular are flagged with NaN.
    ``params`` is None for sweeps read back from a file.
    """

    params: SystemParams | None
    probe: ProbeConfig
    omega: np.ndarray
    qfi: np.ndarray
    qcrb: np.ndarray
    flagged: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.omega)

    def rows(self):
        return list(zip(self.omega.tolist(), self.qfi.tolist(),
                        self.qcrb.tolist(), self.flagged.tolist()))

    def usable(self) -> np.ndarray:
        ok = ~self.flagged & np.isfinite(self.qcrb) & (self.qcrb > 0)
        return ok


def qcrb_sweep(p: SystemParams, omega_grid, probe: ProbeConfig | None = None,
               method: str = "central") -> QcrbSweep:
    probe = probe or ProbeConfig()
    grid = np.asarray(omega_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("omega_grid must be a non-empty 1-D sequence")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("omega_grid must be strictly increasing")

    info = np.empty_like(grid)
    bound = np.empty_like(grid)
    flagged = np.zeros(grid.shape, dtype=bool)
    for k, w in enumerate(grid):
        try:
            info[k] = qfi(p, float(w), probe, method)
            bound[k] = qcrb_from_qfi(info[k])
        except SingularAtFrequency:
            info[k], bound[k], flagged[k] = np.inf, 0.0, True
        except SingularCovariance:
            info[k], bound[k], flagged[k] = np.nan, np.nan, True
    return QcrbSweep(p, probe, grid, info, bound, flagged)
