"""Two-mode dissipatively coupled cavity model.

Every rate and frequency is a dimensionless multiple of a reference rate;
the documented convention is ``big_gamma = 1``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from aptsense.errors import InvalidParameters, NonFiniteMatrix

DEFAULT_EP_TOL = 1e-9

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])


class Phase(str, Enum):
    UNBROKEN = "unbroken"
    BROKEN = "broken"
    EXCEPTIONAL_POINT = "exceptional_point"


@dataclass(frozen=True)
class SystemParams:
    """Detuning and rates of the balanced-loss two-cavity system.

    ``gamma0`` is the total rate of each cavity (negative means gain),
    ``gamma_c`` the probe-channel coupling and ``gamma_bath`` the noise rate
    of the shared dissipative channel, which defaults to ``big_gamma``.
    """

    delta: float
    big_gamma: float
    gamma0: float
    gamma_c: float = 0.0
    gamma_bath: float | None = None

    def __post_init__(self):
        if self.gamma_bath is None:
            object.__setattr__(self, "gamma_bath", self.big_gamma)
        for name in ("delta", "big_gamma", "gamma0", "gamma_c", "gamma_bath"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InvalidParameters(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.big_gamma < 0:
            raise InvalidParameters(f"big_gamma must be >= 0, got {self.big_gamma}")
        if self.gamma_c < 0:
            raise InvalidParameters(f"gamma_c must be >= 0, got {self.gamma_c}")
        if self.gamma_bath < 0:
            raise InvalidParameters(f"gamma_bath must be >= 0, got {self.gamma_bath}")

    @property
    def rate_scale(self) -> float:
        """Reference rate for tolerances: Gamma, or the largest other rate if the cavities are decoupled."""
        if self.big_gamma > 0:
            return self.big_gamma
        return max(abs(self.gamma0), abs(self.delta), 1.0)

    @property
    def intrinsic_loss(self) -> float:
        """gamma0 - gamma_c; negative when the cavities carry net gain."""
        return self.gamma0 - self.gamma_c

    @classmethod
    def from_epsilon(cls, epsilon: float, big_gamma: float = 1.0, **kwargs) -> "SystemParams":
        """Gain-balanced point ``gamma0 = -big_gamma`` with ``delta = (2 + epsilon) big_gamma``."""
        return cls(delta=(2.0 + epsilon) * big_gamma, big_gamma=big_gamma,
                   gamma0=-big_gamma, **kwargs)


@dataclass(frozen=True)
class FullFrameParams:
    """Lab-frame cavity frequencies together with the rotating-frame parameters."""

    omega_a: float
    omega_b: float
    system: SystemParams

    def __post_init__(self):
        for name in ("omega_a", "omega_b"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise InvalidParameters(f"{name} must be finite and >= 0, got {value!r}")
        mismatch = abs((self.omega_a - self.omega_b) - self.system.delta)
        scale = max(1.0, abs(self.omega_a), abs(self.omega_b))
        if mismatch > 4 * np.finfo(float).eps * scale:
            raise InvalidParameters(
                f"omega_a - omega_b = {self.omega_a - self.omega_b!r} "
                f"does not match delta = {self.system.delta!r}"
            )

    @property
    def frame_frequency(self) -> float:
        """Rotating-frame frequency (omega_a + omega_b) / 2."""
        return 0.5 * (self.omega_a + self.omega_b)

    @classmethod
    def centered(cls, system: SystemParams, frame_frequency: float | None = None) -> "FullFrameParams":
        """Place the two cavities symmetrically about ``frame_frequency``.

        The default centre is the smallest one that keeps both frequencies
        non-negative.
        """
        if frame_frequency is None:
            frame_frequency = 0.5 * abs(system.delta)
        return cls(frame_frequency + 0.5 * system.delta,
                   frame_frequency - 0.5 * system.delta, system)


@dataclass(frozen=True)
class Spectrum:
    lambda_plus: complex
    lambda_minus: complex
    psi_plus: np.ndarray
    psi_minus: np.ndarray
    phase: Phase


def build_effective_hamiltonian(p: SystemParams) -> np.ndarray:
    damping = p.gamma0 + p.big_gamma
    return np.array(
        [
            [0.5 * p.delta - 1j * damping, -1j * p.big_gamma],
            [-1j * p.big_gamma, -0.5 * p.delta - 1j * damping],
        ],
        dtype=complex,
    )


def build_full_hamiltonian(p: FullFrameParams) -> np.ndarray:
    """Lab-frame non-Hermitian Hamiltonian with equal cavity rates ``gamma0``."""
    s = p.system
    damping = s.gamma0 + s.big_gamma
    return np.array(
        [
            [p.omega_a - 1j * damping, -1j * s.big_gamma],
            [-1j * s.big_gamma, p.omega_b - 1j * damping],
        ],
        dtype=complex,
    )


def _discriminant(h: np.ndarray) -> tuple[complex, float]:
    # (a - d)^2/4 + b c; for the model this is delta^2/4 - Gamma^2
    a, b, c, d = h[0, 0], h[0, 1], h[1, 0], h[1, 1]
    return 0.25 * (a - d) ** 2 + b * c, abs(b * c)


def _phase_from_discriminant(disc: complex, scale: float, ep_tol: float) -> Phase:
    if abs(disc) <= ep_tol * scale:
        return Phase.EXCEPTIONAL_POINT
    return Phase.UNBROKEN if disc.real < 0 else Phase.BROKEN


def _eigenvector(h: np.ndarray, lam: complex) -> np.ndarray:
    a, b, c, d = h[0, 0], h[0, 1], h[1, 0], h[1, 1]
    # both rows of (h - lam) annihilate the eigenvector; use the better-scaled one
    from_row1 = np.array([b, lam - a], dtype=complex)
    from_row2 = np.array([lam - d, c], dtype=complex)
    v = from_row1 if np.linalg.norm(from_row1) >= np.linalg.norm(from_row2) else from_row2
    norm = np.linalg.norm(v)
    if norm == 0.0:
        return np.array([1.0, 0.0], dtype=complex)
    if abs(v[1]) > 1e-12 * norm:
        return v / v[1]
    return v / norm


def eigensystem(h: np.ndarray, ep_tol: float = DEFAULT_EP_TOL) -> Spectrum:
    """Eigenvalues and eigenvectors of a 2x2 non-Hermitian matrix.

    ``lambda_plus`` carries the principal square root of the discriminant.
    Eigenvectors are scaled so that their second entry is 1 (unit norm when
    that entry vanishes). Inside the exceptional-point band the root is
    snapped to zero and the single coalesced eigenvector fills both slots.
    """
    h = np.asarray(h, dtype=complex)
    if h.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise NonFiniteMatrix("matrix has non-finite entries")
    if ep_tol <= 0:
        raise ValueError("ep_tol must be > 0")

    disc, scale = _discriminant(h)
    phase = _phase_from_discriminant(disc, scale, ep_tol)
    centre = 0.5 * (h[0, 0] + h[1, 1])

    if phase is Phase.EXCEPTIONAL_POINT:
        psi = _eigenvector(h, centre)
        if np.linalg.norm(h - centre * np.eye(2)) == 0.0:
            # scalar matrix: every vector is an eigenvector
            return Spectrum(centre, centre, np.array([1.0, 0.0], dtype=complex),
                            np.array([0.0, 1.0], dtype=complex), phase)
        return Spectrum(centre, centre, psi, psi.copy(), phase)

    root = cmath.sqrt(disc)
    lam_plus, lam_minus = centre + root, centre - root
    return Spectrum(lam_plus, lam_minus, _eigenvector(h, lam_plus),
                    _eigenvector(h, lam_minus), phase)


def classify_phase(p: SystemParams, ep_tol: float = DEFAULT_EP_TOL) -> Phase:
    """Unbroken for |delta| < 2 Gamma, broken for |delta| > 2 Gamma.

    Uses the same discriminant band as :func:`eigensystem` so the two agree
    on every input.
    """
    disc = 0.25 * p.delta**2 - p.big_gamma**2
    return _phase_from_discriminant(complex(disc), p.rate_scale**2, ep_tol)


def check_anti_pt(h: np.ndarray) -> float:
    """Max-norm residual of sigma_x conj(h) sigma_x + h (zero for anti-PT h)."""
    h = np.asarray(h, dtype=complex)
    return float(np.max(np.abs(SIGMA_X @ h.conj() @ SIGMA_X + h)))
