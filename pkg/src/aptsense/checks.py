"""Fast invariant checks shared by the ``validate`` command and the tests."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from aptsense.laurent import analytic_laurent, numerical_residue
from aptsense.model import SystemParams, build_effective_hamiltonian, check_anti_pt, eigensystem
from aptsense.transfer import (
    critical_frequencies,
    determinant_closed_form,
    transfer_determinant,
    unbroken_lasing_locus,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    threshold: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.threshold)


def random_params(rng: np.random.Generator, n: int) -> list[SystemParams]:
    out = []
    for _ in range(n):
        big_gamma = rng.uniform(0.1, 3.0)
        out.append(SystemParams(delta=rng.uniform(-6.0, 6.0) * big_gamma,
                                big_gamma=big_gamma,
                                gamma0=rng.uniform(-3.0, 3.0) * big_gamma,
                                gamma_c=rng.uniform(0.0, 1.0)))
    return out


def anti_pt_residual(params) -> float:
    worst = 0.0
    for p in params:
        h = build_effective_hamiltonian(p)
        worst = max(worst, check_anti_pt(h) / np.max(np.abs(h)))
    return worst


def spectral_consistency(params) -> float:
    worst = 0.0
    for p in params:
        h = build_effective_hamiltonian(p)
        s = eigensystem(h)
        tr, det = np.trace(h), np.linalg.det(h)
        worst = max(worst,
                    abs(s.lambda_plus + s.lambda_minus - tr) / abs(tr) if tr else 0.0,
                    abs(s.lambda_plus * s.lambda_minus - det) / abs(det) if det else 0.0)
    return worst


def determinant_factorization(params, omegas) -> float:
    worst = 0.0
    for p, w in zip(params, omegas):
        closed = determinant_closed_form(p, w)
        worst = max(worst, abs(transfer_determinant(p, w) - closed) / abs(closed))
    return worst


def locus_root_certification(n: int = 20, big_gamma: float = 1.0) -> float:
    worst = 0.0
    for g0 in np.linspace(-2.0, 0.0, n + 2)[1:-1] * big_gamma:
        delta = unbroken_lasing_locus(g0, big_gamma)
        p = SystemParams(delta=delta, big_gamma=big_gamma, gamma0=g0)
        worst = max(worst, abs(transfer_determinant(p, 0.0)))
    return worst


def broken_root_certification() -> float:
    p = SystemParams(delta=4.0, big_gamma=1.0, gamma0=-1.0)
    crit = critical_frequencies(p)
    norm = max(1.0, abs(transfer_determinant(p, 0.0)))
    return max(abs(transfer_determinant(p, w)) / norm for w in crit.real_roots)


LAURENT_CASES = {
    "unbroken_locus": SystemParams(delta=3.0**0.5, big_gamma=1.0, gamma0=-0.5),
    "broken_detuned": SystemParams(delta=4.0, big_gamma=1.0, gamma0=-1.0),
    "exceptional_point": SystemParams(delta=2.0, big_gamma=1.0, gamma0=-1.0),
}


def laurent_agreement(radius: float = 1e-4) -> float:
    worst = 0.0
    for p in LAURENT_CASES.values():
        exp = analytic_laurent(p)
        est = numerical_residue(p, exp.omega0, exp.order_m, (10 * radius, radius))
        worst = max(worst, float(np.max(np.abs(est.limit - exp.coefficient))))
    return worst


def run_invariant_suite(seed: int = 20240601, draws: int = 200) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    params = random_params(rng, draws)
    omegas = rng.uniform(-5.0, 5.0, draws)
    return [
        CheckResult("anti_pt_residual", anti_pt_residual(params), 1e-14),
        CheckResult("spectral_consistency", spectral_consistency(params), 1e-12),
        CheckResult("determinant_factorization", determinant_factorization(params, omegas), 1e-10),
        CheckResult("broken_root_certification", broken_root_certification(), 1e-8),
        CheckResult("locus_root_certification", locus_root_certification(), 1e-8),
        CheckResult("laurent_oracle_agreement", laurent_agreement(), 1e-3),
    ]
