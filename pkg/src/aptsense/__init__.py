"""Anti-PT-symmetric coupled-cavity sensing: spectra, transfer function,
Gaussian Fisher information, Laurent analysis and time-domain oracles."""

from aptsense.errors import InvalidParameters, NumericalFailure
from aptsense.laurent import analytic_laurent, numerical_residue, pole_order_fit
from aptsense.metrology import ProbeConfig, qcrb, qcrb_sweep, qfi
from aptsense.model import Phase, SystemParams, build_effective_hamiltonian, classify_phase, eigensystem
from aptsense.transfer import critical_frequencies, transfer_matrix

__all__ = [
    "InvalidParameters", "NumericalFailure", "Phase", "ProbeConfig", "SystemParams",
    "analytic_laurent", "build_effective_hamiltonian", "classify_phase",
    "critical_frequencies", "eigensystem", "numerical_residue", "pole_order_fit",
    "qcrb", "qcrb_sweep", "qfi", "transfer_matrix",
]
__version__ = "0.1.0"
