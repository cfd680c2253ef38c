"""Zeros of the complex-time survival amplitude of finite quantum systems.

The package locates exact zeros by an argument-principle subdivision
search, builds the envelope-based approximate zero distribution, and
provides the model zoo (collective/long-range/nearest-neighbor Ising,
XY, Gaussian ladder) whose quenches feed both.
"""

__version__ = "0.1.0"

from .amplitude import (AmplitudeValue, EnergyDistribution, evaluate,
                        evaluate_normalized, ipr, perturbation_scale, rate_function)
from .envelope import (Envelope, EnvelopeDiagnostics, approximate_zeros,
                       compute_envelope, diagnostics, local_period, monotonicity_check)
from .zerofinder import (BoxGrid, SearchWindow, Zero, ZeroSet, delta_eta,
                         edge_strip, find_zeros, winding_number)

__all__ = [
    "AmplitudeValue", "EnergyDistribution", "evaluate", "evaluate_normalized",
    "ipr", "perturbation_scale", "rate_function",
    "Envelope", "EnvelopeDiagnostics", "approximate_zeros", "compute_envelope",
    "diagnostics", "local_period", "monotonicity_check",
    "BoxGrid", "SearchWindow", "Zero", "ZeroSet", "delta_eta", "edge_strip",
    "find_zeros", "winding_number",
    "__version__",
]
