"""Overflow-safe evaluation of the complex-time survival amplitude.

A finite-dimensional initial state is fully described by the pairs
(E_j, k_j) of populated energy levels.  The survival amplitude is the
weighted exponential sum

    L(z) = sum_j k_j exp(-E_j z),    z = beta + i t,

evaluated here in log-modulus/phase form so that no intermediate quantity
overflows for any beta.  All operations are pure functions of immutable
inputs and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import InvalidDistribution

#: relative energy window inside which levels are merged as degenerate
DEGENERACY_RTOL = 1e-10
#: post-normalization populations below this are dropped
POPULATION_FLOOR = 1e-14


class AmplitudeValue(NamedTuple):
    """Log-polar value of the survival amplitude.

    ``log_modulus`` is ln|L| (``-inf`` only at an exact zero) and ``phase``
    lies in (-pi, pi].
    """

    log_modulus: float
    phase: float

    @property
    def value(self) -> complex:
        """Plain complex value; may under/overflow for extreme moduli."""
        return np.exp(self.log_modulus) * np.exp(1j * self.phase)

    @property
    def modulus(self) -> float:
        return float(np.exp(self.log_modulus))


def _reduce_phase(phi):
    """Map angles to (-pi, pi]."""
    out = np.mod(phi + np.pi, 2 * np.pi) - np.pi
    return np.where(out == -np.pi, np.pi, out)


@dataclass(frozen=True)
class EnergyDistribution:
    """Pairs (E_j, k_j) defining the initial-state energy distribution.

    Construction merges levels degenerate within ``DEGENERACY_RTOL`` of the
    spectral range, normalizes the populations, and drops levels below
    ``POPULATION_FLOOR`` (recorded in ``dropped_weight``).
    """

    energies: np.ndarray
    populations: np.ndarray
    label: str | None = None
    dropped_weight: float = field(default=0.0, compare=False)
    dropped_levels: int = field(default=0, compare=False)

    def __init__(self, energies, populations, label=None):
        energies = np.asarray(energies, dtype=float).ravel()
        populations = np.asarray(populations, dtype=float).ravel()
        if energies.size == 0 or energies.shape != populations.shape:
            raise InvalidDistribution("need matching, non-empty energy/population lists")
        if not (np.all(np.isfinite(energies)) and np.all(np.isfinite(populations))):
            raise InvalidDistribution("energies and populations must be finite")
        if np.any(populations < 0):
            raise InvalidDistribution("populations must be non-negative")

        order = np.argsort(energies, kind="stable")
        energies = energies[order]
        populations = populations[order]

        span = energies[-1] - energies[0]
        tol = DEGENERACY_RTOL * span if span > 0 else 0.0
        merged_e, merged_k = [energies[0]], [populations[0]]
        for e, k in zip(energies[1:], populations[1:]):
            if e - merged_e[-1] <= tol:
                merged_k[-1] += k
            else:
                merged_e.append(e)
                merged_k.append(k)
        energies = np.array(merged_e)
        populations = np.array(merged_k)

        total = populations.sum()
        if total <= 0:
            raise InvalidDistribution("at least one population must be positive")
        populations = populations / total

        keep = populations >= POPULATION_FLOOR
        dropped_weight = float(populations[~keep].sum())
        dropped_levels = int((~keep).sum())
        energies = energies[keep]
        populations = populations[keep]
        populations = populations / populations.sum()

        object.__setattr__(self, "energies", energies)
        object.__setattr__(self, "populations", populations)
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "dropped_weight", dropped_weight)
        object.__setattr__(self, "dropped_levels", dropped_levels)
        self.energies.setflags(write=False)
        self.populations.setflags(write=False)

    def __len__(self) -> int:
        return self.energies.size

    @property
    def log_populations(self) -> np.ndarray:
        return np.log(self.populations)

    @property
    def span(self) -> float:
        """Spectral range |E_d - E_0|."""
        return float(self.energies[-1] - self.energies[0])

    @property
    def energy_center(self) -> float:
        """Midpoint of the populated spectrum (winding-invariant shift)."""
        return float(0.5 * (self.energies[0] + self.energies[-1]))

    @property
    def phase_rate_bound(self) -> float:
        """Smooth phase rate bound max_j |E_j - center| for contour sampling."""
        return 0.5 * self.span

    def log_amplitude(self, z):
        """Vectorized log-domain amplitude.

        Parameters
        ----------
        z : complex scalar or array

        Returns
        -------
        (log_modulus, phase) arrays of the same shape as ``z``.  The maximum
        exponent ln(k_j) - E_j*beta is factored out before summation, so the
        result is finite-safe for any beta.
        """
        z = np.asarray(z, dtype=complex)
        scalar = z.ndim == 0
        zf = z.ravel()
        # exponents: ln k_j - E_j beta - i E_j t, shape (nz, d)
        expo = self.log_populations[None, :] - np.outer(zf, self.energies)
        m = expo.real.max(axis=1)
        s = np.exp(expo - m[:, None]).sum(axis=1)
        mod = np.abs(s)
        with np.errstate(divide="ignore"):
            log_mod = m + np.log(mod)
        phase = _reduce_phase(np.angle(s))
        log_mod = log_mod.reshape(z.shape)
        phase = phase.reshape(z.shape)
        if scalar:
            return float(log_mod), float(phase)
        return log_mod, phase

    def noise_mask(self, z):
        """True where the summed amplitude is below the cancellation floor.

        When the shifted sum cancels down to ~(number of terms) * machine
        epsilon, the returned modulus and phase are rounding noise; contour
        methods must treat such points like exact zeros.
        """
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        expo = self.log_populations[None, :] - np.outer(z.ravel(), self.energies)
        m = expo.real.max(axis=1)
        s = np.exp(expo - m[:, None]).sum(axis=1)
        floor = 16.0 * len(self) * np.finfo(float).eps
        return (np.abs(s) <= floor).reshape(z.shape)


def evaluate(dist: EnergyDistribution, z: complex) -> AmplitudeValue:
    """Survival amplitude L(z) = sum_j k_j exp(-E_j z) in log-polar form."""
    log_mod, phase = dist.log_amplitude(z)
    return AmplitudeValue(log_mod, phase)


def evaluate_normalized(dist: EnergyDistribution, z: complex) -> AmplitudeValue:
    """Normalized amplitude L(z)/L(beta).

    The divisor L(beta) is a sum of positive terms, hence real and strictly
    positive: zero locations are unchanged and |L~| = 1 exactly at t = 0.
    """
    log_mod, phase = dist.log_amplitude(z)
    ref_mod, _ = dist.log_amplitude(complex(np.real(z)))
    return AmplitudeValue(log_mod - ref_mod, phase)


def rate_function(dist: EnergyDistribution, t: float, sites: int | None = None) -> float:
    """-ln|L~(it)| per site; +inf at an exact real-time zero.

    The per-site normalization is the caller's choice via ``sites``.
    """
    val = evaluate_normalized(dist, 1j * t)
    return -val.log_modulus / (sites if sites else 1)


def ipr(dist: EnergyDistribution) -> float:
    """Inverse participation ratio sqrt(sum_j k_j^2).

    Long-time plateau scale of the normalized survival amplitude.
    """
    return float(np.sqrt(np.sum(dist.populations**2)))


def perturbation_scale(dist: EnergyDistribution, a: int, b: int):
    """Rayleigh scale of the residual terms around the (a, b) chain.

    At beta = 0 with normalized populations the scale is
    s_ab = sum_{j != a,b} k_j^2 = ipr^2 - k_a^2 - k_b^2.  Returns
    ``(s_ab, rayleigh_mode)`` where the mode of the Rayleigh density
    (2R/s) exp(-R^2/s) is sqrt(s/2).
    """
    d = len(dist)
    if a == b or not (0 <= a < d) or not (0 <= b < d):
        raise IndexError(f"need distinct level indices in [0, {d}), got ({a}, {b})")
    k = dist.populations
    s_ab = float(np.sum(k**2) - k[a] ** 2 - k[b] ** 2)
    return s_ab, float(np.sqrt(s_ab / 2.0))
