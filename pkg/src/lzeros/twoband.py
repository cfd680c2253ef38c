"""Exact free-fermion engine for nearest-neighbor Ising and XY quenches.

Both models map to independent momentum modes via Jordan-Wigner plus
Bogoliubov rotations.  For a quench the initial BCS ground state populates
final eigenstates built from quasiparticle pairs (-q, q); each pair carries
an excitation amplitude Z and the survival amplitude factorizes into
two-level momentum subspaces,

    L(z) = prod_q [ (1 + |Z_q|^2 e^{-2 eps_q z}) / (1 + |Z_q|^2) ],

so every mode contributes an exact periodic chain of zeros

    z_n(q) = (1/eps_q(h_f)) [ ln|Z_q| + i pi (n + 1/2) ].

A quasiparticle pair at momentum q costs energy 2 eps_q(h_f) relative to
the final ground state; this convention makes the chain formula, the
factorized amplitude, and the envelope construction mutually exact.
The envelope itself consists of nested pair subsets added in decreasing
order of the overlap-per-energy ratio W(q) = ln|Z_q| / eps_q(h_f).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .amplitude import AmplitudeValue, EnergyDistribution, _reduce_phase
from .envelope import Envelope, compute_envelope
from .errors import GaplessMode, OrthogonalMode, SizeCap
from .zerofinder import Zero, ZeroSet

#: subset-enumeration cap: 2^(N/2) final states
MODE_CAP = 24


@dataclass(frozen=True)
class ModeData:
    """Per-momentum quench data.

    ``W = ln|Z| / eps_f`` ranks the pair's overlap gain per energy cost and
    equals the beta position of the chain it generates.
    """

    q: float
    eps_i: float
    eps_f: float
    u_i: complex
    v_i: complex
    u_f: complex
    v_f: complex
    Z: complex
    W: float


@dataclass(frozen=True)
class TwoBandQuench:
    """Mode table for a quench in a two-band model.

    ``axis_crossings`` lists continuum momenta with |Z| = 1 (chains pinned
    to the real-time axis), detected for the XY model.
    """

    N: int
    model: str  # ising_nn | xy
    params: tuple
    modes: tuple[ModeData, ...]
    axis_crossings: tuple[float, ...] = ()

    @property
    def momenta(self) -> np.ndarray:
        return np.array([m.q for m in self.modes])


def allowed_momenta(N: int) -> np.ndarray:
    """Odd multiples of pi/N: the symmetric ground-state sector."""
    if N < 2 or N % 2:
        raise ValueError("need even N >= 2")
    return (2 * np.arange(1, N // 2 + 1) - 1) * np.pi / N


def ising_dispersion(q, h):
    """Single-particle energy sqrt((4h - cos q)^2 + sin^2 q)."""
    return np.sqrt((4 * h - np.cos(q)) ** 2 + np.sin(q) ** 2)


def _ising_angle(q, h):
    return np.arctan2(np.sin(q), 4 * h - np.cos(q))


def xy_dispersion(q, gamma, h):
    """XY single-particle energy 2 sqrt((h - cos q)^2 + gamma^2 sin^2 q)."""
    return 2.0 * np.sqrt((h - np.cos(q)) ** 2 + gamma**2 * np.sin(q) ** 2)


def _xy_angle(q, gamma, h):
    return np.arctan2(gamma * np.sin(q), h - np.cos(q))


def bogoliubov(q: float, h: float):
    """Ising Bogoliubov coefficients (u_q, v_q) with |u|^2 + |v|^2 = 1.

    u_q = sqrt((eps + s)/(2 eps)) with s = 4h - cos q; the conjugate
    component is v_q = i sin q / sqrt(2 eps (eps + s)), normalized so the
    pair (u, v) is a unit spinor.
    """
    eps = float(ising_dispersion(q, h))
    if eps < 1e-14:
        raise GaplessMode(f"eps_q = 0 at q = {q}, h = {h}")
    s = 4 * h - math.cos(q)
    # eps + s cancels catastrophically for s < 0; use (eps^2 - s^2)/(eps - s)
    eps_plus_s = (eps + s) if s >= 0 else math.sin(q) ** 2 / (eps - s)
    u = math.sqrt(eps_plus_s / (2 * eps))
    v = 1j * math.sin(q) / math.sqrt(2 * eps * eps_plus_s)
    return complex(u), v


def _z_from_angles(theta_i, theta_f):
    """Excitation amplitude i tan((theta_i - theta_f)/2) from mode angles."""
    half = (theta_i - theta_f) / 2.0
    if abs(math.cos(half)) < 1e-14:
        raise OrthogonalMode("initial and final mode states are orthogonal")
    return 1j * math.tan(half)


def excitation_amplitude(q: float, h_i: float, h_f: float) -> complex:
    """Pair-creation amplitude Z_{-q,q} for an Ising field quench.

    Z = (u_{-q}^f v_q^i + u_q^i v_{-q}^f) / (u*_{-q}^i u_{-q}^f +
    v*_{-q}^i v_{-q}^f); with u even and v odd in q this reduces to
    i tan((theta_i - theta_f)/2) in the Bogoliubov angles.
    """
    for h in (h_i, h_f):
        if ising_dispersion(q, h) < 1e-14:
            raise GaplessMode(f"eps_q = 0 at q = {q}, h = {h}")
    return _z_from_angles(_ising_angle(q, h_i), _ising_angle(q, h_f))


def ising_modes(N: int, h_i: float, h_f: float) -> TwoBandQuench:
    """Mode table for a nearest-neighbor Ising quench h_i -> h_f."""
    modes = []
    for q in allowed_momenta(N):
        u_i, v_i = bogoliubov(q, h_i)
        u_f, v_f = bogoliubov(q, h_f)
        Z = excitation_amplitude(q, h_i, h_f)
        eps_f = float(ising_dispersion(q, h_f))
        w = math.log(abs(Z)) / eps_f if Z != 0 else -math.inf
        modes.append(ModeData(q=float(q), eps_i=float(ising_dispersion(q, h_i)),
                              eps_f=eps_f, u_i=u_i, v_i=v_i, u_f=u_f, v_f=v_f,
                              Z=Z, W=w))
    return TwoBandQuench(N=N, model="ising_nn", params=(h_i, h_f), modes=tuple(modes))


def xy_modes(N: int, gamma_i: float, h_i: float, gamma_f: float, h_f: float) -> TwoBandQuench:
    """Mode table for an XY quench (gamma_i, h_i) -> (gamma_f, h_f).

    Also locates the continuum momenta where |Z(q)| = 1; an analytic chain
    of zeros sits on the real-time axis at each crossing.
    """
    modes = []
    for q in allowed_momenta(N):
        th_i = _xy_angle(q, gamma_i, h_i)
        th_f = _xy_angle(q, gamma_f, h_f)
        u_i, v_i = math.cos(th_i / 2), 1j * math.sin(th_i / 2)
        u_f, v_f = math.cos(th_f / 2), 1j * math.sin(th_f / 2)
        Z = _z_from_angles(th_i, th_f)
        eps_f = float(xy_dispersion(q, gamma_f, h_f))
        if eps_f < 1e-14:
            raise GaplessMode(f"eps_q = 0 at q = {q}")
        w = math.log(abs(Z)) / eps_f if Z != 0 else -math.inf
        modes.append(ModeData(q=float(q), eps_i=float(xy_dispersion(q, gamma_i, h_i)),
                              eps_f=eps_f, u_i=complex(u_i), v_i=v_i,
                              u_f=complex(u_f), v_f=v_f, Z=Z, W=w))

    def absz(q):
        return abs(math.tan((_xy_angle(q, gamma_i, h_i) - _xy_angle(q, gamma_f, h_f)) / 2)) - 1.0

    qs = np.linspace(1e-6, np.pi - 1e-6, 2001)
    vals = np.array([absz(q) for q in qs])
    crossings = []
    for a, b in zip(range(len(qs) - 1), range(1, len(qs))):
        if np.isfinite(vals[a]) and np.isfinite(vals[b]) and vals[a] * vals[b] < 0:
            crossings.append(float(brentq(absz, qs[a], qs[b], xtol=1e-12)))
    return TwoBandQuench(N=N, model="xy", params=(gamma_i, h_i, gamma_f, h_f),
                         modes=tuple(modes), axis_crossings=tuple(crossings))


def pair_energies(quench: TwoBandQuench) -> np.ndarray:
    """Energy cost 2 eps_f(q) of each quasiparticle pair."""
    return np.array([2.0 * m.eps_f for m in quench.modes])


def bcs_populations(quench: TwoBandQuench) -> EnergyDistribution:
    """Energy distribution of the quenched BCS ground state.

    Enumerates all subsets of positive-momentum pairs; a state's energy is
    the sum of its pair energies relative to the final ground state and its
    weight the product of |Z|^2 factors (the vacuum-overlap prefactor drops
    out after normalization).
    """
    n = len(quench.modes)
    if n > MODE_CAP:
        raise SizeCap(f"{n} modes exceed the 2^{MODE_CAP} enumeration cap")
    eps = pair_energies(quench)
    with np.errstate(divide="ignore"):  # |Z| = 0 modes carry zero weight
        log_w = 2.0 * np.log(np.abs([m.Z for m in quench.modes]))

    energies = np.zeros(1)
    logpops = np.zeros(1)
    for i in range(n):
        energies = np.concatenate([energies, energies + eps[i]])
        logpops = np.concatenate([logpops, logpops + log_w[i]])
    logpops -= logpops.max()
    pops = np.exp(logpops)
    return EnergyDistribution(energies, pops / pops.sum(),
                              label=f"{quench.model} quench {quench.params}")


def bcs_envelope(quench: TwoBandQuench) -> Envelope:
    """Envelope of the BCS distribution via the W-ordered pair ladder.

    Nested subsets obtained by adding pairs in decreasing W(q) are verified
    to reproduce the generic hull construction exactly; a mismatch would
    falsify the ladder theorem and raises.
    """
    dist = bcs_populations(quench)
    env = compute_envelope(dist)

    order = sorted(range(len(quench.modes)),
                   key=lambda i: (-quench.modes[i].W, quench.modes[i].q))
    eps = pair_energies(quench)
    ladder_e = np.concatenate([[0.0], np.cumsum(eps[order])])
    ladder_members = []
    for e in ladder_e:
        j = int(np.argmin(np.abs(dist.energies - e)))
        ladder_members.append(j)
    if list(env.members) != ladder_members:
        raise AssertionError("W-ordered ladder disagrees with the hull envelope")
    return env


def bcs_zeros(quench: TwoBandQuench, n_range) -> ZeroSet:
    """Analytic zero chains z_n(q) = W(q) + i pi (n + 1/2) / eps_f(q)."""
    zeros = []
    for ci, m in enumerate(sorted(quench.modes, key=lambda m: m.q)):
        for n in n_range:
            zeros.append(Zero(beta=m.W, t=math.pi * (n + 0.5) / m.eps_f,
                              multiplicity=1, provenance="analytic", chain_id=ci))
    return ZeroSet(zeros, meta={"model": quench.model, "params": quench.params,
                                "provenance": "analytic"}).sort()


class FactorizedAmplitude:
    """Log-domain product of per-mode two-level amplitudes.

    Exposes the ``log_amplitude`` protocol, so the winding-number finder
    can search the factorized amplitude directly (cheap even when the full
    state space is astronomically large).
    """

    def __init__(self, quench: TwoBandQuench):
        self.quench = quench
        self._eps = pair_energies(quench)
        with np.errstate(divide="ignore"):  # |Z| = 0 modes contribute -inf
            self._log_w = 2.0 * np.log(np.abs([m.Z for m in quench.modes]))
        self._log_norm = float(np.sum(np.logaddexp(0.0, self._log_w)))
        # populated energies span [0, sum of pair energies]
        self.energy_center = float(self._eps.sum() / 2.0)
        self.phase_rate_bound = self.energy_center

    def log_amplitude(self, z):
        z = np.asarray(z, dtype=complex)
        scalar = z.ndim == 0
        zf = z.ravel()
        # per mode: 1 + |Z|^2 e^{-2 eps z}, accumulated in log form
        expo = self._log_w[None, :] - np.outer(zf, self._eps)
        m = np.maximum(expo.real, 0.0)
        s = np.exp(-m) + np.exp(expo - m)
        log_mod = (m + np.log(np.abs(s))).sum(axis=1) - self._log_norm
        phase = _reduce_phase(np.angle(s).sum(axis=1))
        log_mod = log_mod.reshape(z.shape)
        phase = phase.reshape(z.shape)
        if scalar:
            return float(log_mod), float(phase)
        return log_mod, phase

    def noise_mask(self, z):
        """True where some two-term mode factor cancels to rounding noise."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        expo = self._log_w[None, :] - np.outer(z.ravel(), self._eps)
        m = np.maximum(expo.real, 0.0)
        s = np.exp(-m) + np.exp(expo - m)
        floor = 32.0 * np.finfo(float).eps
        return (np.abs(s) <= floor).any(axis=1).reshape(z.shape)


def factorized_amplitude(quench: TwoBandQuench, z) -> AmplitudeValue:
    """Survival amplitude of the quench as a product over momentum modes."""
    log_mod, phase = FactorizedAmplitude(quench).log_amplitude(z)
    return AmplitudeValue(float(log_mod), float(phase))


def free_fermion_ground_energy(N: int, h: float) -> float:
    """Ground energy -sum_{q>0} eps_q(h) in the engine's pair convention."""
    return float(-np.sum(ising_dispersion(allowed_momenta(N), h)))
