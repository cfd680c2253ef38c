"""Minimal dephasing model: Gaussian populations on a nearly uniform ladder.

Levels E_j = E_GS + j*Delta + j^2*eps/2 carry populations
k_j ~ exp(-(j - mu)^2 / 2 sigma^2) for j in [j_min, j_max].  Extending the
sum over all integers ("unbounded" regime) turns the amplitude into a
Jacobi theta function

    L_U(z) ~ theta3(u(z), tau(z)),
    u(z)   = (i/2) (z Delta - mu/sigma^2),
    tau(z) = (i/pi) (1/(2 sigma^2) + z eps / 2),

whose zeros sit exactly on two-level chains: the Gaussian symmetry makes
all non-dominant terms cancel pairwise at the crossing of each consecutive
pair.  The bounded model differs by a cutoff term C(z) which dominates at
short times; slow dephasing (small eps) then deforms the initial zero
pattern into the asymptotic chain structure along first-order trajectories

    z(eps) = z0 (1 - (eps / 2 Delta) K(z0)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import curve_fit

from .amplitude import AmplitudeValue, EnergyDistribution, _reduce_phase
from .errors import IllConditioned, InvalidSpacing, NonConvergent, OutOfValidity, SingularK
from .zerofinder import SearchWindow, Zero, ZeroSet

#: truncation target for the theta series tail
THETA_TAIL = 1e-15


@dataclass(frozen=True)
class GaussianSpec:
    """Ladder and population parameters of the dephasing model."""

    delta: float
    epsilon: float
    sigma: float
    mu: float = 0.0
    j_min: int = -10
    j_max: int = 10
    e_gs: float = 0.0

    def __post_init__(self):
        if self.delta <= 0 or self.sigma <= 0:
            raise ValueError("delta and sigma must be positive")
        if self.j_min >= self.j_max:
            raise ValueError("need j_min < j_max")

    def spacing(self, j) -> np.ndarray:
        """Level spacing E_{j+1} - E_j = Delta + eps (j + 1/2)."""
        return self.delta + self.epsilon * (np.asarray(j, dtype=float) + 0.5)

    def energies(self, j) -> np.ndarray:
        j = np.asarray(j, dtype=float)
        return self.e_gs + j * self.delta + j**2 * self.epsilon / 2.0

    def log_weights(self, j) -> np.ndarray:
        j = np.asarray(j, dtype=float)
        return -((j - self.mu) ** 2) / (2.0 * self.sigma**2)


class ThetaArgs(NamedTuple):
    """Arguments of theta3; the series converges only for Im tau > 0."""

    u: complex
    tau: complex


def build_distribution(spec: GaussianSpec) -> EnergyDistribution:
    """Finite model distribution; refuses non-positive level spacings."""
    j = np.arange(spec.j_min, spec.j_max + 1)
    if np.any(spec.spacing(j[:-1]) <= 0):
        raise InvalidSpacing("level spacing becomes non-positive inside the index range")
    w = np.exp(spec.log_weights(j))
    return EnergyDistribution(spec.energies(j), w / w.sum(),
                              label=f"gaussian ladder d={spec.delta} e={spec.epsilon}")


def _tail_half_width(a: float) -> int:
    """Symmetric cutoff J with geometric tail bound below THETA_TAIL."""
    if a <= 1e-12:
        raise NonConvergent("theta series needs Im tau > 0")
    J = max(2, math.ceil(math.sqrt(36.0 / a)))
    while 2.0 * math.exp(-a * J * J) / (1.0 - math.exp(-2.0 * a * J)) >= THETA_TAIL:
        J += max(1, J // 8)
        if J > 10**7:
            raise NonConvergent("theta series truncation exploded")
    return J


def log_theta3(u: complex, tau: complex):
    """(log-modulus, phase) of theta3(u, tau) = sum_j e^{2jiu + i pi tau j^2}.

    The sum is centered on the largest term and truncated by the geometric
    tail bound, so the result is truncation-converged and overflow-safe.
    """
    a = math.pi * tau.imag
    J = _tail_half_width(a)
    center = int(round(-np.imag(u) / a))
    j = np.arange(center - J, center + J + 1, dtype=float)
    w = 2 * 1j * j * u + 1j * math.pi * tau * j**2
    m = w.real.max()
    s = np.exp(w - m).sum()
    return float(m + np.log(abs(s))), float(_reduce_phase(np.angle(s)))


def theta3(u: complex, tau: complex) -> complex:
    """theta3 as a plain complex number (moderate arguments)."""
    log_mod, phase = log_theta3(complex(u), complex(tau))
    return math.exp(log_mod) * complex(math.cos(phase), math.sin(phase))


class UnboundedAmplitude:
    """Normalized theta-function amplitude of the unbounded ladder.

    Exposes ``log_amplitude`` for the winding-number finder; values are
    L_U(z)/L_U(beta), so zeros match the unnormalized sum exactly.
    """

    def __init__(self, spec: GaussianSpec, j_halfwidth: int = 40):
        self.spec = spec
        # conservative contour-sampling bound over the ladder indices that
        # can realistically dominate near the search windows
        j = np.arange(round(spec.mu) - j_halfwidth, round(spec.mu) + j_halfwidth + 1)
        e = spec.energies(j)
        self.energy_center = float(0.5 * (e.min() + e.max()))
        self.phase_rate_bound = float(np.max(np.abs(e - self.energy_center)))

    def _theta_args(self, z: np.ndarray):
        s = self.spec
        u = 0.5j * (z * s.delta - s.mu / s.sigma**2)
        tau = (1j / math.pi) * (1.0 / (2 * s.sigma**2) + z * s.epsilon / 2.0)
        return u, tau

    def _log_theta_batch(self, z: np.ndarray):
        u, tau = self._theta_args(z)
        a = math.pi * tau.imag
        if np.any(a <= 1e-12):
            raise OutOfValidity("outside the convergence half-plane of the ladder sum")
        J = _tail_half_width(float(a.min()))
        centers = np.round(-u.imag / a).astype(int)
        lo = int(centers.min()) - J
        hi = int(centers.max()) + J
        j = np.arange(lo, hi + 1, dtype=float)
        w = 2j * np.outer(u, j) + 1j * math.pi * tau[:, None] * j[None, :] ** 2
        m = w.real.max(axis=1)
        s = np.exp(w - m[:, None]).sum(axis=1)
        return m + np.log(np.abs(s)), np.angle(s)

    def log_amplitude(self, z):
        z = np.asarray(z, dtype=complex)
        scalar = z.ndim == 0
        zf = np.atleast_1d(z.ravel())
        num_mod, num_ph = self._log_theta_batch(zf)
        den_mod, _ = self._log_theta_batch(zf.real.astype(complex))
        log_mod = num_mod - den_mod
        phase = _reduce_phase(num_ph - self.spec.e_gs * zf.imag)
        log_mod = log_mod.reshape(z.shape)
        phase = phase.reshape(z.shape)
        if scalar:
            return float(log_mod), float(phase)
        return log_mod, phase

    def noise_mask(self, z):
        """True where the theta series cancels below the precision floor."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        zf = z.ravel()
        u, tau = self._theta_args(zf)
        a = math.pi * tau.imag
        if np.any(a <= 1e-12):
            raise OutOfValidity("outside the convergence half-plane of the ladder sum")
        J = _tail_half_width(float(a.min()))
        centers = np.round(-u.imag / a).astype(int)
        j = np.arange(int(centers.min()) - J, int(centers.max()) + J + 1, dtype=float)
        w = 2j * np.outer(u, j) + 1j * math.pi * tau[:, None] * j[None, :] ** 2
        m = w.real.max(axis=1)
        s = np.exp(w - m[:, None]).sum(axis=1)
        floor = 16.0 * len(j) * np.finfo(float).eps
        return (np.abs(s) <= floor).reshape(z.shape)


def unbounded_amplitude(spec: GaussianSpec, z: complex) -> AmplitudeValue:
    """Normalized unbounded amplitude L_U(z)/L_U(beta) via theta3."""
    log_mod, phase = UnboundedAmplitude(spec).log_amplitude(z)
    return AmplitudeValue(float(log_mod), float(phase))


def chain_position(spec: GaussianSpec, j: int) -> tuple[float, float]:
    """(beta, period) of the chain generated by the level pair (j, j+1).

    beta_j = -(2j + 1 - 2 mu) / (2 sigma^2 Delta_j) and T_j = 2 pi/Delta_j
    with Delta_j the local spacing; the Gaussian pairwise cancellation makes
    every chain member an exact zero of the unbounded amplitude.
    """
    dj = float(spec.spacing(j))
    if dj <= 0:
        raise InvalidSpacing(f"non-positive spacing at j = {j}")
    beta = -(2 * j + 1 - 2 * spec.mu) / (2 * spec.sigma**2 * dj)
    return beta, 2 * math.pi / dj


def unbounded_zeros(spec: GaussianSpec, window: SearchWindow) -> ZeroSet:
    """All unbounded-model zeros inside the window, chain by chain.

    Also attaches, per period index n, the smooth curve traced by the
    chains under the linearly varying spacing (meta key ``curves``).
    """
    zeros: list[Zero] = []

    def emit(j):
        try:
            beta, period = chain_position(spec, j)
        except InvalidSpacing:
            return False
        if not (window.beta_min <= beta <= window.beta_max):
            return False
        n_lo = int(np.ceil(window.t_min / period - 0.5))
        n_hi = int(np.floor(window.t_max / period - 0.5))
        for n in range(n_lo, n_hi + 1):
            zeros.append(Zero(beta=beta, t=period * (n + 0.5), multiplicity=1,
                              provenance="analytic", chain_id=j))
        return True

    j0 = int(round(spec.mu))
    j = j0
    while emit(j):
        j += 1
    j = j0 - 1
    while emit(j):
        j -= 1

    # smooth curves through the chain heads, one per period index
    curves = []
    js = np.linspace(j0 - 80, j0 + 80, 3201)
    dj = spec.spacing(js)
    ok = dj > 1e-12
    js, dj = js[ok], dj[ok]
    betas = -(2 * js + 1 - 2 * spec.mu) / (2 * spec.sigma**2 * dj)
    inside = (betas >= window.beta_min) & (betas <= window.beta_max)
    if inside.any():
        n_max = int(np.floor(window.t_max * dj.max() / (2 * math.pi) - 0.5))
        for n in range(0, n_max + 1):
            ts = 2 * math.pi / dj * (n + 0.5)
            keep = inside & (ts >= window.t_min) & (ts <= window.t_max)
            if keep.any():
                curves.append((n, betas[keep] + 1j * ts[keep]))

    zs = ZeroSet(zeros, meta={"window": window.rect, "provenance": "analytic",
                              "curves": curves})
    return zs.sort()


def delta_center(spec: GaussianSpec, beta: float) -> float:
    """Effective revival spacing Delta + eps * beta Delta sigma^2 / (1 + beta Delta sigma^2)."""
    x = beta * spec.delta * spec.sigma**2
    return spec.delta + spec.epsilon * x / (1.0 + x)


def theta_decay(spec: GaussianSpec, z: complex) -> float:
    """Decay envelope of the amplitude minima under dephasing.

    |theta3((pi/2) Delta/Delta_center, tau(z))| / theta3(0, tau(beta)); the
    effective width sigma(z) shrinks with time, so the peaks of -log|L_U|
    decay toward the participation-ratio plateau along this curve.
    """
    z = complex(z)
    amp = UnboundedAmplitude(spec)
    _, tau_z = amp._theta_args(np.array([z]))
    _, tau_b = amp._theta_args(np.array([complex(z.real)]))
    if tau_z.imag[0] <= 0 or tau_b.imag[0] <= 0:
        raise OutOfValidity("outside the convergence half-plane")
    u = (math.pi / 2.0) * spec.delta / delta_center(spec, z.real)
    num_mod, _ = log_theta3(complex(u), complex(tau_z[0]))
    den_mod, _ = log_theta3(0.0, complex(tau_b[0]))
    return math.exp(num_mod - den_mod)


def bounded_decomposition(spec: GaussianSpec, z: complex):
    """Split L_G = L_U - C into (L_G, L_U, C) log-domain values.

    L_G sums the physical index range, L_U the truncation-converged
    unbounded ladder, C the two cutoff flanks.  The three complex values
    are verified to satisfy the identity to 1e-10 of the largest term.
    """
    z = complex(z)
    s = spec
    # |term_j| ~ exp(-a_eff j^2 + linear); a_eff > 0 is the validity condition
    a_eff = 1.0 / (2 * s.sigma**2) + z.real * s.epsilon / 2.0
    if a_eff <= 1e-12:
        raise OutOfValidity("unbounded reference sum diverges at this beta")
    J = _tail_half_width(a_eff)

    def log_terms(j):
        return s.log_weights(j) - s.energies(j) * z

    jc = (s.mu / s.sigma**2 - z.real * s.delta) / (2 * a_eff)
    lo = min(int(math.floor(jc - J)), s.j_min - 1)
    hi = max(int(math.ceil(jc + J)), s.j_max + 1)
    j_all = np.arange(lo, hi + 1)
    w = log_terms(j_all)
    m = w.real.max()
    terms = np.exp(w - m)
    inner = (j_all >= s.j_min) & (j_all <= s.j_max)
    s_g = terms[inner].sum()
    s_u = terms.sum()
    s_c = terms[~inner].sum()
    scale = max(abs(s_g), abs(s_u), abs(s_c))
    if abs(s_u - s_c - s_g) > 1e-10 * scale:
        raise AssertionError("cutoff decomposition identity violated")

    def to_value(sv):
        with np.errstate(divide="ignore"):
            return AmplitudeValue(float(m + np.log(abs(sv))),
                                  float(_reduce_phase(np.angle(sv))))

    return to_value(s_g), to_value(s_u), to_value(s_c)


def _k_ratio(spec: GaussianSpec, z: complex) -> complex:
    """K(z) = sum k_j j^2 e^{-z j Delta} / sum k_j j e^{-z j Delta}.

    Sums run over the bounded index range with the eps = 0 reference
    weights; the shared exponential scale is factored out for stability.
    """
    j = np.arange(spec.j_min, spec.j_max + 1, dtype=float)
    w = spec.log_weights(j) - z * j * spec.delta
    m = w.real.max()
    e = np.exp(w - m)
    den = np.sum(e * j)
    if abs(den) < 1e-14:
        raise SingularK(f"trajectory denominator vanishes at z = {z}")
    return complex(np.sum(e * j**2) / den)


def zero_trajectories(spec: GaussianSpec, z0_list, n_range):
    """First-order zero trajectories seeded at eps = 0 zeros.

    For each seed z0 and period index n the eps = 0 zero z0 + 2 pi i n/Delta
    is displaced by the factor (1 - (eps/2 Delta) K); the resulting points
    form one polyline per seed.
    """
    period = 2 * math.pi / spec.delta
    out = []
    for z0 in z0_list:
        pts = []
        for n in n_range:
            z0n = complex(z0) + 1j * period * n
            k = _k_ratio(spec, z0n)
            pts.append(z0n * (1.0 - spec.epsilon / (2 * spec.delta) * k))
        out.append(np.array(pts, dtype=complex))
    return out


@dataclass(frozen=True)
class FitResult:
    """Fitted ladder spec plus fit-quality indicators."""

    spec: GaussianSpec
    energy_rms: float
    population_rms: float


def fit_gaussian(dist: EnergyDistribution) -> FitResult:
    """Recover ladder and population parameters from a distribution.

    The energies are fit by linear least squares to E_GS + j Delta +
    j^2 eps/2; the populations by a nonlinear Gaussian fit (initialized
    from their moments), which weights the distribution itself rather than
    its deep exponential tail.
    """
    d = len(dist)
    if d < 4:
        raise IllConditioned("need at least 4 levels to fit the ladder")
    j = np.arange(d, dtype=float)
    A = np.vstack([np.ones_like(j), j, j**2 / 2.0]).T
    coef, *_ = np.linalg.lstsq(A, dist.energies, rcond=None)
    e_gs, delta, eps = (float(c) for c in coef)
    if delta <= 0:
        raise IllConditioned("fitted spacing is non-positive")
    energy_rms = float(np.sqrt(np.mean((A @ coef - dist.energies) ** 2)))

    k = dist.populations
    mu0 = float(np.sum(j * k))
    sig0 = float(max(np.sqrt(np.sum((j - mu0) ** 2 * k)), 1e-3))

    def gauss(jj, amp, mu, sig):
        return amp * np.exp(-((jj - mu) ** 2) / (2 * sig**2))

    p, _ = curve_fit(gauss, j, k, p0=[float(k.max()), mu0, sig0],
                     ftol=1e-15, xtol=1e-15, gtol=1e-15, maxfev=20000)
    amp, mu, sigma = float(p[0]), float(p[1]), float(abs(p[2]))
    population_rms = float(np.sqrt(np.mean((gauss(j, *p) - k) ** 2)))

    spec = GaussianSpec(delta=delta, epsilon=eps, sigma=sigma, mu=mu,
                        j_min=0, j_max=d - 1, e_gs=e_gs)
    return FitResult(spec=spec, energy_rms=energy_rms, population_rms=population_rms)
