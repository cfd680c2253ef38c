"""Ising-family Hamiltonians with tunable interaction range and their quenches.

The chain of N spin-1/2 sites with periodic boundaries carries the
Kac-normalized power-law coupling

    H(h, alpha) = -(1/NN) sum_{i != j} S^z_i S^z_j / dist(i,j)^alpha
                  + h sum_i S^x_i,
    NN = (2/(N-1)) sum_{n=1}^{N-1} (N-n)/n^alpha.

alpha = 0 is the fully connected (collective) limit, handled in the
(N+1)-dimensional maximal-spin Dicke basis; finite alpha > 0 is diagonalized
densely in the 2^N computational basis, halved by spin-flip parity.  Quenched
ground states produce the energy distributions consumed by the amplitude
and envelope machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .amplitude import EnergyDistribution
from .envelope import compute_envelope, diagnostics
from .errors import DegenerateGroundState, OutOfPhase, SizeCap

#: largest N diagonalized densely at finite alpha (2^(N-1) parity blocks)
LONG_RANGE_SIZE_CAP = 14
#: two lowest eigenvalues closer than this force an explicit sector choice
DEGENERACY_GAP = 1e-10


@dataclass(frozen=True)
class IsingSpec:
    """Model parameters; ``alpha = inf`` means nearest neighbor."""

    N: int
    h: float
    alpha: float = 0.0
    sector: str = "even_parity"  # even_parity | odd_parity | full
    units: str | None = None     # extensive | per_site (default by alpha)

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("need N >= 2")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.sector not in ("even_parity", "odd_parity", "full"):
            raise ValueError(f"unknown sector {self.sector!r}")
        if self.units is None:
            units = "per_site" if self.alpha == 0 else "extensive"
            object.__setattr__(self, "units", units)
        elif self.units not in ("extensive", "per_site"):
            raise ValueError(f"unknown units {self.units!r}")

    @property
    def scale(self) -> float:
        """Overall energy scale u multiplying the Hamiltonian."""
        return 1.0 / self.N if self.units == "per_site" else 1.0


@dataclass(frozen=True)
class QuenchResult:
    """Final-basis spectrum and populations of a quenched ground state."""

    eigenvalues: np.ndarray
    populations: np.ndarray
    spec_initial: IsingSpec
    spec_final: IsingSpec
    mean_energy: float
    esqpt_energy: float | None = None

    def to_distribution(self, label=None) -> EnergyDistribution:
        return EnergyDistribution(self.eigenvalues, self.populations,
                                  label=label or f"quench h {self.spec_initial.h} -> {self.spec_final.h}")


def kac_norm(N: int, alpha: float) -> float:
    """Kac normalization (2/(N-1)) sum_n (N-n)/n^alpha, n = 1..N-1."""
    if N < 2:
        raise ValueError("need N >= 2")
    if math.isinf(alpha):
        return 2.0
    n = np.arange(1, N, dtype=float)
    weights = np.exp(-alpha * np.log(n))  # n^-alpha, underflow-safe for huge alpha
    return float(2.0 / (N - 1) * np.sum((N - n) * weights))


def _dicke_sx_coupling(S: float, m: float) -> float:
    """<m+1|S_x|m> in the maximal-spin basis."""
    return 0.5 * math.sqrt(S * (S + 1) - m * (m + 1))


def build_fully_connected(spec: IsingSpec) -> np.ndarray:
    """Collective-limit Hamiltonian in the Dicke basis |S=N/2, M>.

    Diagonal -(M^2 - N/4)/NN, off-diagonal h * <M'|S_x|M>, everything times
    the unit scale.  ``sector = full`` gives the (N+1)-dimensional matrix
    over M = -S..S; parity sectors fold M <-> -M into symmetric (even) or
    antisymmetric (odd) combinations.
    """
    if spec.alpha != 0:
        raise ValueError("fully connected builder requires alpha = 0")
    N, h, u = spec.N, spec.h, spec.scale
    S = N / 2.0
    nn = kac_norm(N, 0.0)  # = N

    if spec.sector == "full":
        M = np.arange(-S, S + 1)
        dim = N + 1
        H = np.zeros((dim, dim))
        H[np.diag_indices(dim)] = -(M**2 - N / 4.0) / nn * u
        for i in range(dim - 1):
            c = _dicke_sx_coupling(S, M[i])
            H[i + 1, i] = H[i, i + 1] = h * u * c
        return H

    sign = 1.0 if spec.sector == "even_parity" else -1.0
    if N % 2 == 0:
        ms = np.arange(0.0, S + 1)  # includes the self-paired M = 0
        if spec.sector == "odd_parity":
            ms = ms[1:]
    else:
        ms = np.arange(0.5, S + 1)
    dim = len(ms)
    H = np.zeros((dim, dim))
    for i, m in enumerate(ms):
        H[i, i] = -(m**2 - N / 4.0) / nn * u
        if N % 2 == 1 and m == 0.5:
            # S_x couples M = 1/2 <-> -1/2 inside the folded pair
            H[i, i] += sign * h * u * _dicke_sx_coupling(S, -0.5)
    for i in range(dim - 1):
        m = ms[i]
        c = _dicke_sx_coupling(S, m)
        if N % 2 == 0 and m == 0:
            c *= math.sqrt(2.0)  # |0> pairs with itself under M -> -M
        H[i + 1, i] = H[i, i + 1] = h * u * c
    return H


def _chain_distance(i: int, j: int, N: int) -> int:
    """Minimal-image distance on the periodic chain."""
    d = abs(i - j)
    return min(d, N - d)


def build_long_range(spec: IsingSpec) -> np.ndarray:
    """Dense finite-alpha Hamiltonian, one spin-flip parity block.

    Couplings 2/(NN * dist^alpha) over unordered site pairs (the ordered
    double sum folded), transverse field h on every site.  Basis states are
    (|b> +/- |~b>)/sqrt(2) over bit strings b below their complement ~b.
    """
    if not (0 < spec.alpha < math.inf):
        raise ValueError("long-range builder requires 0 < alpha < inf; "
                         "use build_fully_connected or the two-band engine")
    if spec.N > LONG_RANGE_SIZE_CAP:
        raise SizeCap(f"N = {spec.N} exceeds the dense cap {LONG_RANGE_SIZE_CAP}")
    if spec.sector == "full":
        raise ValueError("long-range builder works per parity block")

    N, h, u = spec.N, spec.h, spec.scale
    nn = kac_norm(N, spec.alpha)
    sign = 1.0 if spec.sector == "even_parity" else -1.0
    mask = (1 << N) - 1

    reps = [b for b in range(1 << N) if b < (b ^ mask)]
    index = {b: i for i, b in enumerate(reps)}
    dim = len(reps)

    J = np.zeros((N, N))
    for i in range(N):
        for j in range(i + 1, N):
            d = _chain_distance(i, j, N)
            J[i, j] = 2.0 / nn * math.exp(-spec.alpha * math.log(d))

    H = np.zeros((dim, dim))
    spins = np.array([[(0.5 if (b >> i) & 1 else -0.5) for i in range(N)] for b in reps])
    for r, b in enumerate(reps):
        s = spins[r]
        H[r, r] += -u * float(s @ J @ s)  # complement has the same zz energy
        for i in range(N):
            flipped = b ^ (1 << i)
            comp = flipped ^ mask
            if flipped < comp:
                H[index[flipped], r] += h * u * 0.5
            else:
                H[index[comp], r] += sign * h * u * 0.5
    if not np.allclose(H, H.T):
        raise AssertionError("parity-block Hamiltonian must be symmetric")
    return (H + H.T) / 2  # exact symmetry for the transpose invariant


def build_hamiltonian(spec: IsingSpec) -> np.ndarray:
    if spec.alpha == 0:
        return build_fully_connected(spec)
    if math.isinf(spec.alpha):
        raise ValueError("alpha = inf is served exactly by the two-band engine")
    return build_long_range(spec)


@lru_cache(maxsize=128)
def _diagonalize(spec: IsingSpec):
    H = build_hamiltonian(spec)
    evals, evecs = np.linalg.eigh(H)
    evecs = _order_degenerate(spec, evals, evecs)
    evals.setflags(write=False)
    evecs.setflags(write=False)
    return evals, evecs


def _order_degenerate(spec, evals, evecs):
    """Deterministic column order inside degenerate clusters (by <S_x>)."""
    scale = max(abs(evals[0]), abs(evals[-1]), 1.0)
    splits = np.nonzero(np.diff(evals) > 1e-12 * scale)[0] + 1
    clusters = np.split(np.arange(len(evals)), splits)
    if all(len(c) == 1 for c in clusters):
        return evecs
    V = build_hamiltonian(replace(spec, h=1.0)) - build_hamiltonian(replace(spec, h=0.0))
    out = evecs.copy()
    for c in clusters:
        if len(c) > 1:
            sx = np.einsum("ij,ik,kj->j", out[:, c], V, out[:, c])
            out[:, c] = out[:, c][:, np.argsort(sx, kind="stable")]
    return out


def diagonalize(spec: IsingSpec):
    """Cached (eigenvalues, eigenvectors) of the spec's Hamiltonian."""
    return _diagonalize(spec)


def quench(spec_i: IsingSpec, spec_f: IsingSpec) -> QuenchResult:
    """Populations of the quenched ground state over the final eigenbasis.

    Both specs must differ only in the field h.  The ground state is taken
    in the requested sector; a near-degenerate ground state in the ``full``
    sector is refused so the caller picks the parity explicitly.
    """
    if replace(spec_i, h=spec_f.h) != spec_f:
        raise ValueError("quench specs must differ only in h")
    evals_i, evecs_i = diagonalize(spec_i)
    if len(evals_i) > 1 and evals_i[1] - evals_i[0] < DEGENERACY_GAP * max(1.0, abs(evals_i[0])):
        raise DegenerateGroundState(
            f"ground state of h = {spec_i.h} is degenerate; pick a parity sector")
    psi0 = evecs_i[:, 0]
    evals_f, evecs_f = diagonalize(spec_f)
    amps = evecs_f.T @ psi0
    populations = amps**2
    mean = float(populations @ evals_f)

    esqpt = None
    if spec_f.alpha == 0 and spec_f.units == "per_site" and spec_f.h < 1:
        esqpt = esqpt_energy(spec_f)
    return QuenchResult(eigenvalues=evals_f, populations=populations,
                        spec_initial=spec_i, spec_final=spec_f,
                        mean_energy=mean, esqpt_energy=esqpt)


def mean_energy_shift(result: QuenchResult):
    """Predicted vs measured post-quench mean energy.

    The Hamiltonian is linear in h, so the mean shifts exactly as
    <H(h_f)> = <H(h_i)> + (h_f - h_i) <V> with V = dH/dh evaluated on the
    initial ground state; both numbers agree to numerical precision.
    """
    spec_i = result.spec_initial
    evals_i, evecs_i = diagonalize(spec_i)
    psi0 = evecs_i[:, 0]
    V = build_hamiltonian(replace(spec_i, h=1.0)) - build_hamiltonian(replace(spec_i, h=0.0))
    dh = result.spec_final.h - spec_i.h
    predicted = float(evals_i[0] + dh * (psi0 @ V @ psi0))
    actual = float(result.populations @ result.eigenvalues)
    return predicted, actual


def esqpt_energy(spec: IsingSpec) -> float:
    """Saddle energy -h/2 separating the excited-state phases (alpha = 0).

    Per-site energy at which the classical constant-energy manifolds change
    topology; only defined below the ground-state critical field h = 1.
    """
    if spec.alpha != 0 or spec.units != "per_site":
        raise ValueError("ESQPT energy applies to the collective model in per-site units")
    if spec.h >= 1:
        raise OutOfPhase("no double-well structure for h >= 1")
    return -spec.h / 2.0


def quench_ratio(spec_i: IsingSpec, dh: float):
    """Envelope population ratio R after quenching h -> h + dh."""
    qr = quench(spec_i, replace(spec_i, h=spec_i.h + dh))
    env = compute_envelope(qr.to_distribution())
    return diagnostics(env)


def r_ratio_scan(h_i: float, delta_h_grid, N_grid, sector="even_parity",
                 units="per_site"):
    """Table of R over quench length and system size (fully connected).

    Returns an array of shape (len(N_grid), len(delta_h_grid)); the banded
    R = 1 ridges come from successive envelope level pairs equalizing.
    """
    delta_h_grid = np.asarray(delta_h_grid, dtype=float)
    out = np.empty((len(N_grid), len(delta_h_grid)))
    for a, N in enumerate(N_grid):
        spec = IsingSpec(N=int(N), h=h_i, alpha=0.0, sector=sector, units=units)
        for b, dh in enumerate(delta_h_grid):
            out[a, b] = quench_ratio(spec, float(dh)).ratio_R
    return out


def first_axis_crossing(h_i: float, N: int, dh_lo: float = 0.01, dh_hi: float = 0.6,
                        scan_step: float = 0.005, sector="even_parity",
                        units="per_site") -> float:
    """Smallest quench length at which R reaches 1 (zeros touch the axis).

    Scans for the first change of the envelope's most-populated level and
    refines the population crossing of the two competing levels by brentq.
    """
    spec = IsingSpec(N=N, h=h_i, alpha=0.0, sector=sector, units=units)

    def max_level(dh):
        return quench_ratio(spec, dh).max_index

    def pop(dh, j):
        qr = quench(spec, replace(spec, h=h_i + dh))
        return qr.populations[j]

    grid = np.arange(dh_lo, dh_hi + scan_step, scan_step)
    base = max_level(grid[0])
    for lo, hi in zip(grid[:-1], grid[1:]):
        new = max_level(hi)
        if new != base:
            return float(brentq(lambda dh: pop(dh, base) - pop(dh, new),
                                lo, hi, xtol=1e-10))
    raise ValueError(f"no R = 1 crossing found in dh <= {dh_hi}")
