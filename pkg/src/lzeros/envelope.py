"""Energy envelope and the approximate zero distribution it generates.

A level j belongs to the envelope when its term k_j exp(-E_j beta) dominates
the amplitude at some beta.  Taking logs turns that dominance condition into
a chord condition on the point set {(E_j, ln k_j)}: the envelope is exactly
the upper convex hull, computed here by a monotone chain.  Each pair of
consecutive envelope levels (a, b) crosses at

    beta_ab = ln(k_a/k_b) / (E_a - E_b),    T_ab = |2 pi / (E_a - E_b)|,

and contributes the periodic chain z_ab(n) = beta_ab + i T_ab (n + 1/2) of
approximate zeros.  Runs of collinear hull points are kept as multilevel
groups: equidistant groups reduce to a geometric sum with m exactly known
zeros per period, non-equidistant ones are represented by their edge-pair
chain and flagged as position-inaccurate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .amplitude import EnergyDistribution
from .zerofinder import SearchWindow, Zero, ZeroSet

#: absolute ln(k) distance from a chord below which a point joins the chord
COLLINEAR_TOL = 1e-9
#: relative spacing deviation below which a group counts as equidistant
EQUIDISTANT_RTOL = 1e-6


@dataclass(frozen=True)
class Segment:
    """Consecutive envelope pair (a, b) with its crossing and period."""

    a: int
    b: int
    beta: float
    period: float


@dataclass(frozen=True)
class MultilevelGroup:
    """Maximal run of collinear envelope members.

    ``kappa`` is the population ratio k_first/k_last; the members' log
    populations fall on one chord, so populations depend exponentially on
    energy with this overall ratio.  ``beta``/``period`` are those of the
    edge pair spanning the run.
    """

    indices: tuple[int, ...]
    kappa: float
    beta: float
    period: float
    equidistant: bool
    spacing: float  # mean energy spacing inside the run


@dataclass(frozen=True)
class Envelope:
    """Dominant subset of an energy distribution.

    ``members`` are indices into ``dist`` sorted by energy; the first and
    last members are always the edge levels.  ``segments`` lists strict
    consecutive pairs, ``groups`` the collinear runs (their interior pairs
    are not segments).
    """

    dist: EnergyDistribution
    members: tuple[int, ...]
    segments: tuple[Segment, ...]
    groups: tuple[MultilevelGroup, ...]


@dataclass(frozen=True)
class EnvelopeDiagnostics:
    """Scalar indicators for zeros near the real-time axis."""

    ratio_R: float
    max_index: int
    multilevel_at_axis: bool


def _pair_beta_period(dist, a, b):
    de = dist.energies[a] - dist.energies[b]
    beta = (dist.log_populations[a] - dist.log_populations[b]) / de
    return float(beta), float(abs(2 * np.pi / de))


def _upper_hull(x, y):
    """Strict upper convex hull indices of points sorted by x."""
    hull: list[int] = []
    for i in range(len(x)):
        while len(hull) >= 2:
            i1, i2 = hull[-2], hull[-1]
            cross = (x[i2] - x[i1]) * (y[i] - y[i1]) - (y[i2] - y[i1]) * (x[i] - x[i1])
            if cross >= 0:  # middle point not strictly above the chord
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def compute_envelope(dist: EnergyDistribution) -> Envelope:
    """Envelope of a distribution as the upper hull of (E_j, ln k_j).

    Points within ``COLLINEAR_TOL`` of a hull chord are re-attached as
    multilevel group members (ties in the dominance inequality are treated
    as multilevel rather than strict).  The literal dominance inequality is
    re-verified for every adjacent member pair on exit.
    """
    if len(dist) < 2:
        raise ValueError("envelope needs at least two levels")
    x = dist.energies
    y = dist.log_populations

    hull = _upper_hull(x, y)

    # re-attach near-chord points dropped by the strict hull
    members: list[int] = []
    for a, b in zip(hull[:-1], hull[1:]):
        members.append(a)
        slope = (y[b] - y[a]) / (x[b] - x[a])
        for j in range(a + 1, b):
            if y[j] >= y[a] + slope * (x[j] - x[a]) - COLLINEAR_TOL:
                members.append(j)
    members.append(hull[-1])

    _verify_dominance(dist, members)

    # maximal collinear runs become groups; everything else strict segments
    def run_is_collinear(p, q):
        a, b = members[p], members[q]
        slope = (y[b] - y[a]) / (x[b] - x[a])
        for m in members[p + 1:q]:
            if abs(y[m] - (y[a] + slope * (x[m] - x[a]))) > COLLINEAR_TOL:
                return False
        return True

    segments: list[Segment] = []
    groups: list[MultilevelGroup] = []
    p = 0
    while p < len(members) - 1:
        q = p + 1
        while q + 1 < len(members) and run_is_collinear(p, q + 1):
            q += 1
        if q - p >= 2:
            idx = tuple(members[p:q + 1])
            spacings = np.diff(x[list(idx)])
            mean_sp = float(spacings.mean())
            equi = bool(np.all(np.abs(spacings - mean_sp) <= EQUIDISTANT_RTOL * mean_sp))
            beta, period = _pair_beta_period(dist, idx[0], idx[-1])
            kappa = float(dist.populations[idx[0]] / dist.populations[idx[-1]])
            groups.append(MultilevelGroup(idx, kappa, beta, period, equi, mean_sp))
        else:
            a, b = members[p], members[q]
            beta, period = _pair_beta_period(dist, a, b)
            segments.append(Segment(a, b, beta, period))
        p = q

    return Envelope(dist, tuple(members), tuple(segments), tuple(groups))


def _verify_dominance(dist, members):
    """Check the pairwise dominance inequality for adjacent members.

    In logs the inequality says every level lies on or below the extended
    chord of the pair; violations mean the hull construction is broken.
    """
    x = dist.energies
    y = dist.log_populations
    for a, b in zip(members[:-1], members[1:]):
        slope = (y[b] - y[a]) / (x[b] - x[a])
        if np.any(y > y[a] + slope * (x - x[a]) + 10 * COLLINEAR_TOL):
            raise AssertionError(
                f"dominance inequality violated for member pair ({a}, {b})")


def approximate_zeros(env: Envelope, window: SearchWindow) -> ZeroSet:
    """Approximate zero distribution generated by the envelope.

    Strict segments emit their two-level chains.  Equidistant multilevel
    groups emit the geometric-sum zeros (m zeros per period 2 pi / spacing);
    non-equidistant groups emit the edge-pair chain flagged ``multilevel``
    (not position-accurate, density only).
    """
    zeros: list[Zero] = []

    def emit_chain(beta, period, chain_id, flagged):
        if not (window.beta_min <= beta <= window.beta_max):
            return
        n_lo = int(np.ceil(window.t_min / period - 0.5))
        n_hi = int(np.floor(window.t_max / period - 0.5))
        for n in range(n_lo, n_hi + 1):
            t = period * (n + 0.5)
            zeros.append(Zero(beta=beta, t=t, multiplicity=1,
                              provenance="approximate", chain_id=chain_id,
                              multilevel=flagged))

    next_id = 0
    for seg in env.segments:
        emit_chain(seg.beta, seg.period, next_id, False)
        next_id += 1

    for grp in env.groups:
        if grp.equidistant:
            if not (window.beta_min <= grp.beta <= window.beta_max):
                next_id += 1
                continue
            m = len(grp.indices) - 1
            period = 2 * np.pi / grp.spacing
            # geometric sum of m+1 terms: m zeros per period at the
            # (m+1)-th roots of unity other than 1
            for n0 in range(1, m + 1):
                frac = n0 / (m + 1)
                n_lo = int(np.ceil(window.t_min / period - frac))
                n_hi = int(np.floor(window.t_max / period - frac))
                for n in range(n_lo, n_hi + 1):
                    t = period * (n + frac)
                    zeros.append(Zero(beta=grp.beta, t=t, multiplicity=1,
                                      provenance="approximate",
                                      chain_id=next_id, multilevel=False))
        else:
            emit_chain(grp.beta, grp.period, next_id, True)
        next_id += 1

    zs = ZeroSet(zeros, meta={"window": window.rect, "provenance": "approximate"})
    return zs.sort()


def diagnostics(env: Envelope) -> EnvelopeDiagnostics:
    """Ratio of the two largest member populations and axis indicators.

    R = 1 signals approximate zeros on the real-time axis; the same holds
    when the envelope maximum sits inside a flat (kappa = 1) group.
    """
    pops = env.dist.populations[list(env.members)]
    imax = int(np.argmax(pops))  # first index wins population ties
    k1 = pops[imax]
    rest = np.delete(pops, imax)
    k2 = rest.max() if rest.size else k1
    max_index = int(env.members[imax])

    multilevel_at_axis = False
    for grp in env.groups:
        if max_index in grp.indices and abs(np.log(grp.kappa)) <= 1e-9:
            multilevel_at_axis = True
    return EnvelopeDiagnostics(ratio_R=float(k2 / k1), max_index=max_index,
                               multilevel_at_axis=multilevel_at_axis)


def local_period(env: Envelope) -> float:
    """Comparison-box height 2 pi / (local spacing at the envelope maximum).

    The spacing is the smaller energy gap between the most populated member
    and its envelope neighbors; it sets the period of the sparse branch
    chains rather than the dense chain generated by a bimodal maximum.
    """
    diag = diagnostics(env)
    members = list(env.members)
    pos = members.index(diag.max_index)
    e = env.dist.energies
    gaps = []
    if pos > 0:
        gaps.append(e[members[pos]] - e[members[pos - 1]])
    if pos < len(members) - 1:
        gaps.append(e[members[pos + 1]] - e[members[pos]])
    return float(2 * np.pi / min(gaps))


def monotonicity_check(env: Envelope) -> bool:
    """Sign consistency between population steps and chain positions.

    Ascending populations along a segment must put its chain at beta > 0,
    descending at beta < 0, ties at beta = 0.  Holds identically for a
    correct envelope; exposed as a permanent self-test.
    """
    k = env.dist.populations

    def ok(a, b, beta):
        step = k[b] - k[a]
        if step > 0:
            return beta > 0
        if step < 0:
            return beta < 0
        return beta == 0

    for seg in env.segments:
        if not ok(seg.a, seg.b, seg.beta):
            return False
    for grp in env.groups:
        if not ok(grp.indices[0], grp.indices[-1], grp.beta):
            return False
    return True
