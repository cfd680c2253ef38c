"""Winding-number localization of survival-amplitude zeros.

The amplitude is an entire function (finite exponential sum), so the number
of zeros inside a rectangle R equals the boundary winding number

    W_R = (1/2 pi) * total phase change of L along dR (counterclockwise),

counted with multiplicity.  Zeros are located by recursive k x k subdivision:
cells with |W| below a numerical threshold are discarded, the rest are split
until the cell diagonal reaches the target resolution and cell centers are
returned.  Boundary phases are tracked by adaptive bisection of the sampled
contour, so no phase wrap is ever missed silently.

Any object exposing ``log_amplitude(z) -> (log_modulus, phase)`` for complex
arrays can be searched; ``EnergyDistribution`` is the canonical one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np
from scipy.optimize import brentq

from .errors import NonConvergent

#: boundary samples per rectangle side before adaptive bisection
BOUNDARY_SAMPLES = 64
#: adaptive bisection rounds before declaring non-convergence
BISECTION_DEPTH = 20
#: phase step (radians) above which a boundary segment is bisected
MAX_PHASE_STEP = np.pi / 2
#: log-modulus step above which a segment is bisected; catches dominance
#: crossovers whose fast phase slip would otherwise alias to a small step
MAX_LOGMOD_STEP = 0.8

Rect = tuple[float, float, float, float]  # (beta_min, beta_max, t_min, t_max)


def _diag(rect: Rect) -> float:
    return float(np.hypot(rect[1] - rect[0], rect[3] - rect[2]))


def _center(rect: Rect) -> complex:
    return complex(0.5 * (rect[0] + rect[1]), 0.5 * (rect[2] + rect[3]))


@dataclass(frozen=True)
class SearchWindow:
    """Rectangular search region plus subdivision policy.

    ``target_resolution`` defaults to 1e-4 of the window diagonal.  The seed
    drives the split-jitter generator, making searches reproducible.
    """

    beta_min: float
    beta_max: float
    t_min: float
    t_max: float
    grid_k: int = 4
    winding_threshold: float = 0.2
    target_resolution: float | None = None
    seed: int = 0

    def __post_init__(self):
        if not self.beta_min < self.beta_max:
            raise ValueError("beta_min must be < beta_max")
        if not self.t_min < self.t_max:
            raise ValueError("t_min must be < t_max")
        if self.grid_k < 2:
            raise ValueError("grid_k must be >= 2")
        if not 0 < self.winding_threshold < 0.5:
            raise ValueError("winding_threshold must lie in (0, 0.5)")
        if self.target_resolution is not None and self.target_resolution <= 0:
            raise ValueError("target_resolution must be positive")

    @property
    def rect(self) -> Rect:
        return (self.beta_min, self.beta_max, self.t_min, self.t_max)

    @property
    def diagonal(self) -> float:
        return _diag(self.rect)

    @property
    def resolution(self) -> float:
        return self.target_resolution if self.target_resolution else 1e-4 * self.diagonal

    def contains(self, beta: float, t: float) -> bool:
        return self.beta_min <= beta <= self.beta_max and self.t_min <= t <= self.t_max


@dataclass(frozen=True)
class Zero:
    """A located zero of the amplitude in the (beta, t) plane."""

    beta: float
    t: float
    multiplicity: int = 1
    provenance: str = "exact"  # exact | approximate | analytic
    chain_id: int | None = None
    multilevel: bool = False   # placement from a multilevel group, not position-accurate

    @property
    def z(self) -> complex:
        return complex(self.beta, self.t)


@dataclass
class ZeroSet:
    """Ordered collection of zeros with shared provenance metadata."""

    zeros: list[Zero] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.zeros)

    def __iter__(self):
        return iter(self.zeros)

    def sort(self):
        self.zeros.sort(key=lambda z: (z.t, z.beta))
        return self

    @property
    def points(self) -> np.ndarray:
        return np.array([z.z for z in self.zeros], dtype=complex)

    @property
    def total_multiplicity(self) -> int:
        return sum(z.multiplicity for z in self.zeros)

    def count_in(self, rect: Rect, half_open: bool = True) -> int:
        """Total multiplicity inside a rectangle.

        Half-open boxes [b0, b1) x [t0, t1) tile without double counting.
        """
        b0, b1, t0, t1 = rect
        n = 0
        for z in self.zeros:
            if half_open:
                inside = b0 <= z.beta < b1 and t0 <= z.t < t1
            else:
                inside = b0 <= z.beta <= b1 and t0 <= z.t <= t1
            if inside:
                n += z.multiplicity
        return n


@dataclass(frozen=True)
class BoxGrid:
    """Interior-disjoint comparison boxes sharing one height convention."""

    boxes: tuple[Rect, ...]
    height: float

    def __post_init__(self):
        for b0, b1, t0, t1 in self.boxes:
            if not (b0 < b1 and t0 < t1):
                raise ValueError("boxes must be non-degenerate")

    @staticmethod
    def along_time_axis(t_start: float, n_boxes: int, height: float, width: float,
                        beta_center: float = 0.0) -> "BoxGrid":
        """Stack of boxes of the given height marching along the time axis."""
        boxes = tuple(
            (beta_center - width / 2, beta_center + width / 2,
             t_start + i * height, t_start + (i + 1) * height)
            for i in range(n_boxes)
        )
        return BoxGrid(boxes, height)


def _boundary_points(rect: Rect, per_side: int) -> np.ndarray:
    """Counterclockwise boundary samples, start point not repeated."""
    b0, b1, t0, t1 = rect
    s = np.linspace(0.0, 1.0, per_side, endpoint=False)
    bottom = b0 + (b1 - b0) * s + 1j * t0
    right = b1 + 1j * (t0 + (t1 - t0) * s)
    top = b1 - (b1 - b0) * s + 1j * t1
    left = b0 + 1j * (t1 - (t1 - t0) * s)
    return np.concatenate([bottom, right, top, left])


def _wrap(dphi):
    return (dphi + np.pi) % (2 * np.pi) - np.pi


def _sampling_plan(dist, rect: Rect, per_side: int):
    """Per-side sample counts honoring the evaluator's phase-rate bound.

    On a side of length L the smooth phase rate is bounded by the spectral
    half-spread ``phase_rate_bound`` (after recentering energies on
    ``energy_center``), so steps stay below pi/2 only if the spacing is at
    most ~1.2/bound.  Without the bound, a boundary segment whose true
    phase step is 2 pi m + w (|w| small) would wrap to w and alias an
    entire winding away.
    """
    bound = getattr(dist, "phase_rate_bound", 0.0) or 0.0
    b0, b1, t0, t1 = rect
    sides = (b1 - b0, t1 - t0, b1 - b0, t1 - t0)
    if bound <= 0:
        return [per_side] * 4
    return [max(per_side, int(np.ceil(length * bound / 1.2))) for length in sides]


def winding_number(dist, rect: Rect, per_side: int = BOUNDARY_SAMPLES,
                   depth_cap: int = BISECTION_DEPTH) -> float:
    """Boundary winding number of the amplitude around a rectangle.

    The boundary is sampled densely enough to resolve the smooth phase
    rotation (see ``_sampling_plan``), then every consecutive phase step
    above ``MAX_PHASE_STEP`` or log-modulus step above ``MAX_LOGMOD_STEP``
    is bisected; the modulus criterion chases the narrow dips where term
    dominance changes hands and the phase slips rapidly.  Raises
    :class:`NonConvergent` when bisection stalls, which happens exactly
    when a zero lies on (or numerically indistinguishable from) the
    boundary; the caller must jitter the rectangle.
    """
    b0, b1, t0, t1 = rect
    ns = _sampling_plan(dist, rect, per_side)
    segs = [np.linspace(0.0, 1.0, n, endpoint=False) for n in ns]
    pts = np.concatenate([
        b0 + (b1 - b0) * segs[0] + 1j * t0,
        b1 + 1j * (t0 + (t1 - t0) * segs[1]),
        b1 - (b1 - b0) * segs[2] + 1j * t1,
        b0 + 1j * (t1 - (t1 - t0) * segs[3]),
    ])
    center = getattr(dist, "energy_center", 0.0) or 0.0
    noise_mask = getattr(dist, "noise_mask", None)

    def probe(z):
        # winding of e^{cz} L(z) equals that of L; the recentering keeps the
        # vertical phase rate within the advertised bound
        log_mod, phase = dist.log_amplitude(z)
        if not np.all(np.isfinite(log_mod)):
            raise NonConvergent("amplitude vanishes on the contour", rect=rect)
        if noise_mask is not None and np.any(noise_mask(z)):
            # cancellation below the precision floor: the phase there is
            # rounding noise, indistinguishable from a zero on the contour
            raise NonConvergent("amplitude below the precision floor on the contour",
                                rect=rect)
        if center:
            log_mod = log_mod + center * z.real
            phase = _wrap(phase + center * z.imag)
        return log_mod, phase

    log_mod, phase = probe(pts)

    pts = list(pts)
    phase = list(phase)
    lmod = list(log_mod)
    for _ in range(depth_cap):
        closed_pts = pts + [pts[0]]
        closed_ph = phase + [phase[0]]
        closed_lm = lmod + [lmod[0]]
        steps = _wrap(np.diff(closed_ph))
        dmod = np.abs(np.diff(closed_lm))
        bad = np.nonzero((np.abs(steps) > MAX_PHASE_STEP) | (dmod > MAX_LOGMOD_STEP))[0]
        if bad.size == 0:
            return float(np.sum(steps) / (2 * np.pi))
        mids = np.array([(closed_pts[i] + closed_pts[i + 1]) / 2 for i in bad])
        mlog, mph = probe(mids)
        # splice midpoints back in reverse so earlier indices stay valid
        for i, z, p, lm in zip(bad[::-1], mids[::-1], mph[::-1], mlog[::-1]):
            pts.insert(i + 1, z)
            phase.insert(i + 1, p)
            lmod.insert(i + 1, lm)
    raise NonConvergent("phase bisection exceeded depth cap (zero on or near boundary)",
                        rect=rect)


def _subdivide(rect: Rect, k: int, rng=None, jitter: float = 0.0) -> list[Rect]:
    """Split into a k x k grid; optional jitter shifts the interior cuts.

    The outer boundary never moves, so the children always partition the
    parent exactly (no overlap, no gap).
    """
    b0, b1, t0, t1 = rect
    def cuts(lo, hi):
        c = np.linspace(lo, hi, k + 1)
        if jitter and rng is not None and k > 1:
            span = (hi - lo) / k
            c[1:-1] += rng.uniform(-jitter, jitter, size=k - 1) * span
        return c
    cb = cuts(b0, b1)
    ct = cuts(t0, t1)
    return [(cb[i], cb[i + 1], ct[j], ct[j + 1]) for j in range(k) for i in range(k)]


def _winding_with_root_expansion(dist, rect: Rect, rng, max_retries: int = 5):
    """Winding of a standalone rectangle, expanding outward on failure.

    Used only for the search-window root, where a zero sitting exactly on
    the user-given boundary must be absorbed rather than split.
    """
    cur = rect
    for attempt in range(max_retries + 1):
        try:
            return winding_number(dist, cur), cur
        except NonConvergent:
            if attempt == max_retries:
                raise
            pad = rng.uniform(1e-3, 3e-3) * _diag(cur)
            cur = (cur[0] - pad, cur[1] + pad, cur[2] - pad, cur[3] + pad)
    raise AssertionError("unreachable")


def find_zeros(dist, window: SearchWindow) -> ZeroSet:
    """Locate all amplitude zeros inside the window by recursive subdivision.

    Children always tile their parent exactly; when a zero falls on an
    interior gridline (the winding of some child fails to converge, or the
    children's windings fail to add up to the parent's), the split is redone
    with jittered interior cuts.  Output is sorted by (t, beta).
    """
    rng = np.random.default_rng(window.seed)
    res = window.resolution
    k = window.grid_k
    thr = window.winding_threshold

    w_root, root = _winding_with_root_expansion(dist, window.rect, rng)
    zeros: list[Zero] = []
    stack: list[tuple[Rect, float]] = [(root, w_root)]
    while stack:
        rect, w = stack.pop()
        mult = int(round(w))
        if mult == 0:
            continue
        if _diag(rect) <= res:
            c = _center(rect)
            zeros.append(Zero(beta=c.real, t=c.imag, multiplicity=mult))
            continue

        children = None
        for attempt in range(6):
            # always jitter: zeros of symmetric inputs sit at nice
            # coordinates (e.g. beta = 0) that uniform cuts would hit, and
            # an even-multiplicity zero on a cut splits silently
            jitter = rng.uniform(0.02, 0.08) if attempt == 0 else rng.uniform(0.05, 0.25)
            cand = _subdivide(rect, k, rng, jitter)
            try:
                winds = [winding_number(dist, c) for c in cand]
            except NonConvergent:
                continue
            if sum(int(round(cw)) for cw in winds) != mult:
                continue  # silent phase miss; re-cut and retry
            children = [(c, cw) for c, cw in zip(cand, winds) if abs(cw) > thr]
            break
        if children is None:
            raise NonConvergent("subdivision failed to converge", rect=rect)
        stack.extend(children)

    zs = ZeroSet(zeros, meta={
        "window": window.rect,
        "seed": window.seed,
        "target_resolution": res,
        "provenance": "exact",
    })
    return zs.sort()


def edge_strip(dist) -> tuple[float, float]:
    """Beta interval confining every zero of the amplitude.

    Outside the strip one edge term exceeds the sum of all the others, so
    the amplitude cannot vanish there.  The bounds solve

        r_0(beta_high) = sum_{j>0} r_j(beta_high)
        r_d(beta_low)  = sum_{j<d} r_j(beta_low)

    each side being strictly monotone in beta.
    """
    e = dist.energies
    lnk = dist.log_populations
    if len(dist) < 2:
        raise ValueError("edge strip needs at least two populated levels")

    def balance(j_ref, others):
        de = e[others] - e[j_ref]
        dlnk = lnk[others] - lnk[j_ref]

        def g(beta):
            x = dlnk - de * beta
            m = x.max()
            return m + np.log(np.sum(np.exp(x - m)))

        lo, hi = -1.0, 1.0
        for _ in range(200):
            if g(lo) * g(hi) < 0:
                break
            lo *= 2
            hi *= 2
        else:
            raise NonConvergent("edge-strip bracketing failed")
        if g(lo) == 0:
            return lo
        if g(hi) == 0:
            return hi
        return brentq(g, lo, hi, xtol=1e-13, rtol=1e-14)

    d = len(dist) - 1
    beta_high = balance(0, np.arange(1, d + 1))   # ground term dominates beyond
    beta_low = balance(d, np.arange(0, d))        # top term dominates below
    return float(beta_low), float(beta_high)


def delta_eta(exact: ZeroSet, approx: ZeroSet, grid: BoxGrid):
    """Per-box relative difference between exact and approximate zero counts.

    Returns rows ``(box_center_t, value, eta_exact, eta_approx, box)``;
    ``value`` is None for boxes with no exact zeros (the ratio is undefined
    there and may diverge as the box shrinks).
    """
    rows = []
    for box in grid.boxes:
        eta_e = exact.count_in(box)
        eta_a = approx.count_in(box)
        value = abs(eta_e - eta_a) / eta_e if eta_e > 0 else None
        center_t = 0.5 * (box[2] + box[3])
        rows.append((center_t, value, eta_e, eta_a, box))
    return rows
