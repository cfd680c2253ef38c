import numpy as np
import pytest

from lzeros.amplitude import EnergyDistribution
from lzeros.envelope import compute_envelope
from lzeros.errors import NonConvergent
from lzeros.zerofinder import (BoxGrid, SearchWindow, Zero, ZeroSet, delta_eta,
                               edge_strip, find_zeros, winding_number)

from conftest import random_distribution

TWO_LEVEL = EnergyDistribution([0.0, 1.0], [0.5, 0.5])


def dense_winding_oracle(dist, rect, n_per_side=640):
    """Reference winding from uniform dense sampling and numpy unwrapping."""
    b0, b1, t0, t1 = rect
    total = 0.0
    corners = [complex(b0, t0), complex(b1, t0), complex(b1, t1), complex(b0, t1),
               complex(b0, t0)]
    for za, zb in zip(corners[:-1], corners[1:]):
        zs = np.linspace(za, zb, n_per_side)
        _, ph = dist.log_amplitude(zs)
        unw = np.unwrap(ph)
        total += unw[-1] - unw[0]
    return total / (2 * np.pi)


class TestWinding:
    def test_single_known_zero(self):
        w = winding_number(TWO_LEVEL, (-1, 1, np.pi - 1, np.pi + 1))
        assert w == pytest.approx(1.0, abs=1e-9)

    def test_empty_rectangle(self):
        w = winding_number(TWO_LEVEL, (-1, 1, 1, 2))
        assert w == pytest.approx(0.0, abs=1e-9)

    def test_against_dense_oracle(self):
        dist = EnergyDistribution([-1, 0, 1], [0.3, 0.4, 0.3])
        rect = (-3, 3, 0.1, 2 * np.pi + 0.1)
        w = winding_number(dist, rect)
        assert w == pytest.approx(round(w), abs=1e-9)
        assert round(w) == round(dense_winding_oracle(dist, rect))

    def test_zero_on_boundary_raises(self):
        # the chain of TWO_LEVEL sits exactly on beta = 0
        with pytest.raises(NonConvergent):
            winding_number(TWO_LEVEL, (0.0, 1.0, 2.0, 4.0))

    def test_subdivision_conservation(self, rng):
        from lzeros.zerofinder import _subdivide

        hits = 0
        while hits < 40:
            dist = random_distribution(rng, d_max=8)
            lo, hi = edge_strip(dist)
            rect = (lo - rng.uniform(0, 1), hi + rng.uniform(0, 1),
                    rng.uniform(0.05, 1.0), rng.uniform(4.0, 9.0))
            try:
                parent = winding_number(dist, rect)
                children = [winding_number(dist, c) for c in _subdivide(rect, 3)]
            except NonConvergent:
                continue
            hits += 1
            assert sum(children) == pytest.approx(parent, abs=1e-6)


class TestFindZeros:
    def test_two_level_chain(self):
        win = SearchWindow(-1, 1, 0, 4 * np.pi, target_resolution=1e-6, seed=1)
        zs = find_zeros(TWO_LEVEL, win)
        want = [np.pi, 3 * np.pi]
        assert len(zs) == 2
        for z, t in zip(zs, want):
            assert abs(z.beta) < 1e-6
            assert z.t == pytest.approx(t, abs=1e-6)

    def test_offset_chain(self):
        k0 = np.e / (1 + np.e)
        dist = EnergyDistribution([0.0, 1.0], [k0, 1 - k0])
        win = SearchWindow(-2, 0.5, 0, 6 * np.pi, target_resolution=1e-6, seed=2)
        zs = find_zeros(dist, win)
        assert len(zs) == 3
        for n, z in enumerate(zs):
            assert z.beta == pytest.approx(-1.0, abs=1e-6)
            assert z.t == pytest.approx(np.pi * (2 * n + 1), abs=1e-6)

    def test_double_zero_reported_with_multiplicity(self):
        # ((1 + e^{-z})/2)^2 expands to this three-level distribution, so
        # every chain zero is exactly double
        dist = EnergyDistribution([0.0, 1.0, 2.0], [0.25, 0.5, 0.25])
        win = SearchWindow(-1, 1, 2.0, 4.5, target_resolution=1e-6, seed=4)
        zs = find_zeros(dist, win)
        assert len(zs) == 1
        assert zs.zeros[0].multiplicity == 2
        assert zs.zeros[0].t == pytest.approx(np.pi, abs=1e-6)

    def test_multiplicity_stable_under_refinement(self, rng):
        for _ in range(5):
            dist = random_distribution(rng, d_max=6)
            lo, hi = edge_strip(dist)
            period = 2 * np.pi / dist.span
            win1 = SearchWindow(lo - 0.5, hi + 0.5, 0.1, 0.1 + 3 * period,
                                target_resolution=1e-3, seed=5)
            win2 = SearchWindow(lo - 0.5, hi + 0.5, 0.1, 0.1 + 3 * period,
                                target_resolution=5e-4, seed=6)
            assert find_zeros(dist, win1).total_multiplicity == \
                find_zeros(dist, win2).total_multiplicity

    def test_deterministic_given_seed(self, rng):
        dist = random_distribution(rng, d_max=6)
        lo, hi = edge_strip(dist)
        win = SearchWindow(lo - 0.5, hi + 0.5, 0.1, 7.0, target_resolution=1e-4, seed=9)
        a = find_zeros(dist, win)
        b = find_zeros(dist, win)
        assert [(z.beta, z.t, z.multiplicity) for z in a] == \
            [(z.beta, z.t, z.multiplicity) for z in b]

    def test_sorted_by_time_then_beta(self, rng):
        dist = random_distribution(rng, d_max=6)
        lo, hi = edge_strip(dist)
        win = SearchWindow(lo - 0.5, hi + 0.5, 0.1, 9.0, target_resolution=1e-3, seed=3)
        zs = find_zeros(dist, win)
        keys = [(z.t, z.beta) for z in zs]
        assert keys == sorted(keys)

    def test_normalized_amplitude_same_zeros(self):
        class Normalized:
            phase_rate_bound = TWO_LEVEL.phase_rate_bound
            energy_center = TWO_LEVEL.energy_center

            def log_amplitude(self, z):
                z = np.asarray(z, dtype=complex)
                log_mod, phase = TWO_LEVEL.log_amplitude(z)
                ref, _ = TWO_LEVEL.log_amplitude(z.real.astype(complex))
                return log_mod - ref, phase

        win = SearchWindow(-1, 1, 0, 4 * np.pi, target_resolution=1e-6, seed=1)
        a = find_zeros(TWO_LEVEL, win)
        b = find_zeros(Normalized(), win)
        assert np.allclose(a.points, b.points, atol=1e-6)


class TestEdgeStrip:
    def test_equal_populations(self):
        lo, hi = edge_strip(TWO_LEVEL)
        assert lo == pytest.approx(0.0, abs=1e-12)
        assert hi == pytest.approx(0.0, abs=1e-12)

    def test_e_ratio_two_level(self):
        k0 = np.e / (1 + np.e)
        dist = EnergyDistribution([0.0, 1.0], [k0, 1 - k0])
        lo, hi = edge_strip(dist)
        assert lo == pytest.approx(-1.0, abs=1e-10)
        assert hi == pytest.approx(-1.0, abs=1e-10)

    def test_confines_all_zeros(self, rng):
        for _ in range(6):
            dist = random_distribution(rng, d_max=8)
            lo, hi = edge_strip(dist)
            period = 2 * np.pi / dist.span
            win = SearchWindow(lo - 2.0, hi + 2.0, 0.1, 0.1 + 4 * period,
                               target_resolution=1e-3, seed=8)
            zs = find_zeros(dist, win)
            assert len(zs) > 0
            for z in zs:
                assert lo - 1e-3 <= z.beta <= hi + 1e-3

    def test_zero_density_identity(self, rng):
        # strip count over duration T matches T * span / (2 pi) up to the
        # number of envelope chains
        for _ in range(4):
            dist = random_distribution(rng, d_max=6, d_min=3)
            lo, hi = edge_strip(dist)
            env = compute_envelope(dist)
            chains = len(env.segments) + len(env.groups)
            T = 20 * 2 * np.pi / dist.span
            win = SearchWindow(lo - 0.5, hi + 0.5, 0.17, 0.17 + T,
                               target_resolution=2e-3, seed=10)
            count = find_zeros(dist, win).total_multiplicity
            expect = T * dist.span / (2 * np.pi)
            assert abs(count - expect) <= chains + 1


class TestDeltaEta:
    def grid(self):
        return BoxGrid.along_time_axis(0.0, 3, 10.0, 4.0)

    def zs(self, entries, provenance="exact"):
        return ZeroSet([Zero(beta=b, t=t, provenance=provenance) for b, t in entries]).sort()

    def test_identical_sets_give_zero(self):
        pts = [(0.0, 2.0), (1.0, 12.0), (-1.0, 22.0)]
        rows = delta_eta(self.zs(pts), self.zs(pts, "approximate"), self.grid())
        assert all(r[1] == 0.0 for r in rows)

    def test_ratio_arithmetic(self):
        exact = self.zs([(0, 1), (0, 2), (0, 3), (0, 4)])
        approx = self.zs([(0, 1), (0, 2), (0, 3)], "approximate")
        rows = delta_eta(exact, approx, BoxGrid.along_time_axis(0.0, 1, 10.0, 4.0))
        assert rows[0][1] == pytest.approx(0.25)

    def test_empty_box_sentinel(self):
        exact = self.zs([(0.0, 2.0)])
        approx = self.zs([(0.0, 2.0), (0.0, 15.0)], "approximate")
        rows = delta_eta(exact, approx, self.grid())
        assert rows[1][1] is None

    def test_boxes_validated(self):
        with pytest.raises(ValueError):
            BoxGrid(((0.0, 0.0, 0.0, 1.0),), 1.0)


class TestSearchWindowValidation:
    def test_bad_bounds(self):
        with pytest.raises(ValueError):
            SearchWindow(1, -1, 0, 1)

    def test_bad_threshold(self):
        with pytest.raises(ValueError):
            SearchWindow(-1, 1, 0, 1, winding_threshold=0.7)

    def test_default_resolution_scales_with_diagonal(self):
        win = SearchWindow(-1, 1, 0, 1)
        assert win.resolution == pytest.approx(1e-4 * win.diagonal)
