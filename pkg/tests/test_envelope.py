import numpy as np
import pytest

from lzeros.amplitude import EnergyDistribution
from lzeros.envelope import (approximate_zeros, compute_envelope, diagnostics,
                             local_period, monotonicity_check)
from lzeros.zerofinder import SearchWindow

from conftest import random_distribution


def grid_scan_members(dist, betas):
    """Levels that dominate the amplitude somewhere on a beta grid."""
    f = dist.log_populations[None, :] - np.outer(betas, dist.energies)
    m = f.max(axis=1)
    members = set()
    for row, mx in zip(f, m):
        members.update(np.nonzero(row >= mx - 1e-9)[0].tolist())
    return members


def crossing_scan_members(dist):
    """Exact dominance scan: argmax is piecewise constant between the
    pairwise crossing betas, so probing midpoints plus the crossings
    themselves recovers the envelope without any hull machinery."""
    e, lnk = dist.energies, dist.log_populations
    n = len(e)
    crossings = sorted((lnk[a] - lnk[b]) / (e[a] - e[b])
                       for a in range(n) for b in range(a + 1, n))
    crossings = np.asarray(crossings)
    probes = np.concatenate([[crossings[0] - 1.0],
                             0.5 * (crossings[:-1] + crossings[1:]),
                             [crossings[-1] + 1.0], crossings])
    return grid_scan_members(dist, probes)


class TestComputeEnvelope:
    def test_middle_level_excluded(self):
        dist = EnergyDistribution([0, 1, 2], [0.5, 0.25, 0.25])
        env = compute_envelope(dist)
        assert env.members == (0, 2)
        # brute-force dominance scan over a dense beta grid agrees
        assert grid_scan_members(dist, np.linspace(-50, 50, 100001)) == {0, 2}

    def test_two_level(self):
        env = compute_envelope(EnergyDistribution([0, 1], [0.7, 0.3]))
        assert env.members == (0, 1)
        assert len(env.segments) == 1
        seg = env.segments[0]
        assert seg.beta == pytest.approx(np.log(0.7 / 0.3) / (0 - 1))
        assert seg.period == pytest.approx(2 * np.pi)

    def test_geometric_family_single_group(self):
        d = 5
        dist = EnergyDistribution(np.arange(d + 1), 2.0 ** -np.arange(d + 1))
        env = compute_envelope(dist)
        assert env.members == tuple(range(d + 1))
        assert len(env.groups) == 1 and len(env.segments) == 0
        grp = env.groups[0]
        assert grp.kappa == pytest.approx(2.0**d, rel=1e-12)
        assert grp.equidistant

    def test_hull_equals_dominance_scan(self, rng):
        for _ in range(120):
            dist = random_distribution(rng, d_max=64, d_min=3)
            env = compute_envelope(dist)
            assert set(env.members) == crossing_scan_members(dist)

    def test_edge_levels_always_members(self, rng):
        for _ in range(40):
            dist = random_distribution(rng, d_max=32, d_min=2)
            env = compute_envelope(dist)
            assert env.members[0] == 0
            assert env.members[-1] == len(dist) - 1

    def test_segment_betas_non_increasing(self, rng):
        # hull chord slopes decrease with energy by concavity
        for _ in range(40):
            dist = random_distribution(rng, d_max=32, d_min=3)
            env = compute_envelope(dist)
            betas = [s.beta for s in env.segments]
            assert all(b1 >= b2 - 1e-12 for b1, b2 in zip(betas, betas[1:]))

    def test_near_collinear_tie_joins_group(self):
        # middle point within the ln-k tolerance of the chord
        lnk = np.array([0.0, -1.0 + 5e-10, -2.0])
        k = np.exp(lnk)
        env = compute_envelope(EnergyDistribution([0, 1, 2], k / k.sum()))
        assert env.members == (0, 1, 2)
        assert len(env.groups) == 1


class TestApproximateZeros:
    def test_equal_pair_chain(self):
        env = compute_envelope(EnergyDistribution([0, 1], [0.5, 0.5]))
        win = SearchWindow(-1, 1, 0, 6 * np.pi, seed=0)
        zs = approximate_zeros(env, win)
        ts = [z.t for z in zs]
        assert np.allclose(ts, [np.pi, 3 * np.pi, 5 * np.pi])
        assert all(z.beta == 0 for z in zs)
        assert all(z.provenance == "approximate" for z in zs)

    def test_geometric_sum_zeros(self):
        dist = EnergyDistribution([0, 1, 2], [1 / 3] * 3)
        env = compute_envelope(dist)
        zs = approximate_zeros(env, SearchWindow(-1, 1, 0, 2 * np.pi, seed=0))
        ts = sorted(z.t for z in zs)
        assert np.allclose(ts, [2 * np.pi / 3, 4 * np.pi / 3])
        assert all(z.beta == pytest.approx(0.0) for z in zs)
        assert not any(z.multilevel for z in zs)

    def test_non_equidistant_group_flagged(self):
        # populations exactly on the chord of a non-uniform energy triple
        e = np.array([0.0, 1.3, 2.0])
        lnk = -0.8 * e
        k = np.exp(lnk)
        env = compute_envelope(EnergyDistribution(e, k / k.sum()))
        assert len(env.groups) == 1 and not env.groups[0].equidistant
        zs = approximate_zeros(env, SearchWindow(-2, 2, 0, 4 * np.pi, seed=0))
        assert len(zs) > 0
        assert all(z.multilevel for z in zs)

    def test_window_filters_chains(self):
        env = compute_envelope(EnergyDistribution([0, 1], [0.9, 0.1]))
        beta = env.segments[0].beta
        win = SearchWindow(beta + 0.1, beta + 1.0, 0, 20, seed=0)
        assert len(approximate_zeros(env, win)) == 0

    def test_density_matches_edge_pair(self, rng):
        for _ in range(20):
            dist = random_distribution(rng, d_max=16, d_min=3)
            env = compute_envelope(dist)
            T = 40 * 2 * np.pi / dist.span
            win = SearchWindow(-1e9, 1e9, 0, T, seed=0)
            count = len(approximate_zeros(env, win))
            expect = T * dist.span / (2 * np.pi)
            chains = len(env.segments) + len(env.groups)
            assert abs(count - expect) <= chains + 1


class TestDiagnostics:
    def test_uniform_ratio_and_axis_group(self):
        dist = EnergyDistribution([0, 1, 2], [1 / 3] * 3)
        d = diagnostics(compute_envelope(dist))
        assert d.ratio_R == pytest.approx(1.0)
        assert d.multilevel_at_axis

    def test_lopsided_two_level(self):
        d = diagnostics(compute_envelope(EnergyDistribution([0, 1], [0.9, 0.1])))
        assert d.ratio_R == pytest.approx(1 / 9, rel=1e-12)
        assert d.max_index == 0
        assert not d.multilevel_at_axis

    def test_local_period_uses_smaller_gap(self):
        dist = EnergyDistribution([0.0, 0.4, 1.4], [0.2, 0.5, 0.3])
        env = compute_envelope(dist)
        assert local_period(env) == pytest.approx(2 * np.pi / 0.4)


class TestMonotonicity:
    def test_decreasing_envelope_negative_beta(self):
        dist = EnergyDistribution([0, 1, 2.2], [0.6, 0.3, 0.1])
        env = compute_envelope(dist)
        assert all(s.beta < 0 for s in env.segments)
        assert monotonicity_check(env)

    def test_increasing_envelope_positive_beta(self):
        dist = EnergyDistribution([0, 1, 2.2], [0.1, 0.3, 0.6])
        env = compute_envelope(dist)
        assert all(s.beta > 0 for s in env.segments)
        assert monotonicity_check(env)

    def test_random_hulls_consistent(self, rng):
        for _ in range(60):
            env = compute_envelope(random_distribution(rng, d_max=24, d_min=3))
            assert monotonicity_check(env)
