import math

import numpy as np
import pytest

from lzeros.amplitude import EnergyDistribution, ipr
from lzeros.errors import (IllConditioned, InvalidSpacing, NonConvergent,
                           OutOfValidity, SingularK)
from lzeros.gaussian import (GaussianSpec, UnboundedAmplitude, build_distribution,
                             bounded_decomposition, chain_position, delta_center,
                             fit_gaussian, log_theta3, theta3, theta_decay,
                             unbounded_amplitude, unbounded_zeros, zero_trajectories)
from lzeros.zerofinder import SearchWindow, edge_strip, find_zeros

NARROW = GaussianSpec(delta=1.0, epsilon=0.0, sigma=1.5, j_min=-10, j_max=10)
DRIFT = GaussianSpec(delta=1.0, epsilon=5e-3, sigma=1.5, j_min=-10, j_max=10)


def theta_brute(u, tau, J=4000):
    j = np.arange(-J, J + 1)
    return np.sum(np.exp(2j * j * u + 1j * np.pi * tau * j**2))


class TestBuildDistribution:
    def test_symmetric_populations(self):
        dist = build_distribution(NARROW)
        assert np.allclose(dist.populations, dist.populations[::-1], rtol=1e-12)

    def test_equidistant_when_unperturbed(self):
        dist = build_distribution(NARROW)
        assert np.allclose(np.diff(dist.energies), 1.0, atol=1e-12)

    def test_spacing_guard(self):
        with pytest.raises(InvalidSpacing):
            build_distribution(GaussianSpec(delta=1.0, epsilon=-0.2, sigma=3.0,
                                            j_min=-10, j_max=10))


class TestTheta:
    def test_against_brute_series(self, rng):
        for _ in range(25):
            u = complex(rng.uniform(-3, 3), rng.uniform(-1.5, 1.5))
            tau = complex(rng.uniform(-1, 1), rng.uniform(0.03, 2.0))
            got = theta3(u, tau)
            want = theta_brute(u, tau)
            assert got == pytest.approx(want, rel=1e-12, abs=1e-12)

    def test_periodicity(self):
        u, tau = 0.37 + 0.21j, 0.4 + 0.9j
        assert theta3(u + np.pi, tau) == pytest.approx(theta3(u, tau), rel=1e-13)

    def test_tail_dominated_limit(self):
        assert theta3(0.0, 60j) == pytest.approx(1.0, abs=1e-15)

    def test_requires_upper_half_plane(self):
        with pytest.raises(NonConvergent):
            log_theta3(0.3, 0.5 - 0.1j)


class TestUnboundedAmplitude:
    def test_unity_on_real_axis(self):
        val = unbounded_amplitude(NARROW, 0.83 + 0.0j)
        assert val.log_modulus == pytest.approx(0.0, abs=1e-13)

    def test_theta_matches_direct_sum(self):
        amp = UnboundedAmplitude(NARROW)
        z = 1j * np.pi
        lm, ph = amp.log_amplitude(z)
        j = np.arange(-200, 201)

        def ladder(zz):
            return np.sum(np.exp(-j**2 / (2 * 1.5**2) - zz * j))

        want = ladder(z) / ladder(0.0)
        got = math.exp(lm) * np.exp(1j * ph)
        assert got == pytest.approx(want, rel=1e-12)

    def test_out_of_validity(self):
        amp = UnboundedAmplitude(DRIFT)
        with pytest.raises(OutOfValidity):
            amp.log_amplitude(complex(-2.0 / (DRIFT.epsilon * DRIFT.sigma**2), 1.0))


class TestUnboundedZeros:
    def test_printed_plugin_value(self):
        # pair (-1, 0) of the unit ladder: beta = 1/(2 sigma^2), first zero at i pi
        zs = unbounded_zeros(NARROW, SearchWindow(-1, 1, 0.1, 8.0, seed=0))
        target = complex(1 / (2 * 1.5**2), np.pi)
        dev = np.min(np.abs(zs.points - target))
        assert dev < 1e-12

    def test_uniform_ladder_periods(self):
        zs = unbounded_zeros(NARROW, SearchWindow(-2, 2, 0.1, 30.0, seed=0))
        for cid in {z.chain_id for z in zs}:
            ts = sorted(z.t for z in zs if z.chain_id == cid)
            assert np.allclose(np.diff(ts), 2 * np.pi, atol=1e-12)

    def test_beta_linear_in_chain_index(self):
        zs = unbounded_zeros(NARROW, SearchWindow(-2, 2, 0.1, 8.0, seed=0))
        chains = sorted({(z.chain_id, z.beta) for z in zs})
        betas = np.array([b for _c, b in chains])
        assert np.allclose(np.diff(betas, 2), 0.0, atol=1e-12)

    def test_exact_zeros_sit_on_chains(self):
        # truncation-converged amplitude vanishes on the chain points,
        # including with a nonuniform ladder
        for spec in (NARROW, DRIFT):
            amp = UnboundedAmplitude(spec)
            for j in (-2, 0, 1):
                beta, period = chain_position(spec, j)
                t = period * 2.5
                win = SearchWindow(beta - 4e-3, beta + 4e-3, t - 4e-3, t + 4e-3,
                                   target_resolution=1e-8, seed=3)
                zs = find_zeros(amp, win)
                assert len(zs) == 1
                assert abs(zs.zeros[0].z - complex(beta, t)) < 1e-7

    def test_curves_attached(self):
        zs = unbounded_zeros(NARROW, SearchWindow(-2, 2, 0.1, 8.0, seed=0))
        curves = zs.meta["curves"]
        assert len(curves) > 0


class TestPeriodicityAndPlateau:
    def test_bounded_modulus_periodic_for_uniform_ladder(self, rng):
        dist = build_distribution(NARROW)
        period = 2 * np.pi
        for _ in range(20):
            z = complex(rng.uniform(-2, 2), rng.uniform(0, 10))
            a, _ = dist.log_amplitude(z)
            b, _ = dist.log_amplitude(z + 1j * period)
            assert abs(math.exp(a) - math.exp(b)) < 1e-12

    def test_long_time_mean_approaches_ipr(self):
        dist = build_distribution(DRIFT)
        amp = UnboundedAmplitude(DRIFT)
        ts = np.linspace(300, 400, 2001)
        lm, _ = amp.log_amplitude(1j * ts)
        mean_mod = np.exp(lm).mean()
        assert mean_mod == pytest.approx(ipr(dist), rel=0.05)


class TestThetaDecay:
    def test_tracks_minima_within_two_percent(self):
        from scipy.optimize import minimize_scalar

        amp = UnboundedAmplitude(DRIFT)
        dc = delta_center(DRIFT, 0.0)
        for n in (1, 3, 7, 15, 25):
            tn = n * np.pi / dc
            r = minimize_scalar(lambda t: amp.log_amplitude(complex(0, t))[0],
                                bracket=(tn - 0.8, tn, tn + 0.8))
            min_mod = math.exp(r.fun)
            assert theta_decay(DRIFT, complex(0, tn)) == pytest.approx(min_mod, rel=0.02)

    def test_uniform_ladder_has_no_decay(self):
        vals = [theta_decay(NARROW, complex(0, t)) for t in (np.pi, 3 * np.pi, 9 * np.pi)]
        assert np.allclose(vals, vals[0], rtol=1e-12)


class TestBoundedDecomposition:
    def test_identity_at_random_points(self, rng):
        for _ in range(25):
            z = complex(rng.uniform(-1.5, 1.5), rng.uniform(0, 15))
            lg, lu, c = bounded_decomposition(DRIFT, z)  # self-checks to 1e-10
            assert np.isfinite(lg.log_modulus)

    def test_wide_window_makes_cutoff_negligible(self):
        wide = GaussianSpec(delta=1.0, epsilon=0.0, sigma=1.5, j_min=-40, j_max=40)
        z = 0.4 + 2.7j
        lg, lu, c = bounded_decomposition(wide, z)
        assert lg.log_modulus == pytest.approx(lu.log_modulus, abs=1e-10)
        assert c.log_modulus < lg.log_modulus - 30

    def test_edge_term_approximates_cutoff_near_axis(self):
        # the largest flank term carries most of C for moderate beta
        for z in (0.05 + 2.8j, -0.3 + 3.3j, 0.4 + 9.1j):
            _lg, _lu, c = bounded_decomposition(NARROW, z)
            flank = np.logaddexp(
                NARROW.log_weights(NARROW.j_min - 1)
                - (NARROW.energies(NARROW.j_min - 1) * z).real,
                NARROW.log_weights(NARROW.j_max + 1)
                - (NARROW.energies(NARROW.j_max + 1) * z).real)
            ratio = math.exp(float(flank) - c.log_modulus)
            assert 0.5 <= ratio <= 2.0


class TestTrajectories:
    def test_unperturbed_ladder_gives_periodic_columns(self):
        z0 = complex(0.3, 2.0)
        (line,) = zero_trajectories(NARROW, [z0], range(5))
        want = z0 + 1j * 2 * np.pi * np.arange(5)
        assert np.allclose(line, want, atol=1e-14)

    def test_singular_denominator_refused(self):
        with pytest.raises(SingularK):
            zero_trajectories(NARROW, [0.0 + 0.0j], range(1))

    def test_wedge_pair_separates(self):
        # seeds of the unperturbed model sharing one beta drift apart
        dist0 = build_distribution(NARROW)
        lo, hi = edge_strip(dist0)
        seeds = find_zeros(dist0, SearchWindow(lo - 0.5, hi + 0.5, 0.31,
                                               0.31 + 2 * np.pi,
                                               target_resolution=1e-6, seed=7))
        by_beta = {}
        for z in seeds:
            by_beta.setdefault(round(z.beta, 6), []).append(z.z)
        pair = next(v for v in by_beta.values() if len(v) == 2)
        t1, t2 = zero_trajectories(DRIFT, pair, range(8))
        d_beta1 = t1[-1].real - t1[0].real
        d_beta2 = t2[-1].real - t2[0].real
        assert d_beta1 * d_beta2 < 0


class TestFit:
    def test_round_trip_exact(self):
        spec = GaussianSpec(delta=0.9, epsilon=-0.01, sigma=1.8, mu=0.7,
                            j_min=0, j_max=14, e_gs=-3.0)
        fr = fit_gaussian(build_distribution(spec))
        assert fr.spec.delta == pytest.approx(0.9, abs=1e-10)
        assert fr.spec.epsilon == pytest.approx(-0.01, abs=1e-10)
        assert fr.spec.sigma == pytest.approx(1.8, abs=1e-10)
        assert fr.spec.mu == pytest.approx(0.7, abs=1e-10)
        assert fr.spec.e_gs == pytest.approx(-3.0, abs=1e-10)
        assert fr.energy_rms < 1e-12
        assert fr.population_rms < 1e-12

    def test_too_few_levels(self):
        with pytest.raises(IllConditioned):
            fit_gaussian(EnergyDistribution([0, 1, 2], [0.2, 0.5, 0.3]))
