import numpy as np
import pytest

from fermiwalk.disorder import (AveragedDensityResult, DisorderModel,
                                averaged_density, density_of_states,
                                disordered_coin, enlarged_band_intervals,
                                exact_band_intervals, phases_in_bands,
                                sample_disordered_walk)
from fermiwalk.environment import SymbolFunction
from fermiwalk.walk import WalkError, build_cycle_walk


T, R = 0.8, 0.6


def eigenphases(W):
    return np.angle(np.linalg.eigvals(W)) % (2 * np.pi)


class TestModel:
    def test_amplitude_constraint(self):
        with pytest.raises(WalkError, match="t\\^2"):
            DisorderModel(t=0.9, r=0.6, n=8)
        with pytest.raises(WalkError, match="t r"):
            DisorderModel(t=1.0, r=0.0, n=8)

    def test_reproducible_sampling(self):
        m = DisorderModel(t=T, r=R, n=16, distribution="uniform",
                          theta0=0.4, halfwidth=0.2, seed=9)
        a = sample_disordered_walk(m, 3)
        b = sample_disordered_walk(m, 3)
        assert np.array_equal(a, b)
        c = sample_disordered_walk(m, 4)
        assert not np.allclose(a, c)

    def test_coin_unitary(self):
        C = disordered_coin(T, R, 0.3, 1.1)
        assert np.linalg.norm(C.conj().T @ C - np.eye(2)) <= 1e-14

    def test_custom_distribution_hook(self):
        # inverse CDF of the uniform law reproduces the built-in sampler
        uniform = DisorderModel(t=T, r=R, n=16, distribution="uniform",
                                theta0=0.4, halfwidth=0.2, seed=9)
        custom = DisorderModel(t=T, r=R, n=16, distribution="custom",
                               theta0=0.4, halfwidth=0.2, seed=9,
                               inverse_cdf=lambda u: 0.2 + 0.4 * u)
        a = custom.sample_phases(0)
        b = uniform.sample_phases(0)
        assert np.allclose(a[0], b[0]) and np.allclose(a[1], b[1])
        with pytest.raises(WalkError, match="callable"):
            DisorderModel(t=T, r=R, n=8, distribution="custom")


class TestSpectra:
    def test_walks_unitary_over_many_seeds(self):
        m = DisorderModel(t=T, r=R, n=12, distribution="uniform",
                          theta0=0.4, halfwidth=0.2, seed=1)
        for idx in range(100):
            W = sample_disordered_walk(m, idx)
            assert np.linalg.norm(W.conj().T @ W - np.eye(24)) <= 1e-12

    def test_point_mass_spectrum_fills_exact_bands(self):
        m = DisorderModel(t=T, r=R, n=128, distribution="point", theta0=0.9)
        phases = eigenphases(sample_disordered_walk(m, 0))
        bands = exact_band_intervals(m)
        assert phases_in_bands(phases, bands, dilation=1e-10).all()
        # edges of the sampled spectrum reach the band edges
        for lo, hi in bands:
            sel = phases_in_bands(phases, [(lo, hi)], dilation=1e-10)
            sub = np.sort(((phases[sel] - lo) % (2 * np.pi)))
            assert sub[0] <= 0.1 and (hi - lo) - sub[-1] <= 0.1

    def test_shift_relabeling_conjugates_by_the_ring_shift(self):
        n = 8
        m = DisorderModel(t=T, r=R, n=n, distribution="uniform",
                          theta0=0.3, halfwidth=0.5, seed=3)
        for idx in range(10):
            plus, minus = m.sample_phases(idx)
            coins = [disordered_coin(T, R, plus[k], minus[k]) for k in range(n)]
            shifted = [disordered_coin(T, R, plus[(k + 1) % n], minus[(k + 1) % n])
                       for k in range(n)]
            W0 = build_cycle_walk(n, coins)
            W1 = build_cycle_walk(n, shifted)
            ring = np.zeros((n, n))
            for nu in range(n):
                ring[(nu - 1) % n, nu] = 1.0
            Rop = np.kron(ring, np.eye(2))
            assert np.linalg.norm(W1 - Rop @ W0 @ Rop.conj().T) <= 1e-13

    def test_global_phase_covariance(self):
        m = DisorderModel(t=T, r=R, n=16, distribution="uniform",
                          theta0=0.4, halfwidth=0.1, seed=5)
        m_shift = DisorderModel(t=T, r=R, n=16, distribution="uniform",
                                theta0=0.4 + 0.8, halfwidth=0.1, seed=5)
        ph0 = np.sort(eigenphases(sample_disordered_walk(m, 2)))
        ph1 = np.sort((eigenphases(sample_disordered_walk(m_shift, 2)) + 0.8) % (2 * np.pi))
        assert np.abs(ph0 - ph1).max() <= 1e-10

    def test_interval_disorder_stays_in_enlarged_bands(self):
        m = DisorderModel(t=T, r=R, n=64, distribution="uniform",
                          theta0=0.7, halfwidth=0.05, seed=1)
        intervals = enlarged_band_intervals(m)
        for idx in range(20):
            phases = eigenphases(sample_disordered_walk(m, idx))
            assert phases_in_bands(phases, intervals, dilation=1e-8).all()


class TestDensityOfStates:
    def test_normalisation_and_errors(self):
        m = DisorderModel(t=T, r=R, n=32, distribution="uniform",
                          theta0=0.4, halfwidth=0.1, seed=2)
        dos = density_of_states(m, samples=12, bins=64)
        assert dos.mass.sum() == pytest.approx(1.0, abs=1e-12)
        assert (dos.stderr >= 0).all()

    def test_support_matches_bands_within_one_bin(self):
        m = DisorderModel(t=T, r=R, n=64, distribution="point", theta0=1.3)
        dos = density_of_states(m, samples=3, bins=128)
        width = dos.bin_edges[1] - dos.bin_edges[0]
        nz = dos.mass > 0
        assert phases_in_bands(dos.bin_centers[nz], exact_band_intervals(m),
                               dilation=width).all()

    def test_self_averaging_under_doubling(self):
        # same total eigenvalue count: n doubled, samples halved; bins wide
        # enough that finite-size discreteness is washed out
        kwargs = dict(t=T, r=R, distribution="uniform", theta0=0.4, halfwidth=0.3)
        d1 = density_of_states(DisorderModel(n=128, seed=3, **kwargs), samples=40, bins=16)
        d2 = density_of_states(DisorderModel(n=256, seed=4, **kwargs), samples=20, bins=16)
        se = np.hypot(d1.stderr, d2.stderr)
        dev = np.abs(d1.mass - d2.mass)
        assert (dev <= 3 * se + 1e-12).all()

    def test_histogram_integration(self):
        m = DisorderModel(t=T, r=R, n=32, distribution="point", theta0=0.0)
        dos = density_of_states(m, samples=2, bins=256)
        assert dos.integrate(lambda th: np.ones_like(th)) == pytest.approx(1.0)

    def test_threaded_merge_deterministic(self):
        m = DisorderModel(t=T, r=R, n=24, distribution="uniform",
                          theta0=0.2, halfwidth=0.1, seed=8)
        serial = density_of_states(m, samples=8, bins=64)
        threaded = density_of_states(m, samples=8, bins=64, threads=4)
        assert np.array_equal(serial.mass, threaded.mass)


class TestAveragedDensity:
    def test_constant_symbol_fixes_normalisation(self):
        # symbol c0 on every mode: vertex average is exactly 2 c0 = 2 (2 F(0))
        m = DisorderModel(t=T, r=R, n=32, distribution="uniform",
                          theta0=0.4, halfwidth=0.1, seed=6)
        F = SymbolFunction((0.4,))
        res = averaged_density(m, F, alpha=0.5, samples=4)
        assert res.trace_mean == pytest.approx(0.8, abs=1e-12)
        assert res.dos_mean == pytest.approx(0.8, abs=1e-12)

    def test_two_estimators_agree(self):
        m = DisorderModel(t=T, r=R, n=96, distribution="uniform",
                          theta0=0.7, halfwidth=0.05, seed=1)
        F = SymbolFunction((0.5, 0.0, 0.125))
        res = averaged_density(m, F, alpha=0.3, samples=24)
        assert isinstance(res, AveragedDensityResult)
        assert res.discrepancy <= 3 * res.combined_stderr + 5e-4
        assert not res.skipped
