import math

import numpy as np
import pytest

from src.algebra.pauli import PauliSum
from src.algebra.sparse import to_sparse
from src.core.errors import NumericalError
from src.dynamics.correlations import (
    CorrelationResult,
    autocorrelation,
    check_uniform_grid,
    diagonal_ensemble,
    eigenvalue_sign,
    ensemble_convergence,
    mean_and_variance,
    rk4_step,
    run_ensemble,
    step_halving_deviation,
)
from src.dynamics.propagation import ExactPropagator, default_dt, evolve_exact, evolve_rk4
from src.dynamics.spectra import beat_analysis, dominant_peaks, frequency_spectrum
from src.dynamics.states import StateVector, product_state, sample_product_states, state_rng
from src.spectral.analysis import full_spectrum, gaps


class TestStates:

    def test_product_state_signs(self):
        psi = product_state("y", [1, -1, 1])
        assert eigenvalue_sign(psi.amplitudes, 1, "y") == 1
        assert eigenvalue_sign(psi.amplitudes, 2, "y") == -1
        assert psi.norm() == pytest.approx(1.0)

    def test_not_an_eigenstate(self):
        psi = product_state("x", [1, 1])
        with pytest.raises(ValueError):
            eigenvalue_sign(psi.amplitudes, 1, "z")

    def test_unnormalized_rejected(self):
        with pytest.raises(ValueError):
            StateVector(L=1, amplitudes=np.array([1.0, 1.0]))

    def test_sampling_is_reproducible(self):
        first = sample_product_states("z", 6, 5, seed=7)
        second = sample_product_states("z", 6, 5, seed=7)
        assert [s.signs for s in first] == [s.signs for s in second]

    def test_prefix_does_not_depend_on_sample_size(self):
        short = sample_product_states("x", 6, 3, seed=11)
        long = sample_product_states("x", 6, 8, seed=11)
        assert [s.signs for s in short] == [s.signs for s in long[:3]]

    def test_fixed_edge(self):
        states = sample_product_states("z", 4, 10, seed=2, fixed_edge=-1)
        assert all(s.signs[0] == -1 for s in states)

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            state_rng(-1, 0)
        with pytest.raises(ValueError):
            sample_product_states("z", 4, 0, seed=1)
        with pytest.raises(ValueError):
            sample_product_states("z", 4, 3, seed=1, fixed_edge=0)


class TestPropagation:

    def test_rk4_matches_exact(self, kitaev_point):
        H = kitaev_point(4, delta=0.3, perturbation="inter")
        psi0 = product_state("z", [1, -1, -1, 1])
        rk4 = evolve_rk4(H, psi0, dt=0.01, T=2.0, sample_every=10)
        exact = evolve_exact(H, psi0, rk4.times)
        assert np.max(np.abs(rk4.states - exact.states)) < 1e-6
        assert rk4.steps == 200

    def test_fourth_order_convergence(self, kitaev_point):
        H = kitaev_point(4, delta=0.3, perturbation="inter")
        psi0 = product_state("x", [1, 1, -1, 1])
        reference = ExactPropagator(H).evolve(psi0, [2.0])[0]
        steps = [0.2, 0.1, 0.05]
        errors = [np.linalg.norm(evolve_rk4(H, psi0, dt, 2.0).states[-1] - reference) for dt in steps]
        slope = np.polyfit(np.log(steps), np.log(errors), 1)[0]
        assert slope == pytest.approx(4.0, abs=0.3)

    def test_norm_drift_aborts(self):
        H = to_sparse(PauliSum.from_terms(1, [(2.0, "Z")]))
        with pytest.raises(NumericalError):
            evolve_rk4(H, product_state("z", [1]), dt=1.0, T=3.0)

    def test_non_integral_horizon(self, kitaev_point):
        H = kitaev_point(4)
        with pytest.raises(ValueError):
            evolve_rk4(H, product_state("z", [1] * 4), dt=0.3, T=1.0)

    def test_default_dt(self, kitaev_point):
        H = kitaev_point(6, delta=0.4, perturbation="inter")
        dt = default_dt(H, 50.0)
        assert dt <= 0.1 / H.norm_bound() + 1e-15
        assert 50.0 / dt == pytest.approx(round(50.0 / dt))

    def test_rk4_step_divides_sample_interval(self, kitaev_point):
        H = kitaev_point(6, delta=0.3, perturbation="inter")
        dt, substeps = rk4_step(H, 0.1)
        assert dt <= 0.1 / H.norm_bound() + 1e-15
        assert substeps * dt == pytest.approx(0.1)
        assert rk4_step(H, 0.1, dt=0.025) == (0.025, 4)
        with pytest.raises(ValueError):
            rk4_step(H, 0.1, dt=0.03)

    def test_norm_drift_over_long_run(self, kitaev_point):
        H = kitaev_point(6, delta=0.3, perturbation="inter")
        psi0 = product_state("z", [1, -1, 1, 1, -1, 1])
        result = autocorrelation(H, psi0, 1, "z", 0.1 * np.arange(2001))
        assert result.max_drift <= 1e-6

    def test_step_halving_deviation_is_fourth_order(self, kitaev_point):
        H = kitaev_point(4, delta=0.3, perturbation="inter")
        psi0 = product_state("z", [1, -1, 1, 1])
        times = 0.2 * np.arange(11)
        deviations = []
        for dt in (0.1, 0.05):
            reference = autocorrelation(H, psi0, 1, "z", times, dt=dt).gamma
            deviations.append(step_halving_deviation(H, psi0, 1, "z", times, reference, dt=dt))
        assert 8.0 <= deviations[0] / deviations[1] <= 32.0


class TestCorrelations:

    def test_initial_value(self, kitaev_point):
        H = kitaev_point(4, delta=0.2, perturbation="intra")
        psi0 = product_state("z", [-1, 1, 1, -1])
        result = autocorrelation(H, psi0, 1, "z", 0.1 * np.arange(11), method="exact")
        assert result.sign == -1
        assert result.gamma[0].real == pytest.approx(0.25)

    @pytest.mark.parametrize("method", ["rk4", "exact"])
    def test_edge_sigma_x_is_conserved(self, kitaev_point, method):
        H = kitaev_point(4, delta=0.3, perturbation="inter")
        psi0 = product_state("x", [1, -1, 1, 1])
        result = autocorrelation(H, psi0, 1, "x", 0.5 * np.arange(21), method=method)
        np.testing.assert_allclose(result.gamma, 0.25, atol=1e-6)

    def test_uniform_grid(self):
        assert check_uniform_grid([0.0, 0.5, 1.0]) == pytest.approx(0.5)
        with pytest.raises(ValueError):
            check_uniform_grid([0.1, 0.2])
        with pytest.raises(ValueError):
            check_uniform_grid([0.0, 0.1, 0.3])

    def test_single_sample_has_zero_variance(self):
        times = np.arange(3.0)
        ttc = mean_and_variance([CorrelationResult(times=times, gamma=np.array([0.5, 0.2, 0.1]), sign=1)])
        np.testing.assert_allclose(ttc.variance, 0.0)
        assert ttc.count == 1

    def test_grid_mismatch(self):
        a = CorrelationResult(times=np.arange(3.0), gamma=np.zeros(3), sign=1)
        b = CorrelationResult(times=0.5 * np.arange(3.0), gamma=np.zeros(3), sign=1)
        with pytest.raises(ValueError):
            mean_and_variance([a, b])

    def test_ensemble_independent_of_workers(self, kitaev_point):
        H = kitaev_point(4, delta=0.4, perturbation="inter")
        states = sample_product_states("z", 4, 6, seed=3)
        times = 0.2 * np.arange(11)
        serial = run_ensemble(H, states, 1, "z", times, workers=1)
        threaded = run_ensemble(H, states, 1, "z", times, workers=3)
        assert np.array_equal(serial.mean, threaded.mean)
        assert np.array_equal(serial.variance, threaded.variance)

    def test_diagonal_ensemble_of_conserved_spin(self, kitaev_point):
        H = kitaev_point(4, delta=0.3, perturbation="inter")
        psi0 = product_state("x", [-1, 1, 1, -1])
        assert diagonal_ensemble(ExactPropagator(H), psi0, 1, "x") == pytest.approx(0.25)

    def test_spin_half_normalization(self):
        H = to_sparse(PauliSum.from_terms(2, [(1.0, "ZI"), (1.0, "IX")]))
        psi0 = product_state("z", [1, -1])
        times = 0.1 * np.arange(31)
        conserved = autocorrelation(H, psi0, 1, "z", times, method="exact")
        np.testing.assert_allclose(conserved.gamma, 0.25, atol=1e-12)
        precessing = autocorrelation(H, psi0, 2, "z", times, method="exact")
        np.testing.assert_allclose(precessing.gamma, 0.25 * np.cos(2.0 * times), atol=1e-12)
        assert diagonal_ensemble(ExactPropagator(H), psi0, 1, "z") == pytest.approx(0.25)

    def test_prefix_statistics(self):
        times = np.arange(3.0)
        results = [CorrelationResult(times=times, gamma=np.full(3, g), sign=1) for g in (0.1, 0.3, 0.5, 0.7)]
        ttc = mean_and_variance(results)
        head = ttc.head(2)
        assert head.count == 2
        np.testing.assert_allclose(head.mean, 0.2)
        np.testing.assert_allclose(head.variance, 0.02)
        assert ensemble_convergence(ttc, 2) == pytest.approx(0.2)
        assert ensemble_convergence(ttc, 4) == 0.0
        with pytest.raises(ValueError):
            ttc.head(5)


class TestSpectra:

    def test_pure_tone(self):
        K, dt = 100, 0.1
        times = dt * np.arange(K)
        omega0 = 2.0 * np.pi * 5 / (K * dt)
        spectrum = frequency_spectrum(times, np.exp(1j * omega0 * times))
        assert spectrum.modulus_of_mean[5] == pytest.approx(1.0)
        assert np.sum(spectrum.modulus_of_mean) == pytest.approx(1.0)
        assert spectrum.parseval_error < 1e-12

    def test_peaks_of_real_signal(self):
        K, dt = 200, 0.1
        times = dt * np.arange(K)
        omega0 = 2.0 * np.pi * 7 / (K * dt)
        spectrum = frequency_spectrum(times, np.cos(omega0 * times))
        np.testing.assert_allclose(dominant_peaks(spectrum), [omega0])
        assert spectrum.positive_half().omega.size == K // 2 + 1

    def test_ensemble_statistics(self):
        times = np.arange(4.0)
        series = np.array([[1.0, 0.0, 0.0, 0.0], [-1.0, 0.0, 0.0, 0.0]])
        spectrum = frequency_spectrum(times, series)
        np.testing.assert_allclose(spectrum.modulus_of_mean, 0.0, atol=1e-15)
        np.testing.assert_allclose(spectrum.mean_of_modulus, 0.25)
        np.testing.assert_allclose(spectrum.variance, 0.0625)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            frequency_spectrum(np.arange(4.0), np.zeros(5))

    def test_beats(self):
        times = 0.1 * np.arange(10001)
        series = np.cos(0.79 * times) + np.cos(0.81 * times)
        report = beat_analysis(times, series)
        assert report.carrier == pytest.approx(0.8, rel=0.01)
        assert report.first_node == pytest.approx(math.pi / 0.02, rel=0.01)
        assert report.revival_period == pytest.approx(4.0 * math.pi / 0.02, rel=0.01)
        assert report.deviation_from_quoted() is None

    def test_quoted_period_lookup(self):
        times = 0.1 * np.arange(10001)
        report = beat_analysis(times, np.cos(0.79 * times) + np.cos(0.81 * times), L=8)
        assert report.quoted_period == 259.0
        assert report.to_dict()["quoted_deviation"] > 0

    def test_constant_series(self):
        times = 0.1 * np.arange(100)
        with pytest.raises(NumericalError):
            beat_analysis(times, np.full(100, 0.5))


def window_mean(series: np.ndarray, times: np.ndarray, start: float, stop: float) -> complex:
    mask = (times >= start) & (times <= stop)
    return series[mask].mean()


def window_rms(series: np.ndarray, times: np.ndarray, start: float, stop: float) -> float:
    mask = (times >= start) & (times <= stop)
    return float(np.sqrt(np.mean(np.abs(series[mask]) ** 2)))


class TestEdgeDynamics:

    def test_beats_match_edge_splitting(self, kitaev_point):
        H = kitaev_point(8, delta=0.4, perturbation="ising", perturbation_norm="pauli")
        times = 0.1 * np.arange(3001)
        ttc = run_ensemble(H, sample_product_states("z", 8, 16, seed=5), 1, "z", times, method="exact")
        report = beat_analysis(times, ttc.mean, expected_carrier=0.8)
        assert report.carrier == pytest.approx(0.8, abs=2.0 * math.pi / 300.0)
        delta_L = gaps(full_spectrum(H)).delta_L
        assert report.revival_period * delta_L / (2.0 * math.pi) == pytest.approx(1.0, abs=0.05)

    @pytest.mark.slow
    def test_edge_plateaus_dominate_bulk(self, kitaev_point):
        L = 12
        H = kitaev_point(L, delta=0.4, perturbation="inter", perturbation_norm="pauli")
        propagator = ExactPropagator(H)
        times = np.arange(151.0)
        plateau = {}
        for site, axis in ((1, "y"), (2, "y"), (1, "z"), (3, "y")):
            results = [
                autocorrelation(H, state, site, axis, times, method="exact", propagator=propagator)
                for state in sample_product_states(axis, L, 4, seed=7)
            ]
            plateau[site, axis] = abs(window_mean(mean_and_variance(results).mean, times, 50.0, 150.0))
        bulk = plateau[3, "y"]
        for key in ((1, "y"), (2, "y"), (1, "z")):
            assert plateau[key] >= 5.0 * bulk

    @pytest.mark.parametrize("site, axis", [(1, "x"), (3, "y")])
    def test_diagonal_ensemble_matches_late_average(self, kitaev_point, site, axis):
        L = 8
        H = kitaev_point(L, delta=0.4, perturbation="inter", perturbation_norm="pauli")
        propagator = ExactPropagator(H)
        psi0 = sample_product_states(axis, L, 1, seed=11)[0]
        times = np.arange(3001.0)
        result = autocorrelation(H, psi0, site, axis, times, method="exact", propagator=propagator)
        late = window_mean(result.gamma, times, 1000.0, 3000.0).real
        assert late == pytest.approx(diagonal_ensemble(propagator, psi0, site, axis), abs=1e-2)

    def test_edge_precession_does_not_decay(self, kitaev_point):
        L = 10
        H = kitaev_point(L, delta=0.4, perturbation="ising", perturbation_norm="pauli")
        psi0 = sample_product_states("x", L, 1, seed=3)[0]
        times = 0.1 * np.arange(2001)
        gamma = autocorrelation(H, psi0, 1, "x", times, method="exact").gamma
        assert window_rms(gamma, times, 150.0, 200.0) >= 0.95 * window_rms(gamma, times, 0.0, 50.0)

    def test_kitaev_point_peak_count(self, kitaev_point):
        L = 8
        H = kitaev_point(L)
        times = 0.1 * np.arange(3001)
        psi0 = sample_product_states("z", L, 1, seed=2)[0]
        gamma = autocorrelation(H, psi0, 1, "z", times, method="exact").gamma
        peaks = dominant_peaks(frequency_spectrum(times, gamma))
        assert L // 2 - 1 <= peaks.size <= L // 2 + 1

    def test_ising_bulk_peak_count(self, kitaev_point):
        L = 8
        H = kitaev_point(L, delta=0.4, perturbation="ising", perturbation_norm="pauli")
        propagator = ExactPropagator(H)
        times = 0.1 * np.arange(3001)
        signs = [1, 1, -1, 1, -1, -1, 1, 1]
        # Состояния отличаются только знаком на узле 1
        states = [product_state("z", signs), product_state("z", [-signs[0]] + signs[1:])]
        results = [
            autocorrelation(H, psi0, 2, "z", times, method="exact", propagator=propagator) for psi0 in states
        ]
        peaks = dominant_peaks(frequency_spectrum(times, mean_and_variance(results, 2, "z").mean))
        assert L - 3 <= peaks.size <= L - 1
