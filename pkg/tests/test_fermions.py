import math

import numpy as np
import pytest

from src.algebra.sparse import to_sparse
from src.fermions.oracle import (
    BdgSystem,
    build_bdg,
    chain_couplings,
    compare_spectra,
    majorana_decay_ratios,
    many_body_spectrum,
)
from src.hamiltonians.builder import ModelSpec, build_kh


def spin_spectrum(spec: ModelSpec) -> np.ndarray:
    return np.linalg.eigvalsh(to_sparse(build_kh(spec)).to_dense())


def oracle_spectrum(spec: ModelSpec) -> np.ndarray:
    levels = many_body_spectrum(build_bdg(spec.L, spec.spin_delta, spec.perturbation, spec.theta))
    if spec.rescaled:
        levels = levels / (1.0 + spec.spin_delta)
    return levels


class TestOracleAgreement:

    @pytest.mark.parametrize("L", [4, 6, 8])
    @pytest.mark.parametrize("delta", [0.0, 0.2, 0.4])
    @pytest.mark.parametrize("perturbation", ["none", "intra", "inter"])
    def test_kitaev_line(self, L, delta, perturbation):
        spec = ModelSpec(L=L, delta=delta, perturbation=perturbation)
        result = compare_spectra(spin_spectrum(spec), oracle_spectrum(spec), tol=1e-8, truncate=False)
        assert result.passed, result.max_dev
        assert result.count == 2 ** L

    def test_away_from_kitaev_point(self):
        spec = ModelSpec(L=6, theta=math.pi / 3, delta=0.3, perturbation="inter")
        result = compare_spectra(spin_spectrum(spec), oracle_spectrum(spec), truncate=False)
        assert result.passed, result.max_dev

    def test_rescaled_model(self):
        spec = ModelSpec(L=6, delta=0.4, perturbation="inter", rescaled=True)
        result = compare_spectra(spin_spectrum(spec), oracle_spectrum(spec), truncate=False)
        assert result.passed, result.max_dev


class TestChains:

    def test_couplings_at_kitaev_point(self):
        chain_a, chain_b = chain_couplings(6, 0.5, "inter")
        np.testing.assert_allclose(chain_a, [1.0, 1.5, 1.0, 1.5, 1.0])
        np.testing.assert_allclose(chain_b, 0.0, atol=1e-15)

    def test_ising_is_not_free(self):
        with pytest.raises(ValueError):
            chain_couplings(4, 0.1, "ising")

    def test_odd_length_rejected(self):
        with pytest.raises(ValueError):
            build_bdg(5, 0.0)

    def test_bdg_matrix_is_particle_hole_symmetric(self):
        system = BdgSystem("A", [1.0, 0.7, 1.3])
        evals = np.linalg.eigvalsh(system.bdg_matrix())
        np.testing.assert_allclose(np.sort(evals), np.sort(-evals), atol=1e-12)
        assert system.n == 2
        assert system.energies.size == 2

    def test_many_body_mean_matches_trace(self):
        levels = many_body_spectrum(build_bdg(4, 0.3), trace_per_state=0.0)
        assert levels.size == 16
        assert np.mean(levels) == pytest.approx(0.0, abs=1e-12)

    def test_majorana_decay(self):
        delta = 0.4
        ratios = majorana_decay_ratios(list(range(4, 10)), delta)
        np.testing.assert_allclose(ratios, 1.0 / (1.0 + delta), rtol=0.05)


class TestCompareSpectra:

    def test_mismatch_fails(self):
        result = compare_spectra([0.0, 1.0], [0.0, 1.1], tol=1e-8)
        assert not result.passed
        assert result.max_dev == pytest.approx(0.1)
        assert result.to_dict(L=2)["pass"] is False

    def test_unequal_sizes(self):
        assert compare_spectra([0.0, 1.0, 2.0], [0.0, 1.0]).count == 2
        with pytest.raises(ValueError):
            compare_spectra([0.0, 1.0, 2.0], [0.0, 1.0], truncate=False)
