import math

import numpy as np
import pytest

from src.core.errors import NumericalError
from src.hamiltonians.builder import CouplingMatrix
from src.iontrap.couplings import (
    LaserParams,
    decay_exponent,
    dispersive_report,
    homogenize,
    inter_row_leak,
    optimize_angle,
    physical_scales,
    xx_couplings,
    zz_couplings,
)
from src.iontrap.crystal import IonCrystal, TrapConfig, equilibrium_positions, gradient, hessian, potential
from src.iontrap.mapping import active_mapping, active_window, match_rabi
from src.iontrap.modes import transverse_modes


def zigzag(N: int, amplitude: float = 0.3, spacing: float = 1.0) -> IonCrystal:
    pos = np.zeros((N, 3))
    pos[:, 2] = spacing * (np.arange(N) - (N - 1) / 2)
    pos[:, 0] = amplitude * (-1.0) ** np.arange(N)
    return IonCrystal(positions=pos, energy=0.0, gradient_norm=0.0, min_hessian_eigenvalue=1.0)


@pytest.fixture(scope="module")
def small_chain():
    trap = TrapConfig(N=4)
    crystal = equilibrium_positions(trap, restarts=3)
    return trap, crystal, transverse_modes(crystal, trap, "y")


class TestCrystal:

    def test_two_ions(self):
        crystal = equilibrium_positions(TrapConfig(N=2), restarts=3)
        a = 0.25 ** (1.0 / 3.0)
        np.testing.assert_allclose(crystal.z, [-a, a], atol=1e-8)
        np.testing.assert_allclose(crystal.x, 0.0, atol=1e-8)
        assert crystal.min_hessian_eigenvalue > 0

    def test_gradient_and_hessian_match_finite_differences(self, rng):
        stiffness = np.array([2.0, 3.0, 1.0])
        flat = zigzag(3).positions.ravel() + 0.05 * rng.standard_normal(9)
        h = 1e-6
        numeric_grad = np.array([
            (potential(flat + h * e, stiffness) - potential(flat - h * e, stiffness)) / (2 * h)
            for e in np.eye(9)
        ])
        np.testing.assert_allclose(gradient(flat, stiffness), numeric_grad, atol=1e-6)
        numeric_hess = np.array([
            (gradient(flat + h * e, stiffness) - gradient(flat - h * e, stiffness)) / (2 * h)
            for e in np.eye(9)
        ])
        np.testing.assert_allclose(hessian(flat, stiffness), numeric_hess, atol=1e-5)

    def test_trap_validation(self):
        with pytest.raises(ValueError):
            TrapConfig(N=1)
        with pytest.raises(ValueError):
            TrapConfig(N=10, wx_over_wz=20.0, wy_over_wz=10.0)

    def test_length_scale_of_ytterbium(self):
        assert TrapConfig(N=2).length_scale() == pytest.approx(14.76e-6, rel=1e-3)

    def test_rows(self):
        assert list(zigzag(4).rows()) == [1, -1, 1, -1]
        assert zigzag(4).is_planar()

    @pytest.mark.slow
    def test_seventy_ions_form_planar_zigzag(self):
        crystal = equilibrium_positions(TrapConfig(N=70), restarts=3)
        assert crystal.is_planar()
        assert np.any(crystal.rows() != 0)
        assert crystal.gradient_norm <= 1e-10


class TestModes:

    def test_com_mode_at_trap_frequency(self, small_chain):
        trap, _, modes = small_chain
        assert modes.frequencies[0] == pytest.approx(trap.wy_over_wz, rel=1e-10)
        assert np.all(np.diff(modes.frequencies) <= 0)
        np.testing.assert_allclose(modes.eigenvectors.T @ modes.eigenvectors, np.eye(4), atol=1e-10)

    def test_unknown_branch(self, small_chain):
        trap, crystal, _ = small_chain
        with pytest.raises(ValueError):
            transverse_modes(crystal, trap, "w")


class TestCouplings:

    def test_resonant_tone_rejected(self, small_chain):
        trap, crystal, modes = small_chain
        with pytest.raises(NumericalError):
            zz_couplings(crystal, modes, LaserParams.single(1.0, 0.0), trap)

    def test_matrices_are_symmetric(self, small_chain):
        trap, crystal, modes = small_chain
        laser = LaserParams.single(1.0, 6.0)
        for V in (zz_couplings(crystal, modes, laser, trap), xx_couplings(crystal, modes, laser, trap)):
            np.testing.assert_allclose(V, V.T)
            np.testing.assert_allclose(np.diag(V), 0.0)
            assert np.any(V != 0)

    def test_dispersive_report(self, small_chain):
        trap, _, modes = small_chain
        report = dispersive_report(modes, LaserParams.single(1.0, 6.0), trap.wy_over_wz)
        assert report["inside_band"] == [False]
        assert report["min_distance"] == pytest.approx(6.0, rel=1e-9)

    def test_decay_exponent_of_dipolar_couplings(self):
        i = np.arange(10)
        d = np.abs(np.subtract.outer(i, i)).astype(float)
        V = np.where(d > 0, 1.0 / np.where(d > 0, d, 1.0) ** 3, 0.0)
        assert decay_exponent(V) == pytest.approx(3.0)
        with pytest.raises(ValueError):
            decay_exponent(V[:2, :2])

    def test_inter_row_leak(self):
        i = np.arange(6)
        d = np.abs(np.subtract.outer(i, i))
        V = np.where(d == 1, 0.1, np.where(d == 2, 1.0, 0.0))
        assert inter_row_leak(V, list(range(6))) == pytest.approx(0.1)

    def test_decay_over_same_row_pairs(self):
        i = np.arange(12)
        d = np.abs(np.subtract.outer(i, i)).astype(float)
        V = np.where(d > 0, 1.0 / np.where(d > 0, d, 1.0) ** 3, 0.0)
        V[d % 2 == 1] *= 1e-4
        assert decay_exponent(V, stride=2) == pytest.approx(3.0)
        with pytest.raises(ValueError):
            decay_exponent(V, stride=0)

    def test_angle_nulls_inter_row_couplings(self):
        N = 8
        trap = TrapConfig(N=N)
        crystal = zigzag(N)
        modes = transverse_modes(crystal, trap, "y")
        laser = LaserParams.single(1.0, 6.0, phi=0.5)
        scan = optimize_angle(crystal, modes, laser, trap, list(range(N)), tolerance=0.5)

        a = laser.k_mag * trap.length_scale() * 0.6
        m = np.arange(int(a / math.pi) + 1)
        zeros = np.arccos(np.clip((m + 0.5) * math.pi / a, -1.0, 1.0))
        zeros = zeros[(zeros > 0.05) & (zeros < math.pi / 2 - 0.05)]
        nearest = zeros[np.argmin(np.abs(zeros - 0.5))]
        assert scan.phi == pytest.approx(nearest, abs=1e-6)
        assert scan.leak < 1e-4

        Vzz = zz_couplings(crystal, modes, laser.with_phi(scan.phi), trap)
        assert inter_row_leak(Vzz, list(range(N))) < 1e-4
        assert inter_row_leak(zz_couplings(crystal, modes, laser, trap), list(range(N))) > scan.leak

    def test_physical_scales(self):
        scales = physical_scales(LaserParams.single(1.0, 6.0), TrapConfig(N=2))
        assert scales["zz_scale_rad_s"] == pytest.approx(0.5 * scales["xx_scale_rad_s"])
        assert scales["omega_z_rad_s"] == pytest.approx(2.0 * math.pi * 80e3)

    def test_homogenize(self):
        crystal = zigzag(6)
        crystal.positions[3, 2] += 0.1
        crystal.positions[2, 0] = 0.5
        uniform = homogenize(crystal)
        np.testing.assert_allclose(np.diff(uniform.z), np.diff(uniform.z)[0])
        np.testing.assert_allclose(np.abs(uniform.x), np.abs(uniform.x[0]))
        assert list(uniform.rows()) == list(crystal.rows())


class TestMapping:

    def test_active_window_hides_every_third_ion(self):
        mapping = active_window(zigzag(12), 8)
        assert mapping.hidden == (1, 4, 7, 10)
        assert mapping.active == (0, 2, 3, 5, 6, 8, 9, 11)
        assert mapping.L == 8

    def test_centered_window(self):
        mapping = active_window(zigzag(10), 4)
        assert mapping.window == (2, 3, 4, 5, 6, 7)

    def test_window_too_large(self):
        with pytest.raises(ValueError):
            active_window(zigzag(12), 10)

    def test_active_mapping(self):
        V = np.arange(36, dtype=float).reshape(6, 6)
        V = V + V.T
        np.fill_diagonal(V, 0.0)
        mapping = active_window(zigzag(6), 4)
        cm = active_mapping(V, 2 * V, mapping)
        assert cm.n == 4
        assert cm.Jzz[0, 1] == V[0, 2]
        assert cm.Jxx[1, 2] == 2 * V[2, 3]

    def test_match_rabi(self):
        Jxx = np.zeros((4, 4))
        Jzz = np.zeros((4, 4))
        for a, b, xx, zz in [(0, 1, 1.0, 4.0), (2, 3, 1.0, 4.0), (1, 2, 3.0, 0.2), (0, 2, 0.1, 0.0)]:
            Jxx[a, b] = Jxx[b, a] = xx
            Jzz[a, b] = Jzz[b, a] = zz
        scaled, report = match_rabi(CouplingMatrix(Jxx=Jxx, Jzz=Jzz))
        assert scaled.Jzz[2, 3] == pytest.approx(1.0)
        assert scaled.Jxx[1, 2] - scaled.Jxx[0, 1] == pytest.approx(1.0)
        assert report.delta_eff == pytest.approx(0.5)
        assert scaled.Jxx[0, 1] == pytest.approx(report.delta_eff)
        assert report.zz_even_leak == pytest.approx(0.05)
        assert report.max_residual_ratio == pytest.approx(0.05)

    def test_match_rabi_ideal_ising_target(self):
        L = 6
        Jxx = np.zeros((L, L))
        Jzz = np.zeros((L, L))
        for k in range(L - 1):
            odd = k % 2 == 0
            Jxx[k, k + 1] = Jxx[k + 1, k] = 3.0 if odd else 6.0
            Jzz[k, k + 1] = Jzz[k + 1, k] = 0.7 if odd else 0.0
        scaled, report = match_rabi(CouplingMatrix(Jxx=Jxx, Jzz=Jzz))
        assert report.delta_eff == pytest.approx(1.0)
        assert report.max_residual_ratio == 0.0
        np.testing.assert_allclose(np.diagonal(scaled.Jxx, offset=1), [1.0, 2.0, 1.0, 2.0, 1.0])

    def test_match_rabi_needs_stronger_even_bonds(self):
        Jxx = np.zeros((4, 4))
        for a, b, xx in [(0, 1, 2.0), (1, 2, 1.0), (2, 3, 2.0)]:
            Jxx[a, b] = Jxx[b, a] = xx
        with pytest.raises(NumericalError):
            match_rabi(CouplingMatrix(Jxx=Jxx, Jzz=Jxx.copy()))

    def test_match_rabi_requires_four_sites(self):
        with pytest.raises(ValueError):
            match_rabi(CouplingMatrix(Jxx=np.array([[0, 1.0], [1.0, 0]]), Jzz=np.array([[0, 1.0], [1.0, 0]])))

    def test_match_rabi_zero_median(self):
        J = np.zeros((4, 4))
        with pytest.raises(NumericalError):
            match_rabi(CouplingMatrix(Jxx=J, Jzz=J))
