"""
Равновесие ионного кристалла в анизотропной гармонической ловушке

Безразмерные единицы: длина ℓ = (q²/(4πε₀ m ω_z²))^{1/3}, частоты в единицах ω_z.
Потенциал U = Σ_i (z_i² + b_x² x_i² + b_y² y_i²)/2 + Σ_{i<j} 1/|r_i − r_j|, где b_a = ω_a/ω_z.
Координаты хранятся массивом формы (N, 3) в порядке (x, y, z).
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.constants as const
from scipy.optimize import minimize

from ..core.errors import NumericalError

logger = logging.getLogger(__name__)

DEFAULT_OMEGA_Z = 2.0 * math.pi * 80e3
YB171_MASS_AMU = 170.936323
GRADIENT_TOL = 1e-10
HESSIAN_TOL = 1e-9


@dataclass(frozen=True)
class TrapConfig:
    """Параметры ловушки: число ионов и отношения частот"""

    N: int
    wx_over_wz: float = 18.75
    wy_over_wz: float = 125.0
    omega_z: float = DEFAULT_OMEGA_Z
    mass_amu: float = YB171_MASS_AMU
    charge: int = 1

    def __post_init__(self):
        if self.N < 2:
            raise ValueError(f"Требуется не менее двух ионов: N={self.N}")
        if not self.wy_over_wz > self.wx_over_wz > 1.0:
            raise ValueError(
                f"Требуется ω_y/ω_z > ω_x/ω_z > 1, получено {self.wy_over_wz} и {self.wx_over_wz}"
            )
        if self.omega_z <= 0 or self.mass_amu <= 0 or self.charge == 0:
            raise ValueError("ω_z, масса и заряд должны быть положительными")

    @property
    def stiffness(self) -> np.ndarray:
        """Квадраты безразмерных частот по осям (x, y, z)"""
        return np.array([self.wx_over_wz ** 2, self.wy_over_wz ** 2, 1.0])

    @property
    def mass(self) -> float:
        return self.mass_amu * const.atomic_mass

    def length_scale(self) -> float:
        """Единица длины ℓ в метрах"""
        q = self.charge * const.e
        return (q ** 2 / (4.0 * math.pi * const.epsilon_0 * self.mass * self.omega_z ** 2)) ** (1.0 / 3.0)


@dataclass
class IonCrystal:
    """Равновесные координаты (N, 3), отсортированные по z"""

    positions: np.ndarray
    energy: float
    gradient_norm: float
    min_hessian_eigenvalue: float

    @property
    def N(self) -> int:
        return self.positions.shape[0]

    @property
    def x(self) -> np.ndarray:
        return self.positions[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.positions[:, 1]

    @property
    def z(self) -> np.ndarray:
        return self.positions[:, 2]

    def is_planar(self, tol: float = 1e-8) -> bool:
        """Все ионы в плоскости xz"""
        return bool(np.all(np.abs(self.y) < tol))

    def rows(self) -> np.ndarray:
        """Знак x каждого иона (+1/−1), 0 для ионов на оси"""
        return np.sign(np.where(np.abs(self.x) < 1e-9, 0.0, self.x)).astype(int)


def _separations(pos: np.ndarray):
    d = pos[:, None, :] - pos[None, :, :]
    r = np.sqrt(np.sum(d ** 2, axis=2))
    np.fill_diagonal(r, np.inf)
    return d, r


def potential(flat: np.ndarray, stiffness: np.ndarray) -> float:
    """Безразмерная потенциальная энергия"""
    pos = flat.reshape(-1, 3)
    _, r = _separations(pos)
    return float(0.5 * np.sum(stiffness * pos ** 2) + 0.5 * np.sum(1.0 / r))


def gradient(flat: np.ndarray, stiffness: np.ndarray) -> np.ndarray:
    """Градиент U по всем 3N координатам"""
    pos = flat.reshape(-1, 3)
    d, r = _separations(pos)
    coulomb = np.sum(d / r[:, :, None] ** 3, axis=1)
    return (stiffness * pos - coulomb).ravel()


def hessian(flat: np.ndarray, stiffness: np.ndarray) -> np.ndarray:
    """
    Гессиан U, матрица 3N×3N

    Вне диагонали по ионам: (δ_ab r² − 3 d_a d_b)/r⁵; диагональный блок иона i —
    жёсткость ловушки минус сумма внедиагональных блоков строки.
    """
    pos = flat.reshape(-1, 3)
    N = pos.shape[0]
    d, r = _separations(pos)
    r = np.where(np.isinf(r), 1.0, r)
    inv5 = 1.0 / r ** 5
    np.fill_diagonal(inv5, 0.0)
    blocks = np.eye(3)[None, None, :, :] * (r ** 2)[:, :, None, None] - 3.0 * d[:, :, :, None] * d[:, :, None, :]
    blocks = blocks * inv5[:, :, None, None]
    idx = np.arange(N)
    blocks[idx, idx] = np.diag(stiffness)[None, :, :] - blocks.sum(axis=1)
    return blocks.transpose(0, 2, 1, 3).reshape(3 * N, 3 * N)


def _initial_guess(trap: TrapConfig, rng: np.random.Generator, noise: float) -> np.ndarray:
    N = trap.N
    half_length = (0.75 * N * max(math.log(N), 1.0)) ** (1.0 / 3.0)
    pos = np.zeros((N, 3))
    pos[:, 2] = np.linspace(-half_length, half_length, N)
    pos[:, 0] = noise * rng.standard_normal(N)
    pos[:, 1] = 0.01 * noise * rng.standard_normal(N)
    return pos.ravel()


def _polish(flat: np.ndarray, stiffness: np.ndarray, tol: float, max_iter: int = 30) -> np.ndarray:
    """Доводка методом Ньютона вблизи минимума"""
    for _ in range(max_iter):
        g = gradient(flat, stiffness)
        if np.linalg.norm(g) <= tol:
            break
        try:
            flat = flat - np.linalg.solve(hessian(flat, stiffness), g)
        except np.linalg.LinAlgError:
            break
    return flat


def equilibrium_positions(
    trap: TrapConfig,
    tol: float = GRADIENT_TOL,
    restarts: int = 20,
    seed: int = 0,
    noise: float = 0.1,
) -> IonCrystal:
    """
    Локальный минимум потенциала с наименьшей энергией среди перезапусков

    Каждый запуск стартует с растянутой линейной цепочки с поперечным шумом;
    решения с отрицательным собственным значением гессиана (сёдла) отбрасываются.

    Args:
        trap: Параметры ловушки
        tol: Допуск нормы градиента
        restarts: Число случайных стартов
        seed: Зерно шума
        noise: Амплитуда поперечного шума

    Returns:
        Кристалл с координатами, отсортированными по z
    """
    stiffness = trap.stiffness
    rng = np.random.default_rng(seed)
    best: Optional[IonCrystal] = None
    saddles = 0

    for attempt in range(max(1, restarts)):
        x0 = _initial_guess(trap, rng, noise)
        result = minimize(
            potential,
            x0,
            args=(stiffness,),
            method="trust-exact",
            jac=gradient,
            hess=hessian,
            options={"gtol": tol, "maxiter": 2000},
        )
        flat = _polish(result.x, stiffness, tol)
        g_norm = float(np.linalg.norm(gradient(flat, stiffness)))
        if g_norm > tol:
            logger.debug(f"Старт {attempt}: градиент {g_norm:.2e} выше допуска")
            continue
        min_eig = float(np.linalg.eigvalsh(hessian(flat, stiffness))[0])
        if min_eig < -HESSIAN_TOL:
            saddles += 1
            continue
        energy = potential(flat, stiffness)
        if best is None or energy < best.energy - 1e-12:
            pos = flat.reshape(-1, 3)
            pos = pos[np.argsort(pos[:, 2])]
            best = IonCrystal(positions=pos, energy=energy, gradient_norm=g_norm, min_hessian_eigenvalue=min_eig)

    if best is None:
        logger.error(f"Равновесие не найдено: N={trap.N}, перезапусков {restarts}, сёдел {saddles}")
        raise NumericalError(f"Не найден устойчивый минимум для N={trap.N} ионов ({saddles} сёдел)")
    logger.info(
        f"Кристалл N={trap.N}: энергия {best.energy:.10g}, |∇U|={best.gradient_norm:.1e}, "
        f"плоский={best.is_planar()}"
    )
    return best
