"""
Эффективные спин-спиновые связи через виртуальный обмен поперечными фононами

Связи считаются в безразмерной форме: частоты в единицах ω_z, длины в единицах ℓ.
Физические множители вида ħ|k|²/m хранятся отдельно и попадают только в метаданные.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import scipy.constants as const
from scipy.optimize import minimize_scalar

from ..core.errors import NumericalError
from .crystal import IonCrystal, TrapConfig
from .modes import ModeData

logger = logging.getLogger(__name__)

RESONANCE_TOL = 1e-9
DEFAULT_WAVELENGTH = 400e-9
DEFAULT_PHI = 0.5164


@dataclass(frozen=True)
class LaserTone:
    """Один тон: эффективная частота Раби Ω и отстройка Δ от ω_y (в единицах ω_z)"""

    rabi: float
    detuning: float

    def line_frequency(self, wy_over_wz: float) -> float:
        """ω_l = ω_y/ω_z + Δ/ω_z"""
        return wy_over_wz + self.detuning


@dataclass(frozen=True)
class LaserParams:
    """
    Параметры пучков: |k| в 1/м, угол φ в плоскости xy, набор тонов

    Вклады тонов складываются.
    """

    tones: Tuple[LaserTone, ...]
    k_mag: float = 2.0 * math.pi / DEFAULT_WAVELENGTH
    phi: float = DEFAULT_PHI

    def __post_init__(self):
        object.__setattr__(self, "tones", tuple(self.tones))
        if not self.tones:
            raise ValueError("Требуется хотя бы один тон")
        if self.k_mag <= 0:
            raise ValueError(f"|k| должно быть положительным: {self.k_mag}")

    @classmethod
    def single(cls, rabi: float, detuning: float, k_mag: float = 2.0 * math.pi / DEFAULT_WAVELENGTH, phi: float = DEFAULT_PHI) -> "LaserParams":
        return cls(tones=(LaserTone(rabi, detuning),), k_mag=k_mag, phi=phi)

    def with_phi(self, phi: float) -> "LaserParams":
        return LaserParams(tones=self.tones, k_mag=self.k_mag, phi=phi)

    def wavevector(self, length_scale: float) -> np.ndarray:
        """Безразмерный волновой вектор k·ℓ в координатах (x, y, z)"""
        k = self.k_mag * length_scale
        return np.array([k * math.cos(self.phi), k * math.sin(self.phi), 0.0])


def _check_detuning(modes: ModeData, line: float, label: str) -> bool:
    distance = float(np.min(np.abs(modes.frequencies - line)))
    if distance < RESONANCE_TOL:
        logger.error(f"{label}: резонанс с модой, |ω_p − ω_l| = {distance:.2e}")
        raise NumericalError(f"{label}: частота ω_l={line:.10g} совпадает с колебательной модой")
    low, high = modes.band()
    inside = low < line < high
    if inside:
        logger.warning(f"{label}: ω_l={line:.6g} внутри полосы [{low:.6g}, {high:.6g}], дисперсионный режим нарушен")
    return inside


def dispersive_report(modes: ModeData, laser: LaserParams, wy_over_wz: float) -> Dict:
    """Положение частот тонов относительно полосы мод"""
    low, high = modes.band()
    lines = [tone.line_frequency(wy_over_wz) for tone in laser.tones]
    return {
        "band": [low, high],
        "lines": lines,
        "inside_band": [low < w < high for w in lines],
        "min_distance": float(min(np.min(np.abs(modes.frequencies - w)) for w in lines)),
    }


def angular_factor(geometry: IonCrystal, wavevector: np.ndarray) -> np.ndarray:
    """cos(k⃗·(r_i − r_j)) для всех пар"""
    phase = geometry.positions @ wavevector
    return np.cos(phase[:, None] - phase[None, :])


def zz_couplings(
    crystal: IonCrystal,
    modes: ModeData,
    laser: LaserParams,
    trap: TrapConfig,
    geometry: Optional[IonCrystal] = None,
) -> np.ndarray:
    """
    Связи V^a_ij = −Ω² sin²φ Σ_p M_ip M_jp cos(k⃗·r_ij) / (ω_p(ω_p − ω_l))

    Args:
        crystal: Кристалл, задающий моды
        modes: Поперечные моды
        laser: Параметры пучков
        trap: Ловушка (ω_y/ω_z и масштаб длины)
        geometry: Кристалл для углового множителя (по умолчанию crystal)

    Returns:
        Симметричная N×N матрица с нулевой диагональю
    """
    geometry = geometry or crystal
    if geometry.N != crystal.N:
        raise ValueError(f"Геометрия на {geometry.N} ионов не соответствует кристаллу на {crystal.N}")
    cosines = angular_factor(geometry, laser.wavevector(trap.length_scale()))
    V = math.sin(laser.phi) ** 2 * _zz_kernel(modes, laser, trap) * cosines
    V = 0.5 * (V + V.T)
    np.fill_diagonal(V, 0.0)
    return V


def _zz_kernel(modes: ModeData, laser: LaserParams, trap: TrapConfig) -> np.ndarray:
    """−Σ_tones Ω² Σ_p M_ip M_jp / (ω_p(ω_p − ω_l)) без углового множителя"""
    M, w = modes.eigenvectors, modes.frequencies
    kernel = np.zeros((M.shape[0], M.shape[0]))
    for n, tone in enumerate(laser.tones):
        line = tone.line_frequency(trap.wy_over_wz)
        _check_detuning(modes, line, f"ZZ, тон {n}")
        weights = 1.0 / (w * (w - line))
        kernel -= (tone.rabi ** 2) * (M * weights) @ M.T
    return kernel


def xx_couplings(crystal: IonCrystal, modes: ModeData, laser: LaserParams, trap: TrapConfig) -> np.ndarray:
    """
    Связи V^b_ij = Ω² Σ_p M_ip M_jp / (ω_l² − ω_p²) без углового множителя

    Отстройка ниже вершины полосы даёт отрицательный γ и отмечается предупреждением.
    """
    M, w = modes.eigenvectors, modes.frequencies
    V = np.zeros((crystal.N, crystal.N))
    for n, tone in enumerate(laser.tones):
        line = tone.line_frequency(trap.wy_over_wz)
        _check_detuning(modes, line, f"XX, тон {n}")
        if line < w.max():
            logger.warning(f"XX, тон {n}: ω_l={line:.6g} ниже вершины полосы, γ отрицателен")
        weights = 1.0 / (line ** 2 - w ** 2)
        V += (tone.rabi ** 2) * (M * weights) @ M.T
    V = 0.5 * (V + V.T)
    np.fill_diagonal(V, 0.0)
    return V


def physical_scales(laser: LaserParams, trap: TrapConfig) -> Dict[str, float]:
    """Множители перевода безразмерных связей в рад/с: ħk²/(8m) для ZZ и ħk²/(4m) для XX"""
    recoil = const.hbar * laser.k_mag ** 2 / trap.mass
    return {
        "length_scale_m": trap.length_scale(),
        "zz_scale_rad_s": recoil / 8.0,
        "xx_scale_rad_s": recoil / 4.0,
        "omega_z_rad_s": trap.omega_z,
    }


def homogenize(crystal: IonCrystal, indices: Optional[Sequence[int]] = None) -> IonCrystal:
    """
    Идеализированная геометрия: равный шаг по z и одинаковое |x| в каждом ряду

    Средние берутся по индексам indices (по умолчанию по всему кристаллу).
    """
    idx = np.arange(crystal.N) if indices is None else np.asarray(indices)
    z = crystal.z
    spacing = float(np.mean(np.diff(z[idx]))) if idx.size > 1 else 0.0
    amplitude = float(np.mean(np.abs(crystal.x[idx])))
    centre = float(np.mean(z[idx]))
    pos = np.zeros_like(crystal.positions)
    pos[:, 2] = centre + spacing * (np.arange(crystal.N) - float(np.mean(idx)))
    pos[:, 0] = crystal.rows() * amplitude
    return IonCrystal(
        positions=pos,
        energy=crystal.energy,
        gradient_norm=crystal.gradient_norm,
        min_hessian_eigenvalue=crystal.min_hessian_eigenvalue,
    )


def _row_pairs(indices: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    idx = np.asarray(indices)
    same = np.array([(a, b) for a, b in zip(idx, idx[2:])])
    cross = np.array([(a, b) for a, b in zip(idx, idx[1:])])
    return same, cross


def inter_row_leak(V: np.ndarray, indices: Sequence[int]) -> float:
    """Отношение медианы |V| между рядами (i, i+1) к медиане внутри ряда (i, i+2)"""
    same, cross = _row_pairs(indices)
    intra = np.median(np.abs(V[same[:, 0], same[:, 1]]))
    inter = np.median(np.abs(V[cross[:, 0], cross[:, 1]]))
    return float(inter / intra) if intra > 0 else math.inf


@dataclass
class AngleScan:
    """Итог подбора угла φ"""

    phi: float
    leak: float
    grid: np.ndarray = field(repr=False)
    leaks: np.ndarray = field(repr=False)


def optimize_angle(
    crystal: IonCrystal,
    modes: ModeData,
    laser: LaserParams,
    trap: TrapConfig,
    indices: Sequence[int],
    geometry: Optional[IonCrystal] = None,
    bounds: Tuple[float, float] = (0.05, math.pi / 2 - 0.05),
    points: int = 4001,
    tolerance: float = 0.05,
) -> AngleScan:
    """
    Угол φ, подавляющий ZZ между рядами на парах активного окна

    Множитель sin²φ сокращается в отношении, поэтому от φ зависит только угловая
    часть. Минимумов утечки много; берётся ближайший к laser.phi из тех, что на сетке
    не выше tolerance (иначе глобальный), затем уточнение ограниченным одномерным поиском.

    Args:
        crystal: Кристалл
        modes: Поперечные моды
        laser: Пучки (|k|, тоны и начальный угол берутся отсюда)
        trap: Ловушка
        indices: Ионы окна по порядку z
        geometry: Геометрия для углового множителя (по умолчанию crystal)
        bounds: Диапазон поиска
        points: Число точек сетки
        tolerance: Допустимая утечка для выбора ближайшего минимума

    Returns:
        Лучший угол и величина утечки
    """
    if len(indices) < 3:
        raise ValueError("Для подбора угла нужно не менее трёх ионов")
    geometry = geometry or crystal
    kernel = _zz_kernel(modes, laser, trap)
    scale = trap.length_scale()

    def leak(phi: float) -> float:
        return inter_row_leak(kernel * angular_factor(geometry, laser.with_phi(phi).wavevector(scale)), indices)

    grid = np.linspace(bounds[0], bounds[1], points)
    leaks = np.array([leak(phi) for phi in grid])
    interior = np.arange(1, points - 1)
    minima = interior[(leaks[interior] <= leaks[interior - 1]) & (leaks[interior] <= leaks[interior + 1])]
    accepted = minima[leaks[minima] <= tolerance]
    if accepted.size:
        best = int(accepted[np.argmin(np.abs(grid[accepted] - laser.phi))])
    else:
        best = int(np.argmin(leaks))
        logger.warning(f"Утечка между рядами не опускается ниже {tolerance} на сетке, берётся глобальный минимум")
    step = grid[1] - grid[0]
    lo, hi = max(bounds[0], grid[best] - step), min(bounds[1], grid[best] + step)
    refined = minimize_scalar(leak, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    if refined.fun < leaks[best]:
        phi, value = float(refined.x), float(refined.fun)
    else:
        phi, value = float(grid[best]), float(leaks[best])
    logger.info(f"Подбор угла: φ={phi:.6f} рад (начальный {laser.phi:.4f}), утечка между рядами {value:.3e}")
    return AngleScan(phi=phi, leak=value, grid=grid, leaks=leaks)


def decay_exponent(
    V: np.ndarray,
    indices: Optional[Sequence[int]] = None,
    max_distance: Optional[int] = None,
    stride: int = 1,
) -> float:
    """
    Показатель R степенного спада |V_ij| ~ 1/|i−j|^R

    Среднее |V| на каждом расстоянии d по индексам цепочки, затем линейная
    аппроксимация log-log. При stride=2 берутся только чётные d (пары одного ряда).
    """
    if stride < 1:
        raise ValueError(f"Шаг по расстояниям должен быть положительным: {stride}")
    idx = np.arange(V.shape[0]) if indices is None else np.asarray(indices)
    sub = np.abs(V[np.ix_(idx, idx)])
    n = idx.size
    limit = n - 1 if max_distance is None else min(max_distance, n - 1)
    distances = np.arange(stride, limit + 1, stride)
    if distances.size < 2:
        raise ValueError("Для аппроксимации нужно не менее двух расстояний")
    means = np.array([np.mean(np.diagonal(sub, offset=d)) for d in distances])
    keep = means > 0
    if keep.sum() < 2:
        raise NumericalError("Недостаточно ненулевых связей для аппроксимации спада")
    slope, _ = np.polyfit(np.log(distances[keep]), np.log(means[keep]), 1)
    return float(-slope)
