"""
Отображение зигзагообразного кристалла на спиновую цепочку и согласование частот Раби
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from ..core.errors import NumericalError
from ..hamiltonians.builder import CouplingMatrix
from .crystal import IonCrystal

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ActiveMap:
    """Активные ионы (по порядку сайтов 1..L) и скрытые ионы окна"""

    active: Tuple[int, ...]
    hidden: Tuple[int, ...]
    window: Tuple[int, ...]

    @property
    def L(self) -> int:
        return len(self.active)

    def to_dict(self) -> Dict:
        return {"active": list(self.active), "hidden": list(self.hidden), "window": list(self.window)}


def active_window(crystal: IonCrystal, L: int) -> ActiveMap:
    """
    Центральное окно из 3L/2 ионов, в котором скрыт каждый третий ион

    Скрываются позиции окна 1, 4, 7, ... (с нуля), так что соседние активные пары
    чередуются: один ряд (i, i+2) и разные ряды (i, i+1).

    Args:
        crystal: Кристалл, отсортированный по z
        L: Чётная длина спиновой цепочки

    Returns:
        Отображение окна
    """
    if L < 2 or L % 2:
        raise ValueError(f"Длина цепочки должна быть чётной: {L}")
    width = 3 * L // 2
    if width > crystal.N:
        raise ValueError(f"Окно из {width} ионов для L={L} больше кристалла из {crystal.N}")
    start = (crystal.N - width) // 2
    window = list(range(start, start + width))
    hidden = [ion for k, ion in enumerate(window) if k % 3 == 1]
    active = [ion for k, ion in enumerate(window) if k % 3 != 1]

    rows = crystal.rows()
    for n in range(0, L - 1, 2):
        a, b = active[n], active[n + 1]
        if rows[a] != rows[b]:
            logger.warning(f"Пара сайтов ({n + 1}, {n + 2}) на ионах {a}, {b} лежит в разных рядах")
    return ActiveMap(active=tuple(active), hidden=tuple(hidden), window=tuple(window))


def active_mapping(Vzz: np.ndarray, Vxx: np.ndarray, mapping: ActiveMap) -> CouplingMatrix:
    """
    Полные матрицы связей на активных сайтах, включая дальнодействующие остатки

    Пары одного ряда (i, i+2) становятся нечётными связями (2i'−1, 2i'), пары разных
    рядов (i, i+1) — чётными (2i', 2i'+1).
    """
    idx = np.asarray(mapping.active)
    if Vzz.shape != Vxx.shape or Vzz.shape[0] <= idx.max():
        raise ValueError(f"Матрицы связей {Vzz.shape}, {Vxx.shape} не покрывают активные ионы")
    Jzz = np.array(Vzz[np.ix_(idx, idx)])
    Jxx = np.array(Vxx[np.ix_(idx, idx)])
    for m in (Jzz, Jxx):
        np.fill_diagonal(m, 0.0)
    return CouplingMatrix(Jxx=0.5 * (Jxx + Jxx.T), Jzz=0.5 * (Jzz + Jzz.T))


def _bond_values(matrix: np.ndarray, parity: str) -> np.ndarray:
    start = 0 if parity == "odd" else 1
    return np.array([matrix[k, k + 1] for k in range(start, matrix.shape[0] - 1, 2)])


@dataclass
class MatchReport:
    """Итог согласования частот Раби"""

    zz_scale: float
    xx_scale: float
    delta_eff: float
    max_residual_ratio: float
    zz_even_leak: float

    def to_dict(self) -> Dict:
        return {
            "zz_scale": self.zz_scale,
            "xx_scale": self.xx_scale,
            "delta_eff": self.delta_eff,
            "max_residual_ratio": self.max_residual_ratio,
            "zz_even_leak": self.zz_even_leak,
        }


def match_rabi(cm: CouplingMatrix) -> Tuple[CouplingMatrix, MatchReport]:
    """
    Два глобальных множителя, переводящие связи в цепочку Изинга с K = 1

    В повёрнутом базисе цепочка Изинга имеет на нечётных связях K·ZZ + δ·XX, на чётных
    (K + δ)·XX. Множитель ZZ делает медиану нечётных Jzz равной K = 1, множитель XX
    делает разность медиан чётных и нечётных Jxx равной K. Тогда δ_eff = медиана
    нечётных Jxx после масштабирования, то есть 1/(ρ − 1) при ρ = чётные/нечётные.
    Остатки: элементы с |i'−j'| > 1 в единицах K.

    Args:
        cm: Связи на активных сайтах, L ≥ 4

    Returns:
        Перенормированные связи и отчёт
    """
    if cm.n < 4:
        raise ValueError(f"Для чётных связей требуется L ≥ 4, получено {cm.n}")
    zz_odd = np.median(_bond_values(cm.Jzz, "odd"))
    xx_odd = np.median(_bond_values(cm.Jxx, "odd"))
    xx_even = np.median(_bond_values(cm.Jxx, "even"))
    if zz_odd == 0 or xx_odd == 0:
        raise NumericalError(f"Нулевая медиана нечётных связей: Jzz={zz_odd}, Jxx={xx_odd}")
    gap = xx_even - xx_odd
    if gap <= 0:
        logger.error(f"Чётные связи XX не сильнее нечётных: {xx_even:.6g} ≤ {xx_odd:.6g}")
        raise NumericalError("Связи XX не отображаются на цепочку Изинга с δ > 0")
    scaled = cm.scaled(1.0 / gap, 1.0 / zz_odd)

    delta_eff = float(xx_odd / gap)
    far = np.abs(np.subtract.outer(np.arange(cm.n), np.arange(cm.n))) > 1
    residuals: List[float] = [float(np.max(np.abs(m[far]))) for m in (scaled.Jzz, scaled.Jxx)]
    zz_even_leak = float(np.max(np.abs(_bond_values(scaled.Jzz, "even"))))
    report = MatchReport(
        zz_scale=float(1.0 / zz_odd),
        xx_scale=float(1.0 / gap),
        delta_eff=delta_eff,
        max_residual_ratio=max(residuals),
        zz_even_leak=zz_even_leak,
    )
    logger.info(
        f"Согласование Раби: δ_eff={delta_eff:.4f}, остатки {report.max_residual_ratio:.3e}, "
        f"утечка ZZ на чётных связях {zz_even_leak:.3e}"
    )
    return scaled, report
