"""
Поперечные колебательные моды кристалла
"""
import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ..core.errors import NumericalError
from .crystal import IonCrystal, TrapConfig, hessian

logger = logging.getLogger(__name__)

_AXIS_INDEX = {"x": 0, "y": 1, "z": 2}
ORTHONORMALITY_TOL = 1e-10


@dataclass
class ModeData:
    """Частоты ω_p (в единицах ω_z, по убыванию) и векторы M[i, p] одной ветви"""

    branch: str
    frequencies: np.ndarray
    eigenvectors: np.ndarray

    @property
    def count(self) -> int:
        return self.frequencies.size

    def band(self):
        """Границы полосы (ω_min, ω_max)"""
        return float(self.frequencies.min()), float(self.frequencies.max())


def transverse_modes(crystal: IonCrystal, trap: TrapConfig, branch: str = "y") -> ModeData:
    """
    Диагонализация блока гессиана по смещениям вдоль branch

    Блок по одной оси является точной матрицей мод, если кристалл плоский
    и перпендикулярен этой оси.

    Args:
        crystal: Равновесный кристалл
        trap: Ловушка
        branch: Ось смещений

    Returns:
        Частоты по убыванию и ортонормированные векторы
    """
    if branch not in _AXIS_INDEX:
        raise ValueError(f"Неизвестная ветвь мод: {branch}")
    axis = _AXIS_INDEX[branch]
    if branch == "y" and not crystal.is_planar():
        logger.warning("Кристалл не плоский: y-ветвь связана с x и z")
    full = hessian(crystal.positions.ravel(), trap.stiffness)
    block = full[axis::3, axis::3]
    evals, evecs = scipy.linalg.eigh(block)
    if evals[0] <= 0:
        logger.error(f"Неустойчивая мода ветви {branch}: λ_min = {evals[0]:.3e}")
        raise NumericalError(f"Неположительное собственное значение {evals[0]:.3e}: кристалл неустойчив")

    order = np.argsort(evals)[::-1]
    frequencies = np.sqrt(evals[order])
    vectors = evecs[:, order]
    # Знак: наибольшая по модулю компонента положительна
    pivots = np.argmax(np.abs(vectors), axis=0)
    vectors = vectors * np.sign(vectors[pivots, np.arange(vectors.shape[1])])

    gram = vectors.T @ vectors
    deviation = float(np.max(np.abs(gram - np.eye(gram.shape[0]))))
    if deviation > ORTHONORMALITY_TOL:
        raise NumericalError(f"Векторы мод не ортонормированы: отклонение {deviation:.2e}")
    logger.debug(f"Ветвь {branch}: полоса [{frequencies[-1]:.6g}, {frequencies[0]:.6g}] ω_z")
    return ModeData(branch=branch, frequencies=frequencies, eigenvectors=vectors)
