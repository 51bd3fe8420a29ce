"""
Начальные состояния: нормированные векторы и случайные произведения собственных состояний σ^D
"""
import logging
from dataclasses import dataclass
from functools import reduce
from typing import List, Optional, Tuple

import numpy as np

from ..algebra.pauli import AXES

logger = logging.getLogger(__name__)

NORM_TOL = 1e-10

# Собственные векторы σ^D с собственными значениями +1 и −1
_SQ2 = 1.0 / np.sqrt(2.0)
_EIGENVECTORS = {
    "x": {1: np.array([_SQ2, _SQ2], dtype=complex), -1: np.array([_SQ2, -_SQ2], dtype=complex)},
    "y": {1: np.array([_SQ2, 1j * _SQ2]), -1: np.array([_SQ2, -1j * _SQ2])},
    "z": {1: np.array([1.0, 0.0], dtype=complex), -1: np.array([0.0, 1.0], dtype=complex)},
}


@dataclass
class StateVector:
    """Нормированный вектор амплитуд на 2^L состояниях"""

    L: int
    amplitudes: np.ndarray
    signs: Optional[Tuple[int, ...]] = None
    axis: Optional[str] = None

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (1 << self.L,):
            raise ValueError(f"Ожидался вектор длины {1 << self.L}, получено {self.amplitudes.shape}")
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"Состояние не нормировано: ‖ψ‖ = {norm:.12g}")

    @property
    def dim(self) -> int:
        return 1 << self.L

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def product_state(axis: str, signs) -> StateVector:
    """
    Произведение собственных состояний σ^D_i с собственными значениями signs[i−1]

    Args:
        axis: Ось x, y или z
        signs: Последовательность ±1 длины L, signs[0] относится к узлу 1

    Returns:
        Нормированное состояние
    """
    axis = axis.lower()
    if axis not in AXES:
        raise ValueError(f"Неизвестная ось: {axis}")
    signs = tuple(int(s) for s in signs)
    if not signs or any(s not in (1, -1) for s in signs):
        raise ValueError(f"Знаки должны быть ±1: {signs}")
    # Узел 1 соответствует младшему биту, поэтому его множитель идёт последним в кронекеровом произведении
    factors = [_EIGENVECTORS[axis][s] for s in reversed(signs)]
    amplitudes = reduce(np.kron, factors)
    return StateVector(L=len(signs), amplitudes=amplitudes, signs=signs, axis=axis)


def state_rng(seed: int, index: int) -> np.random.Generator:
    """Независимый поток Philox для состояния с номером index"""
    if seed < 0 or index < 0:
        raise ValueError(f"Зерно и номер должны быть неотрицательны: {seed}, {index}")
    return np.random.Generator(np.random.Philox(key=np.array([seed, index], dtype=np.uint64)))


def sample_product_states(
    axis: str,
    L: int,
    N: int,
    seed: int,
    fixed_edge: Optional[int] = None,
) -> List[StateVector]:
    """
    Выборка N случайных произведений собственных состояний σ^D

    Знаки каждого узла равновероятны и независимы; состояние с номером n зависит
    только от (seed, n), поэтому выборка не меняется при параллельном вычислении.

    Args:
        axis: Ось x, y или z
        L: Длина цепочки
        N: Размер выборки
        seed: Зерно
        fixed_edge: Если задан (±1), знак узла 1 фиксирован

    Returns:
        Список состояний
    """
    if N < 1:
        raise ValueError(f"Размер выборки должен быть положительным: {N}")
    if L < 1:
        raise ValueError(f"Длина цепочки должна быть положительной: {L}")
    if fixed_edge not in (None, 1, -1):
        raise ValueError(f"Фиксированный знак края должен быть ±1: {fixed_edge}")
    states = []
    for index in range(N):
        signs = state_rng(seed, index).integers(0, 2, size=L) * 2 - 1
        if fixed_edge is not None:
            signs[0] = fixed_edge
        states.append(product_state(axis, signs))
    logger.debug(f"Выборка {N} состояний по оси {axis}, L={L}, seed={seed}")
    return states
