"""
Построение гамильтонианов цепочки Китаева-Гейзенберга и их возмущений
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from ..algebra.operators import spin_bond
from ..algebra.pauli import PauliSum

logger = logging.getLogger(__name__)

PERTURBATIONS = ("none", "intra", "inter", "ising")
BOUNDARIES = ("open", "periodic")
PERTURBATION_NORMS = ("spin", "pauli")

# Поворот системы координат: X→Z, Y→X, Z→Y
ROTATION_TABLE = {1: 3, 2: 1, 3: 2}


@dataclass(frozen=True)
class ModelSpec:
    """
    Параметры модели

    Энергия измеряется в единицах sqrt(K²+J²) = 1, K = sinθ, J = cosθ.
    perturbation_norm='pauli' задаёт возмущение δ·σσ = 4δ·SS.
    """

    L: int
    theta: float = math.pi / 2
    delta: float = 0.0
    perturbation: str = "none"
    boundary: str = "open"
    rescaled: bool = False
    perturbation_norm: str = "spin"

    def __post_init__(self):
        if self.L < 2 or self.L % 2:
            raise ValueError(f"Длина цепочки должна быть чётной и не меньше 2: {self.L}")
        if self.perturbation not in PERTURBATIONS:
            raise ValueError(f"Неизвестный тип возмущения: {self.perturbation}")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"Неизвестное граничное условие: {self.boundary}")
        if self.perturbation_norm not in PERTURBATION_NORMS:
            raise ValueError(f"Неизвестная нормировка возмущения: {self.perturbation_norm}")
        if self.rescaled and self.spin_delta <= -1.0:
            raise ValueError(f"Перемасштабирование на (1+δ) невозможно при δ={self.delta}")

    @property
    def K(self) -> float:
        return math.sin(self.theta)

    @property
    def J(self) -> float:
        return math.cos(self.theta)

    @property
    def spin_delta(self) -> float:
        """Величина возмущения в нормировке спиновых операторов S = σ/2"""
        return 4.0 * self.delta if self.perturbation_norm == "pauli" else self.delta


def _bonds(L: int, start: int, step: int, periodic: bool) -> List[Tuple[int, int]]:
    """Связи (i, i+1) с i = start, start+step, ...; связь через край только для периодических"""
    bonds = []
    for i in range(start, L + 1, step):
        j = i + 1
        if j > L:
            if not periodic or L == 2:
                continue
            j = 1
        bonds.append((i, j))
    return bonds


def odd_bonds(L: int, periodic: bool = False) -> List[Tuple[int, int]]:
    """Связи внутри ячейки (2j−1, 2j)"""
    return _bonds(L, 1, 2, periodic)


def even_bonds(L: int, periodic: bool = False) -> List[Tuple[int, int]]:
    """Связи между ячейками (2j, 2j+1)"""
    return _bonds(L, 2, 2, periodic)


def all_bonds(L: int, periodic: bool = False) -> List[Tuple[int, int]]:
    return _bonds(L, 1, 1, periodic)


def build_perturbation(kind: str, delta: float, L: int, boundary: str = "open") -> PauliSum:
    """
    Возмущение δ·V в спиновой нормировке

    Args:
        kind: intra (XX внутри ячейки), inter (YY между ячейками), ising (YY на всех связях)
        delta: Величина возмущения
        L: Чётная длина цепочки
        boundary: open или periodic

    Returns:
        Сумма Паули
    """
    if L < 2 or L % 2:
        raise ValueError(f"Длина цепочки должна быть чётной: {L}")
    if kind not in PERTURBATIONS:
        raise ValueError(f"Неизвестный тип возмущения: {kind}")
    periodic = boundary == "periodic"
    result = PauliSum.zero(L)
    if kind == "none":
        return result
    if kind == "intra":
        bonds, axis = odd_bonds(L, periodic), "x"
    elif kind == "inter":
        bonds, axis = even_bonds(L, periodic), "y"
    else:
        bonds, axis = all_bonds(L, periodic), "y"
    for i, j in bonds:
        result = result + spin_bond(L, i, j, axis, delta)
    return result


def build_kh(spec: ModelSpec) -> PauliSum:
    """
    Гамильтониан Китаева-Гейзенберга с выбранным возмущением

    H = K Σ_j (S^x_{2j−1}S^x_{2j} + S^y_{2j}S^y_{2j+1}) + J Σ_i (S^x_iS^x_{i+1} + S^y_iS^y_{i+1}) + δV

    Args:
        spec: Параметры модели

    Returns:
        Эрмитова сумма Паули
    """
    L = spec.L
    periodic = spec.boundary == "periodic"
    K, J = spec.K, spec.J

    terms = {}

    def add(part: PauliSum):
        for letters, c in part.terms:
            terms[letters] = terms.get(letters, 0.0) + c

    for i, j in odd_bonds(L, periodic):
        add(spin_bond(L, i, j, "x", K))
    for i, j in even_bonds(L, periodic):
        add(spin_bond(L, i, j, "y", K))
    for i, j in all_bonds(L, periodic):
        add(spin_bond(L, i, j, "x", J))
        add(spin_bond(L, i, j, "y", J))
    add(build_perturbation(spec.perturbation, spec.spin_delta, L, spec.boundary))

    if spec.rescaled:
        factor = 1.0 / (1.0 + spec.spin_delta)
        terms = {letters: c * factor for letters, c in terms.items()}

    H = PauliSum(L, terms)
    logger.debug(
        f"Гамильтониан КГ: L={L}, θ={spec.theta:.6g}, δ={spec.delta}, "
        f"возмущение={spec.perturbation}, граница={spec.boundary}, слагаемых {len(H)}"
    )
    return H


def rotate_frame(p: PauliSum) -> PauliSum:
    """Подстановка X→Z, Y→X, Z→Y; трёхкратное применение возвращает исходное"""
    return p.map_letters(ROTATION_TABLE)


def build_tfim(n: int, K1: float, K2: float) -> PauliSum:
    """
    Поперечная модель Изинга H_I = Σ K₂ S^y_iS^y_{i+1} + K₁ S^x_i на n узлах, открытая цепочка

    Для Ĥ^inter_δ при θ=π/2 отображение на димеры даёт K₁ = 1/2, K₂ = 1+δ.
    """
    terms = {}
    for i in range(1, n + 1):
        letters = [0] * n
        letters[i - 1] = 1
        terms[tuple(letters)] = 0.5 * K1
    for i in range(1, n):
        for letters, c in spin_bond(n, i, i + 1, "y", K2).terms:
            terms[letters] = terms.get(letters, 0.0) + c
    return PauliSum(n, terms)


@dataclass(frozen=True)
class CouplingMatrix:
    """Матрицы связей Jxx и Jzz между активными узлами"""

    Jxx: np.ndarray
    Jzz: np.ndarray

    def __post_init__(self):
        Jxx = np.array(self.Jxx, dtype=float)
        Jzz = np.array(self.Jzz, dtype=float)
        for name, m in (("Jxx", Jxx), ("Jzz", Jzz)):
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError(f"{name} должна быть квадратной матрицей, форма {m.shape}")
            if not np.all(np.isfinite(m)):
                raise ValueError(f"{name} содержит нечисловые значения")
            if not np.allclose(m, m.T, atol=1e-12, rtol=0.0):
                raise ValueError(f"{name} несимметрична")
            if np.any(np.diag(m) != 0):
                raise ValueError(f"{name} имеет ненулевую диагональ")
        if Jxx.shape != Jzz.shape:
            raise ValueError(f"Размеры Jxx {Jxx.shape} и Jzz {Jzz.shape} не совпадают")
        Jxx.setflags(write=False)
        Jzz.setflags(write=False)
        object.__setattr__(self, "Jxx", Jxx)
        object.__setattr__(self, "Jzz", Jzz)

    @property
    def n(self) -> int:
        return self.Jxx.shape[0]

    def scaled(self, xx_factor: float, zz_factor: float) -> "CouplingMatrix":
        return CouplingMatrix(self.Jxx * xx_factor, self.Jzz * zz_factor)


def build_from_couplings(cm: CouplingMatrix) -> PauliSum:
    """
    Гамильтониан Σ_{i<j} Jzz_ij S^z_iS^z_j + Jxx_ij S^x_iS^x_j

    Args:
        cm: Матрица связей

    Returns:
        Эрмитова сумма Паули на cm.n узлах
    """
    n = cm.n
    if n < 2:
        raise ValueError(f"Требуется хотя бы два узла, получено {n}")
    terms = {}
    for i in range(n):
        for j in range(i + 1, n):
            for axis, matrix in (("x", cm.Jxx), ("z", cm.Jzz)):
                if matrix[i, j] != 0:
                    for letters, c in spin_bond(n, i + 1, j + 1, axis, float(matrix[i, j])).terms:
                        terms[letters] = c
    return PauliSum(n, terms)
