"""
Построение сильных нулевых мод в представлении строк Паули

Моды A и B антикоммутируют с G^z, мода C — с G^x. Каждый член суммы — эрмитова
строка Паули, все члены попарно антикоммутируют, поэтому Ψ² = Σ c_j².
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from .pauli import PauliString, PauliSum

logger = logging.getLogger(__name__)

ZERO_MODE_KINDS = ("A", "B", "C")

# Буквы: 0 = I, 1 = X, 2 = Y, 3 = Z
_I, _X, _Y, _Z = 0, 1, 2, 3


def _string(L: int, assignments: List[Tuple[int, int]]) -> Tuple[int, ...]:
    letters = [_I] * L
    for site, code in assignments:
        letters[site - 1] = code
    return tuple(letters)


def _z_run(first: int, last: int) -> List[Tuple[int, int]]:
    return [(k, _Z) for k in range(first, last + 1)]


def even_branch(kind: str, L: int, x: float) -> List[Tuple[float, Tuple[int, ...]]]:
    """
    Чётная ветвь моды: пары (относительный вес, буквы), j = 1..L/2

    Args:
        kind: Тип моды A, B или C
        L: Чётная длина цепочки
        x: Отношение связей 1/(1+δ)
    """
    terms = []
    for j in range(1, L // 2 + 1):
        site = 2 * j - 1
        if kind == "A":
            weight = (-x) ** (j - 1)
            letters = _string(L, _z_run(1, 2 * j - 2) + [(site, _Y)])
        elif j == 1:
            weight = 1.0
            letters = _string(L, [(2, _Y)] if kind == "B" else [(1, _Z)])
        else:
            weight = (-1) ** j * x ** (j - 1)
            prefix = [(1, _X), (2, _X)] + _z_run(3, 2 * j - 2) if kind == "B" else [(1, _Y)] + _z_run(2, 2 * j - 2)
            letters = _string(L, prefix + [(site, _Y)])
        terms.append((weight, letters))
    return terms


def odd_branch(kind: str, L: int, M: float) -> List[Tuple[float, Tuple[int, ...]]]:
    """Нечётная ветвь с весами M^{j−1}; у моды C нечётной ветви нет"""
    if kind == "A":
        return [
            (M ** (j - 1), _string(L, _z_run(1, 2 * j - 1) + [(2 * j, _Y)]))
            for j in range(1, L // 2 + 1)
        ]
    if kind == "B":
        return [
            (M ** (j - 1), _string(L, _z_run(1, 2 * j) + [(2 * j + 1, _X)]))
            for j in range(1, L // 2)
        ]
    return []


@dataclass(frozen=True)
class ZeroModeSpec:
    """Параметры нулевой моды и её нормировка на конечном L"""

    kind: str
    L: int
    delta: float
    M: float = 0.0
    odd_weight: Optional[float] = None
    N_e: float = field(init=False)
    N_o: float = field(init=False)

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        if kind not in ZERO_MODE_KINDS:
            raise ValueError(f"Неизвестный тип нулевой моды: {self.kind}")
        if self.L < 2 or self.L % 2:
            raise ValueError(f"Длина цепочки должна быть чётной и не меньше 2: {self.L}")
        if self.delta <= -1.0:
            raise ValueError(f"δ={self.delta} ≤ −1: геометрические веса расходятся")
        if abs(self.M) >= 1.0:
            raise ValueError(f"|M| должно быть меньше 1: {self.M}")

        n_odd = len(odd_branch(kind, self.L, self.M))
        weight = self.odd_weight
        if weight is None:
            weight = 0.0 if self.M == 0 or n_odd == 0 else 0.5
        if not 0.0 <= weight <= 1.0:
            raise ValueError(f"Доля нечётной ветви вне [0, 1]: {weight}")
        if weight > 0 and n_odd == 0:
            raise ValueError(f"Мода {kind} при L={self.L} не имеет нечётной ветви")
        if kind == "C" and self.M != 0:
            raise ValueError("Мода C не допускает нечётной ветви: M должно быть 0")

        # Конечные геометрические суммы вместо предела L → ∞
        x = self.x
        s_even = sum(x ** (2 * (j - 1)) for j in range(1, self.L // 2 + 1))
        s_odd = sum(self.M ** (2 * (j - 1)) for j in range(1, n_odd + 1))
        object.__setattr__(self, "odd_weight", weight)
        object.__setattr__(self, "N_e", math.sqrt((1.0 - weight) / s_even))
        object.__setattr__(self, "N_o", math.sqrt(weight / s_odd) if weight > 0 else 0.0)

    @property
    def x(self) -> float:
        """Отношение 1/(1+δ)"""
        return 1.0 / (1.0 + self.delta)

    @property
    def symmetry_axis(self) -> str:
        """Ось глобального переворота, с которым мода антикоммутирует"""
        return "x" if self.kind == "C" else "z"

    def residual_magnitude(self) -> float:
        """Модуль остатка [Ĥ^inter, Ψ] в нормировке Паули: 2 N_e (1+δ)^{−L/2}"""
        return 2.0 * self.N_e * self.x ** (self.L // 2)


def build_zero_mode(spec: ZeroModeSpec) -> PauliSum:
    """
    Построить нулевую моду Ψ как сумму Паули

    Args:
        spec: Параметры моды

    Returns:
        Эрмитова сумма с Ψ² = 1
    """
    terms = {}
    for weight, letters in even_branch(spec.kind, spec.L, spec.x):
        terms[letters] = spec.N_e * weight
    if spec.N_o > 0:
        for weight, letters in odd_branch(spec.kind, spec.L, spec.M):
            terms[letters] = spec.N_o * weight
    psi = PauliSum(spec.L, terms)
    logger.debug(
        f"Нулевая мода {spec.kind}: L={spec.L}, δ={spec.delta}, "
        f"N_e={spec.N_e:.6g}, N_o={spec.N_o:.6g}, слагаемых {len(psi)}"
    )
    return psi


def branch_strings(spec: ZeroModeSpec) -> List[PauliString]:
    """Все строки моды, включая нечётную ветвь при N_o > 0"""
    strings = [PauliString(letters) for _, letters in even_branch(spec.kind, spec.L, spec.x)]
    if spec.N_o > 0:
        strings += [PauliString(letters) for _, letters in odd_branch(spec.kind, spec.L, spec.M)]
    return strings
