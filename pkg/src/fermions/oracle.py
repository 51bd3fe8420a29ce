"""
Свободно-фермионный оракул для открытой цепочки через преобразование Йордана-Вигнера

Майорановские операторы a_i = (∏_{k<i} σ^z_k)σ^x_i, b_i = (∏_{k<i} σ^z_k)σ^y_i.
Связи σ^x_iσ^x_{i+1} = −i b_i a_{i+1} и σ^y_iσ^y_{i+1} = i a_i b_{i+1} разбивают
гамильтониан на две независимые цепочки Китаева:
  A: b_1, a_2, b_3, a_4, ... (XX на нечётных связях, YY на чётных),
  B: a_1, b_2, a_3, b_4, ... (YY на нечётных связях, XX на чётных).
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

logger = logging.getLogger(__name__)

SUPPORTED_PERTURBATIONS = ("none", "intra", "inter")


@dataclass
class BdgSystem:
    """Квадратичная майорановская форма открытой цепочки"""

    label: str
    couplings: np.ndarray
    energies: np.ndarray = field(init=False)
    offset: float = field(init=False)

    def __post_init__(self):
        self.couplings = np.asarray(self.couplings, dtype=float)
        if self.couplings.size == 0:
            self.energies = np.zeros(0)
        else:
            evals = scipy.linalg.eigvalsh(self.bdg_matrix())
            # Спектр iA симметричен: ±ε_p; берём n неотрицательных
            self.energies = np.sort(np.abs(evals[evals.size // 2:]))
        self.offset = -0.5 * float(np.sum(self.energies))

    @property
    def n(self) -> int:
        """Число фермионных мод"""
        return (self.couplings.size + 1) // 2

    def majorana_matrix(self) -> np.ndarray:
        """Вещественная антисимметричная A: H = (i/4) Σ A_mn μ_m μ_n"""
        size = self.couplings.size + 1
        A = np.zeros((size, size))
        for m, kappa in enumerate(self.couplings):
            A[m, m + 1] = 0.5 * kappa
            A[m + 1, m] = -0.5 * kappa
        return A

    def bdg_matrix(self) -> np.ndarray:
        """Эрмитова матрица iA размера 2n×2n с частично-дырочной симметрией"""
        return 1j * self.majorana_matrix()


def chain_couplings(L: int, delta: float, perturbation: str, theta: float = math.pi / 2) -> Tuple[np.ndarray, np.ndarray]:
    """
    Связи κ_m цепочек A и B для m = 1..L−1

    Args:
        L: Чётная длина спиновой цепочки
        delta: Возмущение в спиновой нормировке
        perturbation: none, intra или inter
        theta: Угол модели, K = sinθ, J = cosθ

    Returns:
        (связи A, связи B)
    """
    if L < 2 or L % 2:
        raise ValueError(f"Длина цепочки должна быть чётной: {L}")
    if perturbation not in SUPPORTED_PERTURBATIONS:
        raise ValueError(
            f"Возмущение '{perturbation}' не отображается на цепочку Китаева: "
            "член S^yS^y на всех связях связывает майорановские операторы обеих цепочек "
            "внутри ячеек и не сводится к сдвигу K₁/K₂"
        )
    K, J = math.sin(theta), math.cos(theta)
    intra = delta if perturbation == "intra" else 0.0
    inter = delta if perturbation == "inter" else 0.0
    bonds = np.arange(1, L)
    odd = bonds % 2 == 1
    chain_a = np.where(odd, K + J + intra, K + J + inter)
    chain_b = np.full(L - 1, J)
    return chain_a, chain_b


def build_bdg(L: int, delta: float, perturbation: str = "inter", theta: float = math.pi / 2) -> Tuple[BdgSystem, BdgSystem]:
    """
    Две цепочки Китаева A и B для открытой спиновой цепочки

    Внутри ячейки связь цепочки A играет роль K₁, между ячейками — K₂.

    Args:
        L: Чётная длина
        delta: Возмущение в спиновой нормировке
        perturbation: none, intra или inter
        theta: Угол модели (по умолчанию π/2, цепочка B без связей)

    Returns:
        Пара систем (A, B)
    """
    chain_a, chain_b = chain_couplings(L, delta, perturbation, theta)
    a = BdgSystem("A", chain_a)
    b = BdgSystem("B", chain_b)
    logger.debug(
        f"Оракул: L={L}, δ={delta}, {perturbation}; "
        f"min ε_A={a.energies[0]:.3e}, min ε_B={b.energies[0]:.3e}"
    )
    return a, b


def many_body_spectrum(systems: Iterable[BdgSystem], trace_per_state: Optional[float] = 0.0) -> np.ndarray:
    """
    Многочастичный спектр по всем заполнениям мод

    E = E_0 + Σ_p ε_p n_p; E_0 подбирается так, чтобы среднее по спектру совпало
    со следом спинового гамильтониана, делённым на размерность.

    Args:
        systems: Набор систем
        trace_per_state: Tr H / 2^L; None — взять сумму собственных смещений систем

    Returns:
        Отсортированный массив энергий
    """
    systems = list(systems)
    energies = np.concatenate([s.energies for s in systems]) if systems else np.zeros(0)
    levels = np.zeros(1)
    for eps in energies:
        levels = np.concatenate([levels, levels + eps])
    if trace_per_state is None:
        offset = sum(s.offset for s in systems)
    else:
        offset = trace_per_state - float(np.mean(levels))
    return np.sort(levels + offset)


@dataclass(frozen=True)
class SpectrumComparison:
    """Итог сравнения двух спектров"""

    count: int
    max_dev: float
    tol: float
    passed: bool

    def to_dict(self, **context) -> Dict:
        report = dict(context)
        report.update({"count": self.count, "max_dev": self.max_dev, "tol": self.tol, "pass": self.passed})
        return report


def compare_spectra(a: Sequence[float], b: Sequence[float], tol: float = 1e-8, truncate: bool = True) -> SpectrumComparison:
    """
    Сравнение мультимножеств по отсортированным значениям

    Args:
        a: Первый спектр
        b: Второй спектр
        tol: Допуск
        truncate: Сравнивать нижние min(|a|, |b|) значений

    Returns:
        Максимальное отклонение и вердикт
    """
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size != b.size and not truncate:
        raise ValueError(f"Разные мощности спектров: {a.size} и {b.size}")
    count = min(a.size, b.size)
    max_dev = float(np.max(np.abs(a[:count] - b[:count]))) if count else 0.0
    return SpectrumComparison(count=count, max_dev=max_dev, tol=tol, passed=max_dev <= tol)


def majorana_decay_ratios(n_values: Sequence[int], delta: float) -> np.ndarray:
    """Отношения ε_min(n+1)/ε_min(n) нижней энергии цепочки A при возмущении inter"""
    lowest = [build_bdg(2 * n, delta, "inter")[0].energies[0] for n in n_values]
    return np.array([b / a for a, b in zip(lowest, lowest[1:])])
