"""
Спектральный анализ: спектры, мультиплеты, щели, запутанность, структурный фактор
"""
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from ..algebra.pauli import PauliString, PauliSum, axis_letter
from ..algebra.sparse import SparseOperator
from ..core.errors import NumericalError, ResourceCapError

logger = logging.getLogger(__name__)

DEFAULT_DENSE_CAP = 4096
DEFAULT_DEGENERACY_TOL = 1e-8
RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class Multiplet:
    """Вырожденный уровень"""

    energy: float
    multiplicity: int


@dataclass
class SpectrumResult:
    """Собственные значения по возрастанию, мультиплеты и (опционально) векторы"""

    eigenvalues: np.ndarray
    multiplets: List[Multiplet]
    eigenvectors: Optional[np.ndarray] = None
    partial: bool = False
    residuals: List[float] = field(default_factory=list)

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])

    def multiplet_vectors(self, index: int = 0) -> np.ndarray:
        """Столбцы собственных векторов мультиплета с номером index"""
        if self.eigenvectors is None:
            raise ValueError("Собственные векторы не вычислялись")
        start = sum(m.multiplicity for m in self.multiplets[:index])
        stop = start + self.multiplets[index].multiplicity
        return self.eigenvectors[:, start:stop]


@dataclass(frozen=True)
class Gaps:
    """Щель нулевой моды Δ_L и повторяющаяся щель возмущения Δ_δ"""

    delta_L: float
    delta_delta: float
    delta_delta_count: int = 0


def _hermitian_matrix(H: SparseOperator):
    csr = H.csr
    if csr.nnz and np.max(np.abs(csr.data.imag)) == 0.0:
        return csr.real
    return csr


def full_spectrum(
    H: SparseOperator,
    dense_cap: int = DEFAULT_DENSE_CAP,
    tol: float = DEFAULT_DEGENERACY_TOL,
    with_vectors: bool = False,
) -> SpectrumResult:
    """
    Полная плотная диагонализация

    Args:
        H: Эрмитов оператор
        dense_cap: Максимальная размерность плотного решения
        tol: Допуск кластеризации мультиплетов
        with_vectors: Вычислять ли собственные векторы

    Returns:
        Все 2^L собственных значений по возрастанию
    """
    if H.dim > dense_cap:
        raise ResourceCapError(
            f"Размерность {H.dim} превышает предел плотной диагонализации {dense_cap}",
            key="spectrum.dense_cap",
        )
    matrix = _hermitian_matrix(H).toarray()
    logger.debug(f"Плотная диагонализация, размерность {H.dim}")
    if with_vectors:
        evals, evecs = scipy.linalg.eigh(matrix)
    else:
        evals, evecs = scipy.linalg.eigh(matrix, eigvals_only=True), None
    return SpectrumResult(
        eigenvalues=np.asarray(evals, dtype=float),
        multiplets=degeneracy_structure(evals, tol),
        eigenvectors=evecs,
    )


def lowest_k(
    H: SparseOperator,
    k: int,
    seed: int = 0,
    tol: float = 1e-12,
    maxiter: Optional[int] = None,
    degeneracy_tol: float = DEFAULT_DEGENERACY_TOL,
) -> SpectrumResult:
    """
    k нижних собственных пар итерационным методом Ланцоша (ARPACK)

    Args:
        H: Эрмитов оператор
        k: Число пар, k < 2^L
        seed: Зерно стартового вектора
        tol: Точность ARPACK
        maxiter: Предел итераций
        degeneracy_tol: Допуск кластеризации мультиплетов

    Returns:
        Частичный спектр с векторами
    """
    if k < 1 or k >= H.dim:
        raise ValueError(f"k={k} должно лежать в диапазоне 1..{H.dim - 1}")
    matrix = _hermitian_matrix(H)
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(H.dim)
    if np.iscomplexobj(matrix.data):
        v0 = v0 + 1j * rng.standard_normal(H.dim)
    ncv = min(H.dim, max(2 * k + 1, 20))
    try:
        evals, evecs = eigsh(matrix, k=k, which="SA", v0=v0, tol=tol, maxiter=maxiter, ncv=ncv)
    except ArpackNoConvergence as e:
        logger.error(f"ARPACK не сошёлся: k={k}, размерность {H.dim}")
        raise NumericalError(f"Итерационный решатель не сошёлся: {e}") from e

    order = np.argsort(evals)
    evals, evecs = evals[order], evecs[:, order]
    residuals = [
        float(np.linalg.norm(H.apply(evecs[:, n]) - evals[n] * evecs[:, n])) for n in range(k)
    ]
    worst = max(residuals)
    if worst > RESIDUAL_TOL:
        raise NumericalError(f"Невязка собственной пары {worst:.3e} превышает {RESIDUAL_TOL}")
    logger.debug(f"Ланцош: k={k}, максимальная невязка {worst:.2e}")
    return SpectrumResult(
        eigenvalues=np.asarray(evals, dtype=float),
        multiplets=degeneracy_structure(evals, degeneracy_tol),
        eigenvectors=evecs,
        partial=True,
        residuals=residuals,
    )


def degeneracy_structure(evals, tol: float = DEFAULT_DEGENERACY_TOL) -> List[Multiplet]:
    """
    Кластеризация отсортированных уровней: новый мультиплет при зазоре > tol

    Если часть зазоров попадает в (tol, 100·tol], порог заменяется адаптивным:
    разрез проходит по наибольшему относительному скачку между соседними по
    величине зазорами. Замена порога записывается в журнал.

    Args:
        evals: Собственные значения по возрастанию
        tol: Абсолютный допуск

    Returns:
        Список мультиплетов (средняя энергия, кратность)
    """
    values = np.asarray(evals, dtype=float)
    if values.size == 0:
        return []
    if np.any(np.diff(values) < -tol):
        raise ValueError("Собственные значения должны быть отсортированы")
    spacings = np.diff(values)
    threshold = tol
    ambiguous = spacings[(spacings > tol) & (spacings <= 100 * tol)]
    if ambiguous.size:
        threshold = _adaptive_threshold(spacings, tol, np.max(np.abs(values)))
        logger.warning(
            f"Неоднозначная кластеризация: {ambiguous.size} зазоров в ({tol:.1e}, {100 * tol:.1e}], "
            f"адаптивный порог {threshold:.3e}"
        )
    boundaries = np.nonzero(spacings > threshold)[0] + 1
    groups = np.split(values, boundaries)
    return [Multiplet(float(np.mean(g)), int(g.size)) for g in groups]


def _adaptive_threshold(spacings: np.ndarray, tol: float, scale: float) -> float:
    """Порог в наибольшем относительном скачке отсортированных зазоров (не ниже tol)"""
    floor = np.finfo(float).eps * max(1.0, scale)
    ordered = np.maximum(np.sort(spacings), floor)
    ratios = ordered[1:] / ordered[:-1]
    # Разрез только между зазором из полосы (≤ 100·tol) и зазором выше tol
    ratios[(ordered[1:] <= tol) | (ordered[:-1] > 100 * tol)] = 0.0
    if ratios.size == 0 or ratios.max() <= 1.0:
        return tol
    k = int(np.argmax(ratios))
    return max(tol, float(np.sqrt(ordered[k] * ordered[k + 1])))


def _cluster_values(values: np.ndarray, tol: float) -> List[Tuple[float, int]]:
    if values.size == 0:
        return []
    values = np.sort(values)
    groups = np.split(values, np.nonzero(np.diff(values) > tol)[0] + 1)
    return [(float(np.mean(g)), int(g.size)) for g in groups]


def gaps(spectrum: SpectrumResult, spacing_tol: float = 1e-6) -> Gaps:
    """
    Щели Δ_L и Δ_δ

    Δ_L — расстояние между двумя нижними мультиплетами. Δ_δ — самый частый
    положительный интервал между различными уровнями спектра.

    Args:
        spectrum: Результат диагонализации
        spacing_tol: Допуск группировки интервалов

    Returns:
        Пара щелей
    """
    levels = np.array([m.energy for m in spectrum.multiplets])
    if levels.size < 2:
        raise ValueError("Для щелей требуется не менее двух мультиплетов")
    delta_L = float(levels[1] - levels[0])

    diffs = (levels[None, :] - levels[:, None])[np.triu_indices(levels.size, k=1)]
    clusters = _cluster_values(diffs[diffs > spacing_tol], spacing_tol)
    # Частота по убыванию, при равенстве меньший интервал
    value, count = min(clusters, key=lambda item: (-item[1], item[0]))
    logger.debug(f"Щели: Δ_L={delta_L:.6g}, Δ_δ={value:.6g} (повторов {count})")
    return Gaps(delta_L=delta_L, delta_delta=value, delta_delta_count=count)


def _as_array(state) -> np.ndarray:
    return np.asarray(getattr(state, "amplitudes", state), dtype=complex)


def entanglement_entropy(state, l: int, L: Optional[int] = None) -> float:
    """
    Энтропия фон Неймана подсистемы узлов 1..l (натуральный логарифм)

    Args:
        state: StateVector или массив амплитуд
        l: Размер подсистемы, 1 ≤ l < L
        L: Длина цепочки (по умолчанию из размера вектора)
    """
    psi = _as_array(state)
    L = L if L is not None else int(round(np.log2(psi.size)))
    if not 1 <= l < L:
        raise ValueError(f"Размер подсистемы l={l} вне диапазона 1..{L - 1}")
    # Узлы 1..l занимают младшие биты индекса, то есть столбцы
    schmidt = scipy.linalg.svdvals(psi.reshape(1 << (L - l), 1 << l))
    p = schmidt ** 2
    p = p[p > 1e-300]
    return float(-np.sum(p * np.log(p)))


def entanglement_curve(state, L: Optional[int] = None) -> np.ndarray:
    """S(l) для l = 1..L−1"""
    psi = _as_array(state)
    L = L if L is not None else int(round(np.log2(psi.size)))
    return np.array([entanglement_entropy(psi, l, L) for l in range(1, L)])


def _pauli_images(psi: np.ndarray, L: int, axis: str) -> List[np.ndarray]:
    code = axis_letter(axis)
    return [
        SparseOperator.from_pauli_sum(PauliSum.from_string(PauliString.single(L, k, code)), max_sites=L).apply(psi)
        for k in range(1, L + 1)
    ]


def spin_profile(state, axis: str, L: Optional[int] = None) -> np.ndarray:
    """Профиль ⟨S^D_i⟩ по всем узлам"""
    psi = _as_array(state)
    L = L if L is not None else int(round(np.log2(psi.size)))
    return np.array([0.5 * np.vdot(psi, v).real for v in _pauli_images(psi, L, axis)])


def correlation_matrix(state, axis: str, L: Optional[int] = None) -> np.ndarray:
    """C_kl = ⟨S^D_k S^D_l⟩"""
    psi = _as_array(state)
    L = L if L is not None else int(round(np.log2(psi.size)))
    images = np.array(_pauli_images(psi, L, axis))
    return 0.25 * (images.conj() @ images.T)


def structure_factor(state, axis: str, L: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Статический структурный фактор P^D(q) = (2/L) Σ_{k,l} ⟨S^D_kS^D_l⟩ e^{−iq(k−l)}

    Args:
        state: Нормированное состояние
        axis: Ось x, y или z
        L: Длина цепочки

    Returns:
        Сетка q = 2πm/L и значения P(q)
    """
    psi = _as_array(state)
    L = L if L is not None else int(round(np.log2(psi.size)))
    C = correlation_matrix(psi, axis, L)
    q = 2.0 * np.pi * np.arange(L) / L
    sites = np.arange(1, L + 1)
    phases = np.exp(1j * np.outer(q, sites))
    values = (2.0 / L) * np.einsum("qk,kl,ql->q", phases.conj(), C, phases)
    if np.max(np.abs(values.imag)) > 1e-10:
        logger.warning(f"Мнимая часть структурного фактора {np.max(np.abs(values.imag)):.2e}")
    return q, values.real


def multiplet_average(vectors: np.ndarray, func) -> np.ndarray:
    """Среднее диагностики func(state) по столбцам вырожденного мультиплета"""
    results = [np.asarray(func(vectors[:, n])) for n in range(vectors.shape[1])]
    return np.mean(results, axis=0)


def level_counts(spectrum: SpectrumResult) -> Counter:
    """Счётчик кратностей мультиплетов"""
    return Counter(m.multiplicity for m in spectrum.multiplets)
