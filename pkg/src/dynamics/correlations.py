"""
Бесконечно-температурные автокорреляции краевого спина
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from ..algebra.operators import pauli, spin
from ..algebra.pauli import PauliSum
from ..algebra.sparse import SparseOperator
from .propagation import DEFAULT_DRIFT_ABORT, DEFAULT_DT_FACTOR, ExactPropagator, evolve_rk4

logger = logging.getLogger(__name__)

EIGENSTATE_TOL = 1e-10
METHODS = ("rk4", "exact")
SPIN_HALF = 0.5


@dataclass
class CorrelationResult:
    """Ряд Γ(t) = s·⟨ψ(t)|S^D_i|ψ(t)⟩ одного начального состояния, s = sign/2"""

    times: np.ndarray
    gamma: np.ndarray
    sign: int
    max_drift: float = 0.0


@dataclass
class TTCSeries:
    """Ансамбль рядов и их статистика"""

    site: int
    axis: str
    times: np.ndarray
    series: np.ndarray
    mean: np.ndarray
    variance: np.ndarray

    @property
    def count(self) -> int:
        return self.series.shape[0]

    def head(self, N: int) -> "TTCSeries":
        """Статистика первых N рядов ансамбля"""
        if not 1 <= N <= self.count:
            raise ValueError(f"Подвыборка {N} вне ансамбля из {self.count} рядов")
        series = self.series[:N]
        variance = np.var(series, axis=0, ddof=1) if N > 1 else np.zeros(series.shape[1])
        return TTCSeries(self.site, self.axis, self.times, series, series.mean(axis=0), variance)


def check_uniform_grid(times) -> float:
    """
    Проверить равномерную сетку, начинающуюся с нуля

    Returns:
        Шаг сетки
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2:
        raise ValueError("Сетка времён должна содержать не менее двух точек")
    if times[0] != 0.0:
        raise ValueError(f"Сетка времён должна начинаться с 0, получено {times[0]}")
    steps = np.diff(times)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0) or steps[0] <= 0:
        raise ValueError("Сетка времён неравномерна")
    return float(steps[0])


def eigenvalue_sign(psi: np.ndarray, site: int, axis: str) -> int:
    """Собственное значение s = ±1 оператора σ^D_site на ψ или ошибка, если ψ не собственное"""
    L = int(round(math.log2(psi.size)))
    sigma = SparseOperator.from_pauli_sum(PauliSum.from_string(pauli(L, site, axis)), max_sites=L)
    image = sigma.apply(psi)
    s = float(np.vdot(psi, image).real)
    sign = 1 if s >= 0 else -1
    if np.linalg.norm(image - sign * psi) > EIGENSTATE_TOL:
        raise ValueError(f"Начальное состояние не является собственным для σ^{axis}_{site}")
    return sign


def rk4_step(
    H: SparseOperator,
    sample_dt: float,
    dt: Optional[float] = None,
    dt_factor: float = DEFAULT_DT_FACTOR,
) -> Tuple[float, int]:
    """
    Шаг РК4 и число подшагов на шаг выборки

    Без dt берётся наибольший делитель sample_dt не выше dt_factor/‖H‖.
    """
    if dt is None:
        bound = H.norm_bound()
        limit = dt_factor / bound if bound > 0 else dt_factor
        substeps = max(1, math.ceil(sample_dt / limit - 1e-9))
        return sample_dt / substeps, substeps
    substeps = int(round(sample_dt / dt))
    if substeps < 1 or abs(substeps * dt - sample_dt) > 1e-9 * sample_dt:
        raise ValueError(f"Шаг выборки {sample_dt} не кратен dt={dt}")
    return dt, substeps


def autocorrelation(
    H: SparseOperator,
    psi0,
    site: int,
    axis: str,
    times,
    method: str = "rk4",
    dt: Optional[float] = None,
    propagator: Optional[ExactPropagator] = None,
    dt_factor: float = DEFAULT_DT_FACTOR,
    drift_abort: float = DEFAULT_DRIFT_ABORT,
) -> CorrelationResult:
    """
    Автокорреляция Γ(t) = s⟨S^D_i(t)⟩ для собственного состояния σ^D_i

    s = ±1/2 собственное значение S^D_i, поэтому Γ(0) = 1/4.

    Args:
        H: Гамильтониан
        psi0: StateVector или массив амплитуд
        site: Узел i
        axis: Ось D
        times: Равномерная сетка выборки с t_0 = 0
        method: rk4 или exact
        dt: Шаг РК4; по умолчанию наибольший делитель шага выборки не выше dt_factor/‖H‖
        propagator: Готовый точный пропагатор (для method='exact')
        dt_factor: Доля обратной нормы для шага по умолчанию
        drift_abort: Порог дрейфа нормы

    Returns:
        Комплексный ряд Γ на сетке times
    """
    if method not in METHODS:
        raise ValueError(f"Неизвестный метод эволюции: {method}")
    psi = np.asarray(getattr(psi0, "amplitudes", psi0), dtype=complex)
    if psi.size != H.dim:
        raise ValueError(f"Размер состояния {psi.size} не совпадает с размерностью {H.dim}")
    times = np.asarray(times, dtype=float)
    sample_dt = check_uniform_grid(times)
    sign = eigenvalue_sign(psi, site, axis)
    spin_op = SparseOperator.from_pauli_sum(spin(H.L, site, axis), max_sites=H.L)

    if method == "exact":
        propagator = propagator or ExactPropagator(H)
        expectation = propagator.expectation_series(psi, spin_op, times)
        return CorrelationResult(times=times, gamma=SPIN_HALF * sign * expectation, sign=sign)

    dt, substeps = rk4_step(H, sample_dt, dt, dt_factor)
    trajectory = evolve_rk4(
        H,
        psi,
        dt,
        float(times[-1]),
        sample_every=substeps,
        observables={"spin": spin_op},
        store_states=False,
        drift_abort=drift_abort,
    )
    return CorrelationResult(
        times=trajectory.times,
        gamma=SPIN_HALF * sign * trajectory.observables["spin"],
        sign=sign,
        max_drift=trajectory.max_drift,
    )


def mean_and_variance(results: Sequence[CorrelationResult], site: int = 1, axis: str = "z") -> TTCSeries:
    """
    Выборочное среднее и несмещённая дисперсия по ансамблю

    При N = 1 дисперсия равна нулю.
    """
    if not results:
        raise ValueError("Пустой ансамбль")
    times = results[0].times
    for r in results[1:]:
        if r.times.shape != times.shape or not np.allclose(r.times, times, rtol=1e-12, atol=1e-12):
            raise ValueError("Сетки времён в ансамбле не совпадают")
    series = np.array([r.gamma for r in results])
    mean = series.mean(axis=0)
    if series.shape[0] > 1:
        variance = np.var(series, axis=0, ddof=1)
    else:
        variance = np.zeros(series.shape[1])
    return TTCSeries(site=site, axis=axis, times=times, series=series, mean=mean, variance=variance)


def run_ensemble(
    H: SparseOperator,
    states: Sequence,
    site: int,
    axis: str,
    times,
    workers: int = 1,
    show_progress: bool = False,
    method: str = "rk4",
    **kwargs,
) -> TTCSeries:
    """
    Автокорреляции для набора начальных состояний в пуле потоков

    Порядок результатов совпадает с порядком states, поэтому итог не зависит от workers.
    """
    propagator = ExactPropagator(H) if method == "exact" else None

    def task(state) -> CorrelationResult:
        return autocorrelation(H, state, site, axis, times, method=method, propagator=propagator, **kwargs)

    logger.info(f"Ансамбль: {len(states)} состояний, σ^{axis}_{site}, метод {method}, потоков {workers}")
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        iterator = pool.map(task, states)
        if show_progress:
            iterator = tqdm(iterator, total=len(states), desc=f"Γ^{axis}_{site}")
        results: List[CorrelationResult] = list(iterator)

    worst = max(r.max_drift for r in results)
    if worst > 0:
        logger.debug(f"Максимальный дрейф нормы по ансамблю {worst:.2e}")
    return mean_and_variance(results, site, axis)


def step_halving_deviation(
    H: SparseOperator,
    psi0,
    site: int,
    axis: str,
    times,
    reference: np.ndarray,
    dt: Optional[float] = None,
    dt_factor: float = DEFAULT_DT_FACTOR,
    drift_abort: float = DEFAULT_DRIFT_ABORT,
) -> float:
    """
    max_t |Γ_dt − Γ_dt/2| для одной траектории

    Args:
        H: Гамильтониан
        psi0: Начальное состояние
        site: Узел
        axis: Ось
        times: Сетка выборки
        reference: Ряд Γ, посчитанный с шагом dt
        dt: Шаг РК4 эталонного ряда (None: шаг по умолчанию)
        dt_factor: Доля обратной нормы для шага по умолчанию
        drift_abort: Порог дрейфа нормы

    Returns:
        Наибольшее отклонение по сетке
    """
    step, _ = rk4_step(H, check_uniform_grid(times), dt, dt_factor)
    halved = autocorrelation(H, psi0, site, axis, times, dt=step / 2.0, drift_abort=drift_abort)
    deviation = float(np.max(np.abs(halved.gamma - np.asarray(reference))))
    logger.debug(f"Проверка шага σ^{axis}_{site}: dt={step:.3e}, max|ΔΓ|={deviation:.2e}")
    return deviation


def ensemble_convergence(ttc: TTCSeries, N: int) -> float:
    """max_t |Γ̄_N − Γ̄_all| между первыми N рядами ансамбля и всем ансамблем"""
    return float(np.max(np.abs(ttc.head(N).mean - ttc.mean)))


def diagonal_ensemble(
    propagator: ExactPropagator,
    psi0,
    site: int,
    axis: str,
    tol: float = 1e-8,
) -> float:
    """
    Бесконечно-временной предел Γ_∞ = s Σ_E ⟨ψ0|P_E S^D_i P_E|ψ0⟩

    P_E — проекторы на вырожденные подпространства (уровни ближе tol объединяются).

    Args:
        propagator: Точный пропагатор с собственным базисом
        psi0: Собственное состояние σ^D_i
        site: Узел
        axis: Ось
        tol: Допуск вырождения

    Returns:
        Γ_∞
    """
    psi = np.asarray(getattr(psi0, "amplitudes", psi0), dtype=complex)
    sign = eigenvalue_sign(psi, site, axis)
    L = propagator.H.L
    spin_op = SparseOperator.from_pauli_sum(spin(L, site, axis), max_sites=L)
    energies, vectors = propagator.energies, propagator.vectors
    boundaries = np.concatenate([[0], np.nonzero(np.diff(energies) > tol)[0] + 1, [energies.size]])

    total = 0.0
    for start, stop in zip(boundaries[:-1], boundaries[1:]):
        block = vectors[:, start:stop]
        c = block.conj().T @ psi
        projected = block.conj().T @ spin_op.apply(block)
        total += float(np.vdot(c, projected @ c).real)
    return SPIN_HALF * sign * total
