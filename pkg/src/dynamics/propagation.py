"""
Эволюция во времени: явный Рунге-Кутта 4-го порядка и точная эволюция в собственном базисе
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional

import numpy as np
import scipy.linalg

from ..algebra.sparse import SparseOperator
from ..core.errors import NumericalError, ResourceCapError

logger = logging.getLogger(__name__)

DEFAULT_DRIFT_ABORT = 1e-4
DEFAULT_DT_FACTOR = 0.1
_GRID_TOL = 1e-9


@dataclass
class Trajectory:
    """Результат эволюции на сетке выборки"""

    times: np.ndarray
    states: Optional[np.ndarray] = None
    observables: Dict[str, np.ndarray] = field(default_factory=dict)
    max_drift: float = 0.0
    steps: int = 0


def default_dt(H: SparseOperator, T: float, factor: float = DEFAULT_DT_FACTOR) -> float:
    """
    Наибольший шаг dt ≤ factor/‖H‖, укладывающийся в T целое число раз

    Args:
        H: Гамильтониан
        T: Полное время
        factor: Доля обратной оценки нормы

    Returns:
        Шаг интегрирования
    """
    if T <= 0:
        raise ValueError(f"Полное время должно быть положительным: {T}")
    bound = H.norm_bound()
    limit = factor / bound if bound > 0 else factor
    return T / math.ceil(T / limit - _GRID_TOL)


def _step_count(T: float, dt: float) -> int:
    if dt <= 0 or T <= 0:
        raise ValueError(f"Шаг и время должны быть положительны: dt={dt}, T={T}")
    steps = int(round(T / dt))
    if steps < 1 or abs(steps * dt - T) > _GRID_TOL * max(T, 1.0):
        raise ValueError(f"T={T} не делится на dt={dt} нацело")
    return steps


def evolve_rk4(
    H: SparseOperator,
    psi0: np.ndarray,
    dt: float,
    T: float,
    sample_every: int = 1,
    observables: Optional[Mapping[str, SparseOperator]] = None,
    store_states: bool = True,
    drift_abort: float = DEFAULT_DRIFT_ABORT,
) -> Trajectory:
    """
    Интегрирование i dψ/dt = Hψ классическим методом РК4

    Дрейф нормы |‖ψ(t)‖ − 1| проверяется в каждой точке выборки.

    Args:
        H: Гамильтониан
        psi0: Нормированное начальное состояние
        dt: Шаг интегрирования
        T: Полное время, кратное dt
        sample_every: Сохранять каждый n-й шаг
        observables: Операторы, средние которых записываются в точках выборки
        store_states: Сохранять ли векторы состояний
        drift_abort: Порог аварийной остановки по дрейфу нормы

    Returns:
        Траектория с временами t = 0, sample_every·dt, ...
    """
    psi = np.array(getattr(psi0, "amplitudes", psi0), dtype=complex)
    if psi.shape != (H.dim,):
        raise ValueError(f"Размер состояния {psi.shape} не совпадает с размерностью {H.dim}")
    if sample_every < 1:
        raise ValueError(f"sample_every должно быть положительным: {sample_every}")
    steps = _step_count(T, dt)
    observables = dict(observables or {})

    times, states = [], []
    values = {name: [] for name in observables}
    max_drift = 0.0

    def record(step: int):
        nonlocal max_drift
        drift = abs(np.linalg.norm(psi) - 1.0)
        max_drift = max(max_drift, drift)
        if drift > drift_abort:
            logger.error(f"Дрейф нормы {drift:.3e} на шаге {step} превышает {drift_abort:.1e}")
            raise NumericalError(f"Дрейф нормы {drift:.3e} при t={step * dt:.6g} превышает {drift_abort:.1e}")
        times.append(step * dt)
        if store_states:
            states.append(psi.copy())
        for name, op in observables.items():
            values[name].append(op.expectation(psi))

    record(0)
    half = 0.5 * dt
    for step in range(1, steps + 1):
        k1 = -1j * H.apply(psi)
        k2 = -1j * H.apply(psi + half * k1)
        k3 = -1j * H.apply(psi + half * k2)
        k4 = -1j * H.apply(psi + dt * k3)
        psi = psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if step % sample_every == 0:
            record(step)

    logger.debug(f"РК4: {steps} шагов dt={dt:.4g}, максимальный дрейф нормы {max_drift:.2e}")
    return Trajectory(
        times=np.array(times),
        states=np.array(states) if store_states else None,
        observables={name: np.array(v) for name, v in values.items()},
        max_drift=max_drift,
        steps=steps,
    )


class ExactPropagator:
    """
    Точная эволюция через полную диагонализацию

    ψ(t) = V e^{−iEt} V† ψ0. Служит эталоном для РК4 и основой диагонального ансамбля.
    """

    def __init__(self, H: SparseOperator, dense_cap: int = 4096):
        if H.dim > dense_cap:
            raise ResourceCapError(
                f"Размерность {H.dim} превышает предел плотной диагонализации {dense_cap}",
                key="spectrum.dense_cap",
            )
        self.H = H
        self.energies, self.vectors = scipy.linalg.eigh(H.to_dense())

    @property
    def dim(self) -> int:
        return self.H.dim

    def coefficients(self, psi0) -> np.ndarray:
        """Разложение c = V†ψ0"""
        psi = np.asarray(getattr(psi0, "amplitudes", psi0), dtype=complex)
        return self.vectors.conj().T @ psi

    def evolve(self, psi0, times) -> np.ndarray:
        """
        Состояния в заданные моменты

        Returns:
            Массив формы (len(times), 2^L)
        """
        times = np.asarray(times, dtype=float)
        c = self.coefficients(psi0)
        phases = np.exp(-1j * np.outer(times, self.energies))
        return (phases * c[None, :]) @ self.vectors.T

    def expectation_series(self, psi0, op: SparseOperator, times) -> np.ndarray:
        """⟨ψ(t)|O|ψ(t)⟩ на сетке времён"""
        states = self.evolve(psi0, times)
        images = op.apply(states.T)
        return np.einsum("ik,ki->i", states.conj(), images)


def evolve_exact(H: SparseOperator, psi0, times, dense_cap: int = 4096) -> Trajectory:
    """Точная эволюция; возвращает траекторию той же формы, что и evolve_rk4"""
    states = ExactPropagator(H, dense_cap).evolve(psi0, times)
    return Trajectory(times=np.asarray(times, dtype=float), states=states)
