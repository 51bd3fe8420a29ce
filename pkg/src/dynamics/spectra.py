"""
Частотный анализ автокорреляций и огибающая биений краевой моды
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal import find_peaks

from ..core.errors import NumericalError
from .correlations import check_uniform_grid

logger = logging.getLogger(__name__)

PARSEVAL_TOL = 1e-8
NODE_FRACTION = 0.2

# Периоды биений при δ_S = 1.6 (нормировка Паули, δ = 0.4)
QUOTED_BEAT_PERIODS = {8: 259.0, 10: 673.0}


@dataclass
class FrequencySpectrum:
    """
    Коэффициенты c(ω_m) = (1/K) Σ_k f(t_k) e^{−iω_m t_k}, ω_m = 2πm/(KΔt)

    modulus_of_mean = |⟨c⟩|, mean_of_modulus = ⟨|c|⟩, variance = ⟨|c|²⟩ − |⟨c⟩|².
    """

    omega: np.ndarray
    coefficients: np.ndarray
    modulus_of_mean: np.ndarray
    mean_of_modulus: np.ndarray
    variance: np.ndarray
    parseval_error: float

    def positive_half(self) -> "FrequencySpectrum":
        """Частоты m = 0..⌊K/2⌋"""
        keep = slice(0, self.omega.size // 2 + 1)
        return FrequencySpectrum(
            omega=self.omega[keep],
            coefficients=self.coefficients[:, keep],
            modulus_of_mean=self.modulus_of_mean[keep],
            mean_of_modulus=self.mean_of_modulus[keep],
            variance=self.variance[keep],
            parseval_error=self.parseval_error,
        )


def frequency_spectrum(times, series) -> FrequencySpectrum:
    """
    Дискретное преобразование Фурье ансамбля рядов с нормировкой 1/K

    Args:
        times: Равномерная сетка из K точек
        series: Массив (N, K) или (K,)

    Returns:
        Спектр на всех K частотах
    """
    dt = check_uniform_grid(times)
    data = np.atleast_2d(np.asarray(series, dtype=complex))
    K = data.shape[1]
    if K != len(times):
        raise ValueError(f"Длина рядов {K} не совпадает с сеткой {len(times)}")

    coefficients = np.fft.fft(data, axis=1) / K
    omega = 2.0 * np.pi * np.arange(K) / (K * dt)

    # Парсеваль: Σ|f|²/K = Σ|c|²
    lhs = np.sum(np.abs(data) ** 2, axis=1) / K
    rhs = np.sum(np.abs(coefficients) ** 2, axis=1)
    parseval_error = float(np.max(np.abs(lhs - rhs) / np.maximum(lhs, 1e-300)))
    if parseval_error > PARSEVAL_TOL:
        raise NumericalError(f"Нарушено равенство Парсеваля: относительная ошибка {parseval_error:.2e}")

    mean_c = coefficients.mean(axis=0)
    mean_sq = np.mean(np.abs(coefficients) ** 2, axis=0)
    return FrequencySpectrum(
        omega=omega,
        coefficients=coefficients,
        modulus_of_mean=np.abs(mean_c),
        mean_of_modulus=np.mean(np.abs(coefficients), axis=0),
        variance=np.maximum(mean_sq - np.abs(mean_c) ** 2, 0.0),
        parseval_error=parseval_error,
    )


def dominant_peaks(spectrum: FrequencySpectrum, fraction: float = 0.2) -> np.ndarray:
    """Частоты ω > 0 локальных максимумов |⟨c⟩|, не ниже fraction от наибольшего"""
    half = spectrum.positive_half()
    amplitude = half.modulus_of_mean.copy()
    amplitude[0] = 0.0
    if amplitude.max() == 0:
        return np.zeros(0)
    peaks, _ = find_peaks(amplitude, height=fraction * amplitude.max())
    return half.omega[peaks]


@dataclass
class BeatReport:
    """Несущая частота, узлы огибающей и период возрождения"""

    carrier: float
    nodes: List[float]
    revival_period: float
    envelope: np.ndarray = field(repr=False)
    quoted_period: Optional[float] = None

    @property
    def first_node(self) -> float:
        return self.nodes[0]

    def deviation_from_quoted(self) -> Optional[float]:
        """Относительное отклонение от опубликованного периода биений"""
        if self.quoted_period is None:
            return None
        return abs(self.revival_period - self.quoted_period) / self.quoted_period

    def to_dict(self) -> Dict:
        return {
            "carrier": self.carrier,
            "nodes": list(self.nodes),
            "revival_period": self.revival_period,
            "quoted_period": self.quoted_period,
            "quoted_deviation": self.deviation_from_quoted(),
        }


def _carrier_frequency(times: np.ndarray, signal: np.ndarray, expected: Optional[float]) -> float:
    dt = times[1] - times[0]
    power = np.abs(np.fft.rfft(signal)) ** 2
    omega = 2.0 * np.pi * np.fft.rfftfreq(signal.size, d=dt)
    power[0] = 0.0
    search = np.ones_like(power, dtype=bool)
    if expected is not None:
        search = np.abs(omega - expected) <= 0.5 * expected
        if not np.any(power[search] > 0):
            raise NumericalError(f"В окрестности ожидаемой несущей {expected:.4g} нет спектрального веса")
    peak = int(np.argmax(np.where(search, power, 0.0)))
    # Центроид мощности вокруг пика: боковые полосы биений ±Δ_L сливаются в несущую
    window = np.abs(omega - omega[peak]) <= 0.25 * omega[peak]
    return float(np.sum(omega[window] * power[window]) / np.sum(power[window]))


def beat_analysis(
    times,
    series,
    expected_carrier: Optional[float] = None,
    node_fraction: float = NODE_FRACTION,
    L: Optional[int] = None,
) -> BeatReport:
    """
    Несущая и биения в среднем ряду Γ(t)

    Огибающая — скользящее среднеквадратичное по окну двух периодов несущей. Узлы —
    локальные минимумы огибающей ниже node_fraction от глобального RMS. Период
    возрождения равен 2(t₂ − t₁) при двух узлах и 4t₁ при одном.

    Args:
        times: Равномерная сетка с нуля
        series: Средний ряд (вещественная часть используется)
        expected_carrier: Ожидаемая несущая (2δ) для сужения поиска
        node_fraction: Порог узла относительно глобального RMS
        L: Длина цепочки для сравнения с опубликованным периодом

    Returns:
        Отчёт о биениях
    """
    times = np.asarray(times, dtype=float)
    dt = check_uniform_grid(times)
    signal = np.real(np.asarray(series))
    signal = signal - signal.mean()
    if not np.any(signal):
        raise NumericalError("Ряд постоянен: несущая не определена")

    carrier = _carrier_frequency(times, signal, expected_carrier)
    width = max(1, int(round(4.0 * np.pi / carrier / dt)))
    envelope = np.sqrt(uniform_filter1d(signal ** 2, size=width, mode="nearest"))
    global_rms = float(np.sqrt(np.mean(signal ** 2)))

    minima, _ = find_peaks(-envelope, height=-node_fraction * global_rms, distance=width)
    edge = width // 2
    minima = [m for m in minima if edge <= m < times.size - edge]
    if not minima:
        raise NumericalError(
            f"Узлы огибающей не найдены до T={times[-1]:.6g} (порог {node_fraction} от RMS)"
        )
    nodes = [float(times[m]) for m in minima]
    revival = 2.0 * (nodes[1] - nodes[0]) if len(nodes) > 1 else 4.0 * nodes[0]
    quoted = QUOTED_BEAT_PERIODS.get(L) if L is not None else None
    logger.info(f"Биения: несущая {carrier:.6g}, узлы {nodes[:3]}, период возрождения {revival:.6g}")
    return BeatReport(
        carrier=carrier, nodes=nodes, revival_period=revival, envelope=envelope, quoted_period=quoted
    )
