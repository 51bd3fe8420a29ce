"""
Конвейеры режимов: спектр, динамика, нулевые моды, ионная ловушка
"""
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import pandas as pd

from ..algebra.pauli import PauliSum, anticommutator, build_spin_flip, commutator, frobenius_norm, product
from ..algebra.sparse import SparseOperator, to_sparse
from ..algebra.zero_modes import ZeroModeSpec, build_zero_mode
from ..core.config import Config
from ..core.errors import ConfigError, NumericalError
from ..core.hashing import ContentHasher
from ..core.logger import RunLogger
from ..dynamics.correlations import (
    TTCSeries,
    diagonal_ensemble,
    ensemble_convergence,
    run_ensemble,
    step_halving_deviation,
)
from ..dynamics.propagation import ExactPropagator
from ..dynamics.spectra import beat_analysis, dominant_peaks, frequency_spectrum
from ..dynamics.states import sample_product_states
from ..fermions.oracle import SUPPORTED_PERTURBATIONS, build_bdg, compare_spectra, many_body_spectrum
from ..hamiltonians.builder import CouplingMatrix, ModelSpec, build_from_couplings, build_kh
from ..iontrap.couplings import (
    LaserParams,
    LaserTone,
    decay_exponent,
    dispersive_report,
    homogenize,
    inter_row_leak,
    optimize_angle,
    physical_scales,
    xx_couplings,
    zz_couplings,
)
from ..iontrap.crystal import TrapConfig, equilibrium_positions
from ..iontrap.mapping import active_mapping, active_window, match_rabi
from ..iontrap.modes import transverse_modes
from ..spectral.analysis import (
    entanglement_curve,
    full_spectrum,
    gaps,
    level_counts,
    lowest_k,
    multiplet_average,
    spin_profile,
    structure_factor,
)
from ..utils.io import atomic_write, coupling_frame, write_csv, write_json

logger = logging.getLogger(__name__)

ORACLE_TOL = 1e-8
ZERO_MODE_TOL = 1e-12


@dataclass(frozen=True)
class ArtifactRecord:
    """Файл результата относительно каталога запуска"""

    path: str
    kind: str
    site: Optional[int] = None
    axis: Optional[str] = None


class PipelineContext:
    """Каталог вывода, настройки окружения и журнал шагов одного запуска"""

    def __init__(self, output_dir: Path, settings: Config, run_log: RunLogger):
        self.output_dir = Path(output_dir)
        self.settings = settings
        self.run_log = run_log
        self.artifacts: List[ArtifactRecord] = []
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def csv(self, name: str, data, kind: str, columns=None, site: int = None, axis: str = None):
        write_csv(self.output_dir / name, data, columns)
        self.artifacts.append(ArtifactRecord(name, kind, site, axis))

    def json(self, name: str, obj: Any, kind: str):
        write_json(self.output_dir / name, obj)
        self.artifacts.append(ArtifactRecord(name, kind))

    def text(self, name: str, content: str, kind: str):
        atomic_write(self.output_dir / name, content)
        self.artifacts.append(ArtifactRecord(name, kind))

    def sparse(self, p: PauliSum) -> SparseOperator:
        return to_sparse(p, max_sites=self.settings.MAX_SITES)


def hamiltonian_hash(H: PauliSum) -> str:
    """Отпечаток гамильтониана: SHA-256 канонической записи суммы Паули"""
    return ContentHasher.sha256(H.serialize())


def _model_spec(model: Dict[str, Any]) -> ModelSpec:
    try:
        return ModelSpec(**model)
    except ValueError as e:
        raise ConfigError(str(e), key="model") from e


# --- спектр ---------------------------------------------------------------


def run_spectrum(config: Dict[str, Any], ctx: PipelineContext) -> Dict[str, Any]:
    """
    Спектр, мультиплеты, щели, запутанность и структурный фактор основного мультиплета

    Для открытой цепочки с отображаемым возмущением добавляется сверка со
    свободно-фермионным оракулом.
    """
    spec = _model_spec(config["model"])
    options = config["spectrum"]
    settings = ctx.settings
    H = build_kh(spec)
    op = ctx.sparse(H)
    ctx.run_log.log_step("гамильтониан", L=spec.L, terms=len(H), dim=op.dim)

    method = options["method"]
    if method == "auto":
        method = "dense" if op.dim <= settings.DENSE_CAP else "lanczos"
    if method == "dense":
        result = full_spectrum(
            op, dense_cap=settings.DENSE_CAP, tol=settings.DEGENERACY_TOL, with_vectors=options["with_vectors"]
        )
    else:
        result = lowest_k(
            op,
            k=min(options["k"], op.dim - 1),
            tol=settings.EIGSH_TOL,
            maxiter=settings.EIGSH_MAXITER,
            degeneracy_tol=settings.DEGENERACY_TOL,
        )
    ctx.run_log.log_step("диагонализация", method=method, levels=result.eigenvalues.size)

    ctx.csv(
        "eigenvalues.csv",
        {"index": np.arange(result.eigenvalues.size), "energy": result.eigenvalues},
        "levels",
    )
    ctx.csv(
        "multiplets.csv",
        {
            "energy": [m.energy for m in result.multiplets],
            "multiplicity": [m.multiplicity for m in result.multiplets],
        },
        "levels",
    )

    summary: Dict[str, Any] = {
        "L": spec.L,
        "method": method,
        "partial": result.partial,
        "ground_energy": result.ground_energy,
        "ground_multiplicity": result.multiplets[0].multiplicity,
        "multiplicity_counts": {str(k): v for k, v in sorted(level_counts(result).items())},
        "hamiltonian_hash": hamiltonian_hash(H),
    }
    if len(result.multiplets) >= 2:
        g = gaps(result, spacing_tol=options["gap_tol"])
        summary.update({"delta_L": g.delta_L, "delta_delta": g.delta_delta, "delta_delta_count": g.delta_delta_count})
    else:
        logger.warning("Найден один мультиплет: щели не определены")
    ctx.json("gaps.json", summary, "summary")

    if result.eigenvectors is not None:
        _ground_diagnostics(result.multiplet_vectors(0), spec.L, ctx)

    if options["oracle"] and not result.partial:
        _oracle_check(spec, H, result.eigenvalues, ctx)
    return summary


def _ground_diagnostics(vectors: np.ndarray, L: int, ctx: PipelineContext):
    """Средние по основному мультиплету: S(l), ⟨S^D_i⟩, P^D(q)"""
    curve = multiplet_average(vectors, lambda v: entanglement_curve(v, L))
    ctx.csv("entanglement.csv", {"l": np.arange(1, L), "entropy": curve}, "profile")

    profile = {"site": np.arange(1, L + 1)}
    factor: Dict[str, Any] = {"q": 2.0 * np.pi * np.arange(L) / L}
    for axis in ("x", "y", "z"):
        profile[f"S{axis}"] = multiplet_average(vectors, lambda v, a=axis: spin_profile(v, a, L))
        factor[f"P{axis}"] = multiplet_average(vectors, lambda v, a=axis: structure_factor(v, a, L)[1])
    factor["Pxy"] = factor["Px"] + factor["Py"]
    ctx.csv("spin_profile.csv", profile, "profile")
    ctx.csv("structure_factor.csv", factor, "profile")
    ctx.run_log.log_step("диагностика основного мультиплета", multiplicity=vectors.shape[1])


def _oracle_check(spec: ModelSpec, H: PauliSum, energies: np.ndarray, ctx: PipelineContext):
    if spec.boundary != "open" or spec.perturbation not in SUPPORTED_PERTURBATIONS:
        logger.info(f"Оракул пропущен: граница {spec.boundary}, возмущение {spec.perturbation}")
        return
    trace = H.coefficient((0,) * spec.L).real
    systems = build_bdg(spec.L, spec.spin_delta, spec.perturbation, spec.theta)
    levels = many_body_spectrum(systems, trace_per_state=0.0)
    if spec.rescaled:
        levels = levels / (1.0 + spec.spin_delta)
    levels = levels + trace
    comparison = compare_spectra(energies, levels, tol=ORACLE_TOL, truncate=False)
    if not comparison.passed:
        logger.error(f"Спектр не совпал с оракулом: отклонение {comparison.max_dev:.3e}")
    ctx.json(
        "oracle.json",
        comparison.to_dict(L=spec.L, delta=spec.delta, perturbation=spec.perturbation, theta=spec.theta),
        "oracle",
    )
    ctx.run_log.log_step("оракул", max_dev=f"{comparison.max_dev:.2e}", passed=comparison.passed)


# --- динамика -------------------------------------------------------------


def time_grid(T: float, sample_dt: float) -> np.ndarray:
    """Сетка t_k = k·Δt, k = 0..T/Δt"""
    count = int(round(T / sample_dt))
    if count < 1 or abs(count * sample_dt - T) > 1e-9 * T:
        raise ConfigError(f"T={T} не кратно шагу выборки {sample_dt}", key="dynamics.sample_dt")
    return sample_dt * np.arange(count + 1)


def _series_frame(ttc: TTCSeries) -> pd.DataFrame:
    return pd.DataFrame(
        {"t": ttc.times, "re": ttc.mean.real, "im": ttc.mean.imag, "variance": ttc.variance}
    )


def correlation_outputs(
    H: PauliSum,
    dynamics: Dict[str, Any],
    ctx: PipelineContext,
    gap: Optional[float] = None,
) -> Dict[str, Any]:
    """
    Ансамблевые автокорреляции Γ^D_i, их спектры и (опционально) биения и диагональный ансамбль

    Args:
        H: Гамильтониан
        dynamics: Раздел dynamics конфигурации
        ctx: Контекст запуска
        gap: Щель Δ_L для проверки T_beat·Δ_L = 2π

    Returns:
        Сводка по рядам
    """
    settings = ctx.settings
    L = H.L
    op = ctx.sparse(H)
    times = time_grid(dynamics["T"], dynamics["sample_dt"])
    method = dynamics["method"]
    kwargs: Dict[str, Any] = {}
    if method == "rk4":
        kwargs = {"dt": dynamics["dt"], "dt_factor": settings.DT_FACTOR, "drift_abort": settings.DRIFT_ABORT}

    propagator = None
    if dynamics["diagonal_ensemble"]:
        propagator = ExactPropagator(op, dense_cap=settings.DENSE_CAP)

    N = dynamics["N"]
    sampled = 2 * N if dynamics["ensemble_check"] else N
    summary: Dict[str, Any] = {
        "L": L,
        "samples": N,
        "convergence_samples": sampled,
        "hamiltonian_hash": hamiltonian_hash(H),
    }
    beats: Dict[str, Any] = {}
    ensemble: Dict[str, Any] = {}
    for axis in dynamics["axes"]:
        # Первые N состояний совпадают с выборкой размера N
        states = sample_product_states(axis, L, sampled, dynamics["seed"], dynamics["fixed_edge"])
        for site in dynamics["sites"]:
            key = f"{axis}{site}"
            full = run_ensemble(
                op,
                states,
                site,
                axis,
                times,
                workers=settings.WORKERS,
                show_progress=settings.SHOW_PROGRESS,
                method=method,
                **kwargs,
            )
            ttc = full.head(N)
            ctx.csv(f"ttc_{key}.csv", _series_frame(ttc), "series", site=site, axis=axis)

            spectrum = frequency_spectrum(times, ttc.series).positive_half()
            ctx.csv(
                f"fft_{key}.csv",
                {
                    "omega": spectrum.omega,
                    "modulus": spectrum.modulus_of_mean,
                    "mean_modulus": spectrum.mean_of_modulus,
                    "variance": spectrum.variance,
                },
                "spectrum",
                site=site,
                axis=axis,
            )
            summary[key] = {
                "final_mean": [float(ttc.mean[-1].real), float(ttc.mean[-1].imag)],
                "peaks": dominant_peaks(spectrum).tolist(),
                "parseval_error": spectrum.parseval_error,
                "ensemble_convergence": ensemble_convergence(full, N) if sampled > N else None,
                "dt_convergence": _step_check(op, states[0], site, axis, times, ttc, dynamics, settings),
            }
            ctx.run_log.log_step("автокорреляция", key=key, samples=ttc.count)

            if dynamics["beats"]:
                beats[key] = _beat_entry(times, ttc, dynamics["expected_carrier"], L, gap)
            if propagator is not None:
                ensemble[key] = _ensemble_entry(propagator, states[:N], site, axis, ttc)

    if dynamics["beats"]:
        ctx.json("beats.json", beats, "beats")
    if propagator is not None:
        ctx.json("diagonal_ensemble.json", ensemble, "oracle")
    return summary


def _step_check(
    op: SparseOperator,
    psi,
    site: int,
    axis: str,
    times,
    ttc: TTCSeries,
    dynamics: Dict[str, Any],
    settings: Config,
) -> Optional[float]:
    """Отклонение первой траектории при шаге dt/2 (None для точной эволюции)"""
    if dynamics["method"] != "rk4" or not dynamics["step_check"]:
        return None
    deviation = step_halving_deviation(
        op,
        psi,
        site,
        axis,
        times,
        ttc.series[0],
        dt=dynamics["dt"],
        dt_factor=settings.DT_FACTOR,
        drift_abort=settings.DRIFT_ABORT,
    )
    if deviation > settings.CONVERGENCE_TOL:
        logger.error(f"Ряд σ^{axis}_{site} не сошёлся по шагу: max|ΔΓ| = {deviation:.2e}")
        raise NumericalError(
            f"Отклонение при dt/2 {deviation:.2e} выше допуска {settings.CONVERGENCE_TOL:.1e} для σ^{axis}_{site}"
        )
    return deviation


def _beat_entry(times, ttc: TTCSeries, expected: Optional[float], L: int, gap: Optional[float]) -> Dict[str, Any]:
    try:
        report = beat_analysis(times, ttc.mean, expected_carrier=expected, L=L)
    except NumericalError as e:
        logger.warning(f"Биения σ^{ttc.axis}_{ttc.site} не определены: {e}")
        return {"error": str(e)}
    entry = report.to_dict()
    entry["delta_L"] = gap
    entry["consistency"] = report.revival_period * gap / (2.0 * math.pi) if gap else None
    deviation = report.deviation_from_quoted()
    entry["quoted_flag"] = deviation is not None and deviation > 0.15
    if entry["quoted_flag"]:
        logger.warning(
            f"Период биений {report.revival_period:.4g} отличается от опубликованного "
            f"{report.quoted_period:.4g} на {deviation:.0%}: проверьте нормировку δ"
        )
    return entry


def _ensemble_entry(propagator: ExactPropagator, states, site: int, axis: str, ttc: TTCSeries) -> Dict[str, Any]:
    plateau = float(np.mean([diagonal_ensemble(propagator, s, site, axis) for s in states]))
    tail = ttc.mean[ttc.mean.size // 2:].real
    return {"gamma_infinity": plateau, "time_average": float(np.mean(tail))}


def run_dynamics(config: Dict[str, Any], ctx: PipelineContext) -> Dict[str, Any]:
    spec = _model_spec(config["model"])
    H = build_kh(spec)
    gap = None
    if config["dynamics"]["beats"]:
        op = ctx.sparse(H)
        if op.dim <= ctx.settings.DENSE_CAP:
            gap = gaps(full_spectrum(op, dense_cap=ctx.settings.DENSE_CAP, tol=ctx.settings.DEGENERACY_TOL)).delta_L
        else:
            logger.info("Щель Δ_L не вычисляется: размерность выше предела плотного решения")
    return correlation_outputs(H, config["dynamics"], ctx, gap)


# --- нулевые моды ---------------------------------------------------------


def run_zeromode(config: Dict[str, Any], ctx: PipelineContext) -> Dict[str, Any]:
    """
    Символьная проверка нулевых мод по набору длин

    Остаток измеряется относительно 4·Ĥ^inter, перемасштабированного на (1+δ).
    """
    options = config["zeromode"]
    delta = options["delta"]
    rows: List[Dict[str, Any]] = []
    checks: Dict[str, Any] = {}
    for kind in options["kinds"]:
        previous = None
        previous_L = None
        for L in sorted(options["L_values"]):
            try:
                zspec = ZeroModeSpec(kind=kind, L=L, delta=delta, M=options["M"], odd_weight=options["odd_weight"])
            except ValueError as e:
                raise ConfigError(str(e), key="zeromode") from e
            psi = build_zero_mode(zspec)
            H = build_kh(ModelSpec(L=L, delta=delta, perturbation="inter", rescaled=True)).scale(4.0)
            residual = commutator(H, psi)
            symbolic = max((abs(c) for _, c in residual.terms), default=0.0)
            normalized = frobenius_norm(residual) / (2.0 ** (L / 2) * zspec.N_e)
            closed = zspec.residual_magnitude()
            flip = PauliSum.from_string(build_spin_flip(zspec.symmetry_axis, L))
            square = product(psi, psi)
            # Множитель x на каждую добавленную ячейку
            expected_ratio = zspec.x ** ((L - previous_L) // 2) if previous_L else None

            rows.append(
                {
                    "kind": kind,
                    "L": L,
                    "terms": len(residual),
                    "closed_form": closed,
                    "symbolic": symbolic,
                    "normalized": normalized,
                    "ratio": normalized / previous if previous else math.nan,
                }
            )
            checks[f"{kind}{L}"] = {
                "single_string": len(residual) == 1,
                "closed_form_match": abs(symbolic - closed) <= ZERO_MODE_TOL,
                "ratio_match": previous is None or abs(normalized / previous - expected_ratio) <= ZERO_MODE_TOL,
                "square_identity": square.allclose(PauliSum.identity(L), atol=ZERO_MODE_TOL),
                "anticommutes_with_flip": anticommutator(psi, flip).allclose(PauliSum.zero(L), atol=ZERO_MODE_TOL),
                "hermitian": psi.is_hermitian(ZERO_MODE_TOL),
                "terms": len(psi),
            }
            ctx.text(f"zero_mode_{kind}_L{L}.txt", psi.serialize(), "operator")
            ctx.run_log.log_step("нулевая мода", kind=kind, L=L, residual=f"{symbolic:.3e}")
            previous, previous_L = normalized, L

    columns = ["kind", "L", "terms", "closed_form", "symbolic", "normalized", "ratio"]
    ctx.csv("residuals.csv", pd.DataFrame(rows, columns=columns), "residuals")
    failed = [key for key, c in checks.items() if not all(v for k, v in c.items() if k != "terms")]
    if failed:
        logger.warning(f"Проверки нулевых мод не пройдены: {failed}")
    ctx.json("checks.json", {"delta": delta, "x": 1.0 / (1.0 + delta), "checks": checks, "failed": failed}, "summary")
    return {"failed": failed, "count": len(checks)}


# --- ионная ловушка -------------------------------------------------------


def _laser(section: Dict[str, Any], tone: str, phi: float) -> LaserParams:
    tones = [LaserTone(section[f"rabi_{tone}"], section[f"detuning_{tone}"])]
    tones += [LaserTone(t["rabi"], t["detuning"]) for t in section[f"extra_tones_{tone}"]]
    return LaserParams(tones=tuple(tones), k_mag=section["k_mag"], phi=phi)


def run_iontrap(config: Dict[str, Any], ctx: PipelineContext) -> CouplingMatrix:
    """
    Кристалл, поперечные моды, связи ZZ/XX и их отображение на спиновую цепочку

    Returns:
        Связи активных сайтов после согласования частот Раби
    """
    t, laser_cfg = config["trap"], config["laser"]
    L = config["active"]["L"]
    trap = TrapConfig(
        N=t["N"],
        wx_over_wz=t["wx_over_wz"],
        wy_over_wz=t["wy_over_wz"],
        omega_z=t["omega_z"],
        mass_amu=t["mass_amu"],
    )
    crystal = equilibrium_positions(trap, restarts=t["restarts"], seed=t["seed"])
    modes = transverse_modes(crystal, trap, "y")
    mapping = active_window(crystal, L)
    ctx.run_log.log_step("кристалл", N=trap.N, planar=crystal.is_planar(), window=len(mapping.window))

    laser_a = _laser(laser_cfg, "a", laser_cfg["phi_a"])
    laser_b = _laser(laser_cfg, "b", laser_cfg["phi_a"])
    geometry = homogenize(crystal, mapping.window) if laser_cfg["homogenize"] else None
    angle: Dict[str, Any] = {"phi": laser_a.phi, "start": laser_a.phi, "optimized": False}
    if laser_cfg["optimize_phi"]:
        scan = optimize_angle(crystal, modes, laser_a, trap, mapping.window, geometry=geometry)
        laser_a = laser_a.with_phi(scan.phi)
        angle.update(phi=scan.phi, optimized=True, leak=scan.leak)

    Vzz = zz_couplings(crystal, modes, laser_a, trap, geometry)
    Vxx = xx_couplings(crystal, modes, laser_b, trap)
    raw = active_mapping(Vzz, Vxx, mapping)
    scaled, match = match_rabi(raw)
    ctx.run_log.log_step("связи", delta_eff=f"{match.delta_eff:.4f}", phi=f"{laser_a.phi:.4f}")

    rows = crystal.rows()
    role = np.full(crystal.N, "spectator", dtype=object)
    role[list(mapping.hidden)] = "hidden"
    site = np.zeros(crystal.N, dtype=int)
    for n, ion in enumerate(mapping.active, start=1):
        role[ion] = "active"
        site[ion] = n
    ctx.csv(
        "crystal.csv",
        {"ion": np.arange(crystal.N), "x": crystal.x, "y": crystal.y, "z": crystal.z, "row": rows, "role": role, "site": site},
        "crystal",
    )
    ion, mode = np.meshgrid(np.arange(crystal.N), np.arange(modes.count), indexing="ij")
    ctx.csv(
        "modes.csv",
        {
            "mode": mode.ravel(),
            "ion": ion.ravel(),
            "frequency": modes.frequencies[mode.ravel()],
            "amplitude": modes.eigenvectors.ravel(),
        },
        "modes",
    )
    ctx.csv("couplings.csv", coupling_frame(scaled), "couplings")
    ctx.csv("couplings_raw.csv", coupling_frame(raw), "couplings")

    window = list(mapping.window)
    report = {
        "trap": {"N": trap.N, "wx_over_wz": trap.wx_over_wz, "wy_over_wz": trap.wy_over_wz},
        "crystal": {
            "energy": crystal.energy,
            "gradient_norm": crystal.gradient_norm,
            "min_hessian_eigenvalue": crystal.min_hessian_eigenvalue,
            "planar": crystal.is_planar(),
            "max_abs_y": float(np.max(np.abs(crystal.y))),
        },
        "modes": {"band": list(modes.band()), "com_frequency": float(modes.frequencies[0])},
        "dispersive": {
            "zz": dispersive_report(modes, laser_a, trap.wy_over_wz),
            "xx": dispersive_report(modes, laser_b, trap.wy_over_wz),
        },
        "angle": angle,
        "inter_row_leak": inter_row_leak(Vzz, window),
        "decay_exponent": {"zz": decay_exponent(Vzz, window, stride=2), "xx": decay_exponent(Vxx, window)},
        "match": match.to_dict(),
        "physical_scales": physical_scales(laser_a, trap),
        "active": mapping.to_dict(),
        "hamiltonian_hash": hamiltonian_hash(build_from_couplings(scaled)),
    }
    ctx.json("iontrap.json", report, "summary")
    return scaled


def run_iontrap_dynamics(config: Dict[str, Any], ctx: PipelineContext) -> Dict[str, Any]:
    """Ионная ловушка и автокорреляции гамильтониана, построенного по согласованным связям"""
    couplings = run_iontrap(config, ctx)
    H = build_from_couplings(couplings)
    return correlation_outputs(H, config["dynamics"], ctx)


PIPELINES: Dict[str, Callable[[Dict[str, Any], PipelineContext], Any]] = {
    "spectrum": run_spectrum,
    "dynamics": run_dynamics,
    "zeromode": run_zeromode,
    "iontrap": run_iontrap,
    "iontrap-dynamics": run_iontrap_dynamics,
}
