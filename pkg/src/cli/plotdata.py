"""
Данные для графиков в длинном формате
"""
import logging
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd

from ..core.hashing import ContentHasher
from ..utils.io import read_csv, read_json, write_csv
from .runner import MANIFEST_NAME

logger = logging.getLogger(__name__)

PLOT_COLUMNS = ["series", "site", "axis", "x", "value", "variance"]
PLOT_FILE = "plot_data.csv"


def _long_rows(series: str, site, axis, x, value, variance) -> pd.DataFrame:
    x = np.asarray(x, dtype=float)
    return pd.DataFrame(
        {
            "series": series,
            "site": site,
            "axis": axis,
            "x": x,
            "value": np.asarray(value, dtype=float),
            "variance": np.asarray(variance, dtype=float),
        },
        columns=PLOT_COLUMNS,
    )


def emit_plot_data(run_dir: Path, output: Optional[Path] = None) -> Path:
    """
    Собрать ряды Γ(t) и спектры |c(ω)| запуска в одну таблицу

    Строки: ttc (Re Γ̄), ttc_abs (|Γ̄|) и fft (|⟨c⟩|) с дисперсией ансамбля.
    Для набора без рядов пишется только заголовок.

    Args:
        run_dir: Каталог запуска с manifest.json
        output: Путь результата (по умолчанию plot_data.csv в каталоге запуска)

    Returns:
        Путь записанного файла

    Raises:
        FileNotFoundError: Нет манифеста или перечисленного в нём артефакта
    """
    run_dir = Path(run_dir)
    manifest = read_json(run_dir / MANIFEST_NAME)
    frames: List[pd.DataFrame] = []
    for entry in manifest.get("files", []):
        kind = entry["kind"]
        if kind not in ("series", "spectrum"):
            continue
        path = run_dir / entry["path"]
        df = read_csv(path)
        if ContentHasher.file_hash(path) != entry["blob"]:
            logger.warning(f"Хеш {entry['path']} не совпадает с манифестом")
        site, axis = entry.get("site"), entry.get("axis")
        if kind == "series":
            frames.append(_long_rows("ttc", site, axis, df["t"], df["re"], df["variance"]))
            modulus = np.hypot(df["re"], df["im"])
            frames.append(_long_rows("ttc_abs", site, axis, df["t"], modulus, df["variance"]))
        else:
            frames.append(_long_rows("fft", site, axis, df["omega"], df["modulus"], df["variance"]))

    table = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=PLOT_COLUMNS)
    target = Path(output) if output else run_dir / PLOT_FILE
    write_csv(target, table, PLOT_COLUMNS)
    logger.info(f"Данные для графиков: {len(table)} строк → {target}")
    return target
