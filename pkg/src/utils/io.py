"""
Запись и чтение артефактов: атомарные файлы, CSV с фиксированным форматом, канонический JSON
"""
import json
import logging
import os
import tempfile
from io import StringIO
from pathlib import Path
from typing import Any, Mapping, Sequence, Union

import numpy as np
import pandas as pd

from ..hamiltonians.builder import CouplingMatrix

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12e"
COUPLING_COLUMNS = ["i", "j", "Jxx", "Jzz"]


def atomic_write(path: Path, data: Union[bytes, str]) -> Path:
    """
    Атомарная запись: временный файл в том же каталоге и os.replace

    Args:
        path: Целевой путь
        data: Содержимое

    Returns:
        Путь к записанному файлу
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def frame_to_csv(df: pd.DataFrame) -> str:
    """CSV без индекса, вещественные числа в формате %.12e, перевод строки \\n"""
    buffer = StringIO()
    df.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return buffer.getvalue()


def write_csv(path: Path, data: Union[pd.DataFrame, Mapping[str, Sequence]], columns: Sequence[str] = None) -> Path:
    """
    Записать таблицу в CSV

    Args:
        path: Путь
        data: DataFrame или словарь столбцов
        columns: Порядок столбцов (для пустых таблиц задаёт заголовок)
    """
    df = data if isinstance(data, pd.DataFrame) else pd.DataFrame(dict(data))
    if columns is not None:
        df = df.reindex(columns=list(columns))
    return atomic_write(path, frame_to_csv(df))


def read_csv(path: Path) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Артефакт не найден: {path}")
    return pd.read_csv(path)


def _json_default(value: Any):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Тип {type(value).__name__} не сериализуется в JSON")


def canonical_json(obj: Any) -> str:
    """JSON с сортировкой ключей, пригодный для хеширования"""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False, default=_json_default) + "\n"


def write_json(path: Path, obj: Any) -> Path:
    return atomic_write(path, canonical_json(obj))


def read_json(path: Path) -> Any:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Артефакт не найден: {path}")
    return json.loads(path.read_text(encoding="utf-8"))


def coupling_frame(cm: CouplingMatrix) -> pd.DataFrame:
    """Верхний треугольник матриц связей в виде строк (i, j, Jxx, Jzz), узлы с 1"""
    rows, cols = np.triu_indices(cm.n, k=1)
    return pd.DataFrame(
        {"i": rows + 1, "j": cols + 1, "Jxx": cm.Jxx[rows, cols], "Jzz": cm.Jzz[rows, cols]}
    )


def write_couplings(path: Path, cm: CouplingMatrix) -> Path:
    return write_csv(path, coupling_frame(cm))


def read_couplings(path: Path, n: int = None) -> CouplingMatrix:
    """
    Прочитать матрицу связей из CSV (i, j, Jxx, Jzz)

    Отсутствующие пары считаются нулевыми; пара (j, i) эквивалентна (i, j).

    Args:
        path: Путь к CSV
        n: Число узлов (по умолчанию наибольший индекс)
    """
    df = read_csv(path)
    missing = [c for c in COUPLING_COLUMNS if c not in df.columns]
    if missing:
        raise ValueError(f"В CSV связей нет столбцов {missing}")
    i = df["i"].to_numpy(dtype=int)
    j = df["j"].to_numpy(dtype=int)
    if np.any(i == j):
        raise ValueError("Диагональные элементы в CSV связей недопустимы")
    if np.any(np.minimum(i, j) < 1):
        raise ValueError("Индексы узлов в CSV связей начинаются с 1")
    size = n if n is not None else int(max(i.max(), j.max())) if len(df) else 0
    Jxx = np.zeros((size, size))
    Jzz = np.zeros((size, size))
    for a, b, xx, zz in zip(i - 1, j - 1, df["Jxx"].to_numpy(float), df["Jzz"].to_numpy(float)):
        Jxx[a, b] = Jxx[b, a] = xx
        Jzz[a, b] = Jzz[b, a] = zz
    return CouplingMatrix(Jxx=Jxx, Jzz=Jzz)
