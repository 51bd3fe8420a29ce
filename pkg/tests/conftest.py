"""
Общие фикстуры тестов
"""
import math

import numpy as np
import pytest

from src.algebra.sparse import to_sparse
from src.core.config import Config
from src.hamiltonians.builder import ModelSpec, build_kh


@pytest.fixture
def settings(tmp_path) -> Config:
    """Конфигурация с изолированными каталогами данных и реестра"""
    return Config(BASE_DIR=tmp_path, WORKERS=1, SHOW_PROGRESS=False)


@pytest.fixture
def kitaev_point():
    """Фабрика разреженных гамильтонианов в точке Китаева"""

    def build(L: int, delta: float = 0.0, perturbation: str = "none", **kwargs):
        spec = ModelSpec(L=L, theta=math.pi / 2, delta=delta, perturbation=perturbation, **kwargs)
        return to_sparse(build_kh(spec))

    return build


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
