"""
Конфигурация приложения
"""
import os
from pathlib import Path
from dataclasses import dataclass

from dotenv import load_dotenv

# Значения по умолчанию читаются при импорте, поэтому .env загружается раньше
load_dotenv()


def _env_bool(name: str, default: str) -> bool:
    return os.getenv(name, default).lower() == "true"


@dataclass
class Config:
    """Класс конфигурации приложения"""

    # Пути к файлам и директориям
    BASE_DIR: Path = Path(os.getenv("MAJORANA_HOME", str(Path(__file__).parent.parent.parent)))
    DATA_DIR: Path = None  # type: ignore[assignment]
    LOG_DIR: Path = None  # type: ignore[assignment]
    REGISTRY_PATH: Path = None  # type: ignore[assignment]

    # Настройки приложения
    APP_NAME: str = os.getenv("APP_NAME", "majorana-lab")
    APP_VERSION: str = os.getenv("APP_VERSION", "1.0.0")
    DEBUG: bool = _env_bool("DEBUG", "False")

    # Настройки логирования
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
    LOG_FILE: Path = None  # type: ignore[assignment]
    LOG_MAX_SIZE_MB: int = int(os.getenv("LOG_MAX_SIZE_MB", "10"))
    LOG_BACKUP_COUNT: int = int(os.getenv("LOG_BACKUP_COUNT", "5"))

    # Ресурсные пределы
    MAX_SITES: int = int(os.getenv("MAJORANA_MAX_SITES", "20"))
    DENSE_CAP: int = int(os.getenv("MAJORANA_DENSE_CAP", "4096"))

    # Численные параметры
    EIGSH_MAXITER: int = int(os.getenv("MAJORANA_EIGSH_MAXITER", "20000"))
    EIGSH_TOL: float = float(os.getenv("MAJORANA_EIGSH_TOL", "1e-12"))
    DEGENERACY_TOL: float = float(os.getenv("MAJORANA_DEGENERACY_TOL", "1e-8"))
    DRIFT_ABORT: float = float(os.getenv("MAJORANA_DRIFT_ABORT", "1e-4"))
    DT_FACTOR: float = float(os.getenv("MAJORANA_DT_FACTOR", "0.1"))
    CONVERGENCE_TOL: float = float(os.getenv("MAJORANA_CONVERGENCE_TOL", "5e-3"))

    # Производительность
    WORKERS: int = int(os.getenv("MAJORANA_WORKERS", "1"))
    SHOW_PROGRESS: bool = _env_bool("MAJORANA_PROGRESS", "False")

    def __post_init__(self):
        """Вычисляем зависимые пути и создаем директории"""
        self.BASE_DIR = Path(self.BASE_DIR)
        if self.DATA_DIR is None:
            self.DATA_DIR = self.BASE_DIR / "data"
        if self.LOG_DIR is None:
            self.LOG_DIR = self.DATA_DIR / "logs"
        if self.REGISTRY_PATH is None:
            self.REGISTRY_PATH = self.DATA_DIR / "registry" / "runs.db"
        if self.LOG_FILE is None:
            self.LOG_FILE = self.LOG_DIR / os.getenv("LOG_FILE", "majorana_lab.log")
        self.WORKERS = max(1, int(self.WORKERS))

        for path in [self.DATA_DIR, self.LOG_DIR, self.REGISTRY_PATH.parent]:
            path.mkdir(parents=True, exist_ok=True)
