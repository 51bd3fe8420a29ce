"""
Настройка логирования для приложения
"""
import logging
import logging.handlers
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Optional

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - [%(filename)s:%(lineno)d] - %(message)s'
RUN_FORMAT = '%(asctime)s - %(levelname)s - %(name)s - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


def setup_logger(config) -> logging.Logger:
    """
    Настройка системы логирования

    Args:
        config: Объект конфигурации приложения

    Returns:
        Настроенный логгер
    """
    # Создаем корневой логгер
    logger = logging.getLogger()
    logger.setLevel(getattr(logging, config.LOG_LEVEL.upper(), logging.INFO))

    # Удаляем существующие обработчики
    for handler in logger.handlers[:]:
        logger.removeHandler(handler)
        handler.close()

    # Формат логов
    formatter = logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)

    # Консольный обработчик
    console_handler = logging.StreamHandler()
    console_handler.setLevel(logging.DEBUG if config.DEBUG else logging.INFO)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    # Файловый обработчик с ротацией
    if config.LOG_FILE:
        config.LOG_FILE.parent.mkdir(parents=True, exist_ok=True)

        file_handler = logging.handlers.RotatingFileHandler(
            config.LOG_FILE,
            maxBytes=config.LOG_MAX_SIZE_MB * 1024 * 1024,
            backupCount=config.LOG_BACKUP_COUNT,
            encoding='utf-8'
        )
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    # Отдельный файл для ошибок
    error_file = config.LOG_DIR / 'errors.log'
    error_handler = logging.handlers.RotatingFileHandler(
        error_file,
        maxBytes=config.LOG_MAX_SIZE_MB * 1024 * 1024,
        backupCount=config.LOG_BACKUP_COUNT,
        encoding='utf-8'
    )
    error_handler.setLevel(logging.ERROR)
    error_handler.setFormatter(formatter)
    logger.addHandler(error_handler)

    logger.debug(f"Система логирования инициализирована, уровень {config.LOG_LEVEL}")
    logger.debug(f"Лог-файл: {config.LOG_FILE}")

    return logger


class RunLogger:
    """Логгер операций одного запуска"""

    def __init__(self, pipeline: str, run_id: Optional[int] = None):
        self.logger = logging.getLogger(f"run.{pipeline}")
        self.pipeline = pipeline
        self.run_id = run_id

    def log_step(self, step: str, **kwargs):
        """
        Логирование шага конвейера

        Args:
            step: Название шага
            **kwargs: Параметры шага
        """
        msg = f"[Run: {self.run_id}] {self.pipeline}: {step}"
        if kwargs:
            params = ", ".join(f"{k}={v}" for k, v in sorted(kwargs.items()))
            msg += f" | {params}"

        self.logger.info(msg)

    @contextmanager
    def capture(self, path: Path, level: int = logging.INFO) -> Iterator[logging.Handler]:
        """
        Копия всех сообщений на время запуска в файл каталога результатов

        Args:
            path: Путь журнала запуска (перезаписывается)
            level: Минимальный уровень
        """
        path.parent.mkdir(parents=True, exist_ok=True)
        handler = logging.FileHandler(path, mode="w", encoding="utf-8")
        handler.setLevel(level)
        handler.setFormatter(logging.Formatter(RUN_FORMAT, datefmt=DATE_FORMAT))
        root = logging.getLogger()
        previous = root.level
        root.setLevel(min(previous, level) if previous else level)
        root.addHandler(handler)
        try:
            yield handler
        finally:
            root.removeHandler(handler)
            root.setLevel(previous)
            handler.close()
