"""
Модели запусков и их артефактов
"""
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

from .base import BaseModel

logger = logging.getLogger(__name__)

RUN_STATUSES = ("running", "ok", "failed")


class Run(BaseModel):
    """Запуск конвейера"""

    table_name = "runs"
    has_updated_at = True

    def start(self, mode: str, config_hash: str, output_dir: Path) -> int:
        """
        Зарегистрировать начало запуска

        Args:
            mode: Режим конвейера
            config_hash: SHA-256 канонической конфигурации
            output_dir: Каталог артефактов

        Returns:
            ID запуска
        """
        run_id = self.create(
            {"mode": mode, "config_hash": config_hash, "output_dir": str(output_dir), "status": "running"}
        )
        logger.info(f"Запуск {run_id} ({mode}) зарегистрирован")
        return run_id

    def finish(self, run_id: int, wall_time: float) -> bool:
        return self.update(run_id, {"status": "ok", "wall_time": wall_time})

    def fail(self, run_id: int, wall_time: float, message: str) -> bool:
        return self.update(run_id, {"status": "failed", "wall_time": wall_time, "message": message[:2000]})

    def latest(self, mode: Optional[str] = None) -> Optional[Dict[str, Any]]:
        """Последний успешный запуск (опционально заданного режима)"""
        conditions: Dict[str, Any] = {"status": "ok"}
        if mode:
            conditions["mode"] = mode
        rows = self.find(conditions, order_by="id DESC", limit=1)
        return rows[0] if rows else None

    def with_config(self, config_hash: str) -> List[Dict[str, Any]]:
        """Все запуски с той же конфигурацией"""
        return self.find({"config_hash": config_hash}, order_by="id")


class Artifact(BaseModel):
    """Файл, созданный запуском"""

    table_name = "artifacts"

    def register(self, run_id: int, path: str, kind: str, blob_hash: str) -> int:
        return self.create({"run_id": run_id, "path": path, "kind": kind, "blob_hash": blob_hash})

    def for_run(self, run_id: int, kind: Optional[str] = None) -> List[Dict[str, Any]]:
        """
        Артефакты запуска

        Args:
            run_id: ID запуска
            kind: Фильтр по виду (series, spectrum, manifest, ...)
        """
        conditions: Dict[str, Any] = {"run_id": run_id}
        if kind:
            conditions["kind"] = kind
        return self.find(conditions, order_by="path")
