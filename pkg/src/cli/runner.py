"""
Запуск конвейера: разрешение конфигурации, каталог вывода, манифест и реестр
"""
import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

from ..core.config import Config
from ..core.errors import ConfigError
from ..core.hashing import ContentHasher
from ..core.logger import RunLogger
from ..database.connection import RegistryConnection
from ..models.run import Artifact, Run
from ..utils.io import canonical_json, write_json
from .pipelines import PIPELINES, PipelineContext
from .schema import resolve_config

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
# Журнал запуска не входит в манифест
RUN_LOG_NAME = "run.log"


@dataclass
class RunOutcome:
    """Итог запуска"""

    run_id: int
    output_dir: Path
    manifest: Dict[str, Any]


def load_document(path: Path) -> Dict[str, Any]:
    """Прочитать JSON-конфигурацию эксперимента"""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Файл конфигурации не найден: {path}", key="config")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"Некорректный JSON в {path}: строка {e.lineno}, столбец {e.colno}", key="config") from e


def config_hash(config: Dict[str, Any]) -> str:
    """SHA-256 канонической конфигурации без каталога вывода"""
    payload = {k: v for k, v in config.items() if k != "output_dir"}
    return ContentHasher.sha256(canonical_json(payload))


def prepare_config(
    document: Dict[str, Any],
    mode: Optional[str] = None,
    overrides: Iterable[str] = (),
    output: Optional[Path] = None,
) -> Dict[str, Any]:
    """
    Конфигурация с режимом подкоманды, переопределениями и каталогом вывода

    Args:
        document: Исходный документ
        mode: Режим подкоманды; должен совпадать с полем mode документа, если оно задано
        overrides: Строки --set
        output: Каталог вывода из командной строки
    """
    document = dict(document)
    if mode is not None:
        if document.get("mode", mode) != mode:
            raise ConfigError(f"Документ задаёт режим '{document['mode']}', вызвана подкоманда '{mode}'", key="mode")
        document["mode"] = mode
    if output is not None:
        document["output_dir"] = str(output)
    return resolve_config(document, overrides)


def run(config: Dict[str, Any], settings: Config) -> RunOutcome:
    """
    Выполнить конвейер режима и записать манифест

    Повторный запуск с той же конфигурацией перезаписывает файлы теми же байтами;
    в манифест попадают полная конфигурация, хеши файлов и время выполнения.

    Args:
        config: Разрешённая конфигурация
        settings: Настройки окружения

    Returns:
        ID запуска, каталог и манифест
    """
    mode = config["mode"]
    digest = config_hash(config)
    output_dir = Path(config.get("output_dir") or settings.DATA_DIR / "runs" / f"{mode}-{digest[:12]}")

    db = RegistryConnection(settings.REGISTRY_PATH)
    runs, artifacts = Run(db), Artifact(db)
    run_id = runs.start(mode, digest, output_dir)
    run_log = RunLogger(mode, run_id)
    run_log.log_step("старт", output=output_dir, config_hash=digest[:12])

    started = time.perf_counter()
    try:
        ctx = PipelineContext(output_dir, settings, run_log)
        with run_log.capture(output_dir / RUN_LOG_NAME):
            summary = PIPELINES[mode](config, ctx)
        wall_time = time.perf_counter() - started

        files = []
        for record in ctx.artifacts:
            blob = ContentHasher.file_hash(output_dir / record.path)
            files.append(
                {"path": record.path, "kind": record.kind, "blob": blob, "site": record.site, "axis": record.axis}
            )
        manifest = {
            "mode": mode,
            "run_id": run_id,
            "config": config,
            "config_hash": digest,
            "app_version": settings.APP_VERSION,
            "wall_time": wall_time,
            "files": files,
            "summary": summary if isinstance(summary, dict) else None,
        }
        write_json(output_dir / MANIFEST_NAME, manifest)

        with db.transaction():
            for entry in files:
                artifacts.register(run_id, entry["path"], entry["kind"], entry["blob"])
            artifacts.register(run_id, MANIFEST_NAME, "manifest", ContentHasher.file_hash(output_dir / MANIFEST_NAME))
        runs.finish(run_id, wall_time)
    except Exception as e:
        runs.fail(run_id, time.perf_counter() - started, f"{type(e).__name__}: {e}")
        logger.error(f"Запуск {run_id} ({mode}) завершился ошибкой: {e}")
        raise
    finally:
        db.close()

    run_log.log_step("завершён", files=len(files), wall_time=f"{wall_time:.2f}s")
    return RunOutcome(run_id=run_id, output_dir=output_dir, manifest=manifest)


def run_directory(settings: Config, run_id: int) -> Path:
    """Каталог успешного запуска по его ID в реестре"""
    db = RegistryConnection(settings.REGISTRY_PATH)
    try:
        record = Run(db).read(run_id)
    finally:
        db.close()
    if record is None:
        raise ConfigError(f"Запуск {run_id} не найден в реестре", key="run_id")
    if record["status"] != "ok":
        raise ConfigError(f"Запуск {run_id} имеет статус '{record['status']}'", key="run_id")
    return Path(record["output_dir"])
