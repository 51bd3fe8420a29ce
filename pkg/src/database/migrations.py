"""
Версионирование схемы реестра запусков
"""
import logging
from typing import List, Tuple

logger = logging.getLogger(__name__)

_RUNS_TABLE = """
CREATE TABLE IF NOT EXISTS runs (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    mode TEXT NOT NULL,
    config_hash TEXT NOT NULL,
    output_dir TEXT NOT NULL,
    status TEXT NOT NULL DEFAULT 'running',
    wall_time REAL,
    message TEXT,
    created_at DATETIME DEFAULT CURRENT_TIMESTAMP,
    updated_at DATETIME DEFAULT CURRENT_TIMESTAMP
)
"""

_ARTIFACTS_TABLE = """
CREATE TABLE IF NOT EXISTS artifacts (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    run_id INTEGER NOT NULL REFERENCES runs(id) ON DELETE CASCADE,
    path TEXT NOT NULL,
    kind TEXT NOT NULL,
    blob_hash TEXT NOT NULL,
    created_at DATETIME DEFAULT CURRENT_TIMESTAMP,
    UNIQUE (run_id, path)
)
"""

_INDEXES = """
CREATE INDEX IF NOT EXISTS idx_runs_mode ON runs(mode);
CREATE INDEX IF NOT EXISTS idx_runs_config_hash ON runs(config_hash);
CREATE INDEX IF NOT EXISTS idx_artifacts_run ON artifacts(run_id)
"""


class Migration:
    """Применение пронумерованных миграций к реестру"""

    def __init__(self, db_connection):
        self.db = db_connection
        self.db.execute(
            """
            CREATE TABLE IF NOT EXISTS migrations (
                version INTEGER PRIMARY KEY,
                name TEXT NOT NULL,
                applied_at DATETIME DEFAULT CURRENT_TIMESTAMP
            )
            """
        )

    @staticmethod
    def all_migrations() -> List[Tuple[int, str, str]]:
        return [
            (1, "runs_and_artifacts", _RUNS_TABLE + ";" + _ARTIFACTS_TABLE),
            (2, "registry_indexes", _INDEXES),
        ]

    def applied_versions(self) -> List[int]:
        return [row["version"] for row in self.db.fetchall("SELECT version FROM migrations ORDER BY version")]

    def apply(self, version: int, name: str, sql: str):
        """
        Применить одну миграцию в транзакции

        Args:
            version: Номер миграции
            name: Название
            sql: Операторы, разделённые ';'
        """
        with self.db.transaction():
            for statement in sql.split(";"):
                if statement.strip():
                    self.db.execute(statement)
            self.db.execute("INSERT INTO migrations (version, name) VALUES (?, ?)", (version, name))
        logger.info(f"Миграция реестра {version} '{name}' применена")

    def run_all(self):
        """Выполнить все неприменённые миграции"""
        applied = set(self.applied_versions())
        for version, name, sql in self.all_migrations():
            if version not in applied:
                self.apply(version, name, sql)
