"""
Подключение к реестру запусков SQLite
"""
import logging
import sqlite3
import threading
from contextlib import contextmanager
from pathlib import Path
from typing import List, Optional

logger = logging.getLogger(__name__)


class RegistryConnection:
    """Подключение к файлу реестра; у каждого потока своё соединение"""

    def __init__(self, db_path: Path):
        """
        Args:
            db_path: Путь к файлу реестра
        """
        self.db_path = Path(db_path)
        self.db_path.parent.mkdir(parents=True, exist_ok=True)
        self._local = threading.local()

        is_new = not self.db_path.exists()
        from .migrations import Migration
        Migration(self).run_all()
        if is_new:
            logger.info(f"Создан реестр запусков: {self.db_path}")
        else:
            logger.debug(f"Открыт реестр запусков: {self.db_path}")

    @property
    def connection(self) -> sqlite3.Connection:
        """Соединение текущего потока"""
        conn = getattr(self._local, "connection", None)
        if conn is None:
            conn = sqlite3.connect(str(self.db_path), isolation_level=None, timeout=30.0)
            conn.execute("PRAGMA foreign_keys = ON")
            conn.execute("PRAGMA journal_mode = WAL")
            conn.row_factory = sqlite3.Row
            self._local.connection = conn
        return conn

    @contextmanager
    def transaction(self):
        """Контекстный менеджер транзакции"""
        conn = self.connection
        conn.execute("BEGIN")
        try:
            yield conn
        except Exception as e:
            conn.execute("ROLLBACK")
            logger.error(f"Откат транзакции реестра: {e}")
            raise
        else:
            conn.execute("COMMIT")

    def execute(self, query: str, params: Optional[tuple] = None) -> sqlite3.Cursor:
        """
        Выполнить SQL запрос

        Args:
            query: SQL запрос
            params: Параметры запроса

        Returns:
            Курсор с результатами
        """
        try:
            return self.connection.execute(query, params or ())
        except sqlite3.Error as e:
            logger.error(f"Ошибка запроса к реестру: {e}\nQuery: {query}\nParams: {params}")
            raise

    def fetchone(self, query: str, params: Optional[tuple] = None) -> Optional[sqlite3.Row]:
        return self.execute(query, params).fetchone()

    def fetchall(self, query: str, params: Optional[tuple] = None) -> List[sqlite3.Row]:
        return self.execute(query, params).fetchall()

    def close(self):
        """Закрыть соединение текущего потока"""
        conn = getattr(self._local, "connection", None)
        if conn is not None:
            conn.close()
            self._local.connection = None
