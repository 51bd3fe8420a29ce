"""
Базовый класс моделей реестра
"""
import logging
from datetime import datetime
from typing import Any, Dict, List, Optional, Tuple

logger = logging.getLogger(__name__)


def _where(conditions: Optional[Dict[str, Any]]) -> Tuple[str, List[Any]]:
    """Условие WHERE из словаря: None → IS NULL, список → IN"""
    if not conditions:
        return "", []
    clauses, params = [], []
    for key, value in conditions.items():
        if value is None:
            clauses.append(f"{key} IS NULL")
        elif isinstance(value, (list, tuple)):
            clauses.append(f"{key} IN ({', '.join('?' for _ in value)})")
            params.extend(value)
        else:
            clauses.append(f"{key} = ?")
            params.append(value)
    return " WHERE " + " AND ".join(clauses), params


class BaseModel:
    """Базовая модель с CRUD операциями над одной таблицей"""

    # Переопределяется в наследниках
    table_name: str = ""
    primary_key: str = "id"
    has_updated_at: bool = False

    def __init__(self, db_connection):
        """
        Args:
            db_connection: Подключение к реестру
        """
        self.db = db_connection
        if not self.table_name:
            raise ValueError(f"table_name не определен для {self.__class__.__name__}")

    def create(self, data: Dict[str, Any]) -> int:
        """
        Создать запись

        Args:
            data: Значения столбцов

        Returns:
            ID созданной записи
        """
        data = dict(data)
        columns = ", ".join(data)
        placeholders = ", ".join("?" for _ in data)
        cursor = self.db.execute(
            f"INSERT INTO {self.table_name} ({columns}) VALUES ({placeholders})", tuple(data.values())
        )
        logger.debug(f"Создана запись в {self.table_name} с ID={cursor.lastrowid}")
        return int(cursor.lastrowid)

    def read(self, record_id: int) -> Optional[Dict[str, Any]]:
        """Запись по ID или None"""
        row = self.db.fetchone(f"SELECT * FROM {self.table_name} WHERE {self.primary_key} = ?", (record_id,))
        return dict(row) if row else None

    def update(self, record_id: int, data: Dict[str, Any]) -> bool:
        """
        Обновить запись

        Returns:
            False, если запись не найдена
        """
        data = dict(data)
        if self.has_updated_at:
            data["updated_at"] = datetime.now().isoformat(sep=" ", timespec="seconds")
        set_clause = ", ".join(f"{key} = ?" for key in data)
        cursor = self.db.execute(
            f"UPDATE {self.table_name} SET {set_clause} WHERE {self.primary_key} = ?",
            tuple(data.values()) + (record_id,),
        )
        if cursor.rowcount == 0:
            logger.warning(f"Запись {record_id} не найдена в {self.table_name}")
            return False
        return True

    def find(
        self,
        conditions: Optional[Dict[str, Any]] = None,
        order_by: Optional[str] = None,
        limit: Optional[int] = None,
    ) -> List[Dict[str, Any]]:
        """
        Поиск записей по условиям

        Args:
            conditions: Условия поиска
            order_by: Поле для сортировки
            limit: Ограничение количества

        Returns:
            Список записей
        """
        where, params = _where(conditions)
        query = f"SELECT * FROM {self.table_name}{where}"
        if order_by:
            query += f" ORDER BY {order_by}"
        if limit:
            query += f" LIMIT {int(limit)}"
        return [dict(row) for row in self.db.fetchall(query, tuple(params))]

    def count(self, conditions: Optional[Dict[str, Any]] = None) -> int:
        where, params = _where(conditions)
        row = self.db.fetchone(f"SELECT COUNT(*) AS cnt FROM {self.table_name}{where}", tuple(params))
        return row["cnt"] if row else 0

    def exists(self, conditions: Dict[str, Any]) -> bool:
        return self.count(conditions) > 0
