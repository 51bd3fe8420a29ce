"""
Исключения лаборатории и коды выхода
"""


class MajoranaLabError(Exception):
    """Базовое исключение приложения"""

    exit_code: int = 1


class ConfigError(MajoranaLabError):
    """Ошибка конфигурации эксперимента"""

    exit_code = 2

    def __init__(self, message: str, key: str = ""):
        """
        Args:
            message: Описание ошибки
            key: Путь к ошибочному ключу (через точку)
        """
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class ResourceCapError(ConfigError):
    """Превышен ресурсный предел (размерность, число узлов)"""


class NumericalError(MajoranaLabError):
    """Численный сбой: нет сходимости, дрейф нормы, седловая точка, резонанс"""

    exit_code = 3
