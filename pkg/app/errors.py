"""
Исключения сертификатора. Коды выхода CLI привязаны к классам.
"""
from __future__ import annotations

from typing import Optional


class CertifierError(Exception):
    """Базовая ошибка движка"""
    exit_code = 2


class UsageError(CertifierError):
    """Неверные аргументы командной строки"""
    exit_code = 1


class DataError(CertifierError, ValueError):
    """Некорректные входные данные (граф, модель, бюджет)"""
    exit_code = 2

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        self.field = field
        self.line = line
        where = []
        if field:
            where.append(f"field {field}")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class DimensionError(DataError):
    """Несогласованные размерности матриц"""


class OracleInfeasibleError(CertifierError):
    """Перебор пространства возмущений превышает лимит"""
    exit_code = 3
