"""
Хеширование содержимого артефактов
"""
from pathlib import Path
from typing import Union

from cryptography.hazmat.primitives import hashes


class ContentHasher:
    """Хеши содержимого для манифестов и реестра запусков"""

    @staticmethod
    def _digest(algorithm: hashes.HashAlgorithm, *chunks: bytes) -> str:
        digest = hashes.Hash(algorithm)
        for chunk in chunks:
            digest.update(chunk)
        return digest.finalize().hex()

    @staticmethod
    def blob_hash(data: Union[bytes, str]) -> str:
        """
        Хеш в стиле git blob: sha1("blob <len>\\0" + data)

        Args:
            data: Содержимое файла

        Returns:
            Шестнадцатеричная строка из 40 символов
        """
        if isinstance(data, str):
            data = data.encode('utf-8')
        header = f"blob {len(data)}\0".encode('ascii')
        return ContentHasher._digest(hashes.SHA1(), header, data)

    @staticmethod
    def file_hash(path: Path) -> str:
        """Хеш git blob для файла на диске"""
        return ContentHasher.blob_hash(Path(path).read_bytes())

    @staticmethod
    def sha256(data: Union[bytes, str]) -> str:
        """SHA-256 для конфигураций и отпечатков операторов"""
        if isinstance(data, str):
            data = data.encode('utf-8')
        return ContentHasher._digest(hashes.SHA256(), data)
