"""
Матричное представление сумм Паули в базисе σ^z

Соглашение о базисе: индекс амплитуды b ∈ [0, 2^L); бит (i−1) числа b равен 0,
если узел i в состоянии |↑⟩ (σ^z = +1). Узел 1 соответствует младшему биту.
"""
import logging
from functools import cached_property
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator

from ..core.errors import ResourceCapError
from .pauli import PauliSum

logger = logging.getLogger(__name__)

DEFAULT_MAX_SITES = 20


def _parity(indices: np.ndarray, mask: int) -> np.ndarray:
    """Чётность popcount(indices & mask) для массива индексов"""
    bits = np.zeros_like(indices)
    shift = 0
    while mask:
        if mask & 1:
            bits ^= (indices >> shift) & 1
        mask >>= 1
        shift += 1
    return bits


class SparseOperator:
    """
    Оператор на 2^L амплитудах, собранный из суммы Паули

    Слагаемые группируются по маске переворота f: H ψ = Σ_f (d_f ψ)[b ^ f],
    где d_f — диагональ фаз и знаков. Применение не требует хранения матрицы.
    """

    def __init__(self, L: int, blocks: List[Tuple[int, np.ndarray]]):
        self.L = L
        self.dim = 1 << L
        self._blocks = blocks
        self._indices = np.arange(self.dim, dtype=np.int64)

    @classmethod
    def from_pauli_sum(cls, p: PauliSum, max_sites: int = DEFAULT_MAX_SITES) -> "SparseOperator":
        """
        Построить оператор из канонической суммы Паули

        Args:
            p: Сумма Паули
            max_sites: Предел по числу узлов (защита памяти)

        Returns:
            Разреженный оператор
        """
        L = p.L
        if L > max_sites:
            raise ResourceCapError(
                f"L={L} превышает допустимый максимум {max_sites}", key="model.L"
            )
        dim = 1 << L
        indices = np.arange(dim, dtype=np.int64)
        diagonals: Dict[int, np.ndarray] = {}

        for letters, coeff in p.terms:
            flip = 0
            sign_mask = 0
            n_y = 0
            for site, k in enumerate(letters):
                if k in (1, 2):
                    flip |= 1 << site
                if k in (2, 3):
                    sign_mask |= 1 << site
                if k == 2:
                    n_y += 1
            factor = coeff * (1j ** n_y)
            signs = 1.0 - 2.0 * _parity(indices, sign_mask)
            if flip not in diagonals:
                diagonals[flip] = np.zeros(dim, dtype=complex)
            diagonals[flip] += factor * signs

        blocks = [(flip, diag) for flip, diag in sorted(diagonals.items()) if np.any(diag != 0)]
        logger.debug(f"Оператор L={L}: {len(p)} слагаемых, {len(blocks)} масок переворота")
        return cls(L, blocks)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.dim, self.dim)

    def is_zero(self) -> bool:
        return not self._blocks

    def norm_bound(self) -> float:
        """Верхняя оценка спектральной нормы: Σ_f max|d_f|"""
        return float(sum(np.max(np.abs(diag)) for _, diag in self._blocks))

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """
        Применить оператор к вектору или к столбцам матрицы

        Args:
            psi: Массив формы (2^L,) или (2^L, k)

        Returns:
            Результат той же формы
        """
        psi = np.asarray(psi)
        if psi.shape[0] != self.dim:
            raise ValueError(f"Размер вектора {psi.shape[0]} не равен 2^L = {self.dim}")
        out = np.zeros(psi.shape, dtype=complex)
        for flip, diag in self._blocks:
            weighted = diag * psi if psi.ndim == 1 else diag[:, None] * psi
            out += weighted[self._indices ^ flip]
        return out

    __matmul__ = apply

    def expectation(self, psi: np.ndarray) -> complex:
        """⟨ψ|O|ψ⟩"""
        return complex(np.vdot(psi, self.apply(psi)))

    @cached_property
    def csr(self) -> sp.csr_matrix:
        """Хранимая разреженная матрица CSR"""
        rows, cols, data = [], [], []
        for flip, diag in self._blocks:
            nz = np.nonzero(diag)[0]
            rows.append(nz ^ flip)
            cols.append(nz)
            data.append(diag[nz])
        if not rows:
            return sp.csr_matrix((self.dim, self.dim), dtype=complex)
        matrix = sp.coo_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.dim, self.dim),
        )
        return matrix.tocsr()

    def to_dense(self) -> np.ndarray:
        return self.csr.toarray()

    def as_linear_operator(self) -> LinearOperator:
        """Безматричная обёртка для итерационных решателей scipy"""
        return LinearOperator(
            shape=self.shape, matvec=self.apply, matmat=self.apply, dtype=complex
        )


def to_sparse(p: PauliSum, L: Optional[int] = None, max_sites: int = DEFAULT_MAX_SITES) -> SparseOperator:
    """Реализация суммы Паули оператором на 2^L амплитудах"""
    if L is not None and L != p.L:
        raise ValueError(f"Запрошено L={L}, сумма имеет длину {p.L}")
    return SparseOperator.from_pauli_sum(p, max_sites=max_sites)
