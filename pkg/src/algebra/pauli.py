"""
Алгебра строк Паули: произведения, коммутаторы, канонические суммы
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Tuple, Union

logger = logging.getLogger(__name__)

LETTERS = "IXYZ"
AXES = ("x", "y", "z")
DROP_TOL = 1e-14

# Фаза i^k кодируется целым k по модулю 4
_PHASE_VALUES = (1 + 0j, 1j, -1 + 0j, -1j)

Letters = Tuple[int, ...]
Number = Union[int, float, complex]


def _site_product(a: int, b: int) -> Tuple[int, int]:
    """Произведение однокубитных матриц Паули: (буква, степень i)"""
    if a == 0:
        return b, 0
    if b == 0 or a == b:
        return (a, 0) if b == 0 else (0, 0)
    # X·Y = iZ и циклические перестановки
    return 6 - a - b, 1 if (b - a) % 3 == 1 else 3


def parse_letters(label: str) -> Letters:
    """Строка над алфавитом IXYZ в кортеж кодов 0..3 (узел 1 слева)"""
    try:
        return tuple(LETTERS.index(ch) for ch in label.upper())
    except ValueError:
        raise ValueError(f"Недопустимые символы в строке Паули: '{label}'")


def format_letters(letters: Letters) -> str:
    """Кортеж кодов в строку над алфавитом IXYZ"""
    return "".join(LETTERS[k] for k in letters)


def axis_letter(axis: str) -> int:
    """Код буквы для оси x, y или z"""
    try:
        return AXES.index(axis.lower()) + 1
    except ValueError:
        raise ValueError(f"Неизвестная ось: '{axis}'")


def _sort_key(letters: Letters) -> int:
    # Последовательность букв как число в четверичной записи, узел 1 старший
    key = 0
    for k in letters:
        key = key * 4 + k
    return key


@dataclass(frozen=True)
class PauliString:
    """Строка Паули длины L с фазой из {+1, +i, −1, −i}"""

    letters: Letters
    phase: int = 0

    def __post_init__(self):
        if len(self.letters) == 0:
            raise ValueError("Строка Паули должна содержать хотя бы один узел")
        if any(k not in (0, 1, 2, 3) for k in self.letters):
            raise ValueError(f"Недопустимые коды букв: {self.letters}")
        object.__setattr__(self, "letters", tuple(self.letters))
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def from_label(cls, label: str, phase: int = 0) -> "PauliString":
        """Построить строку из текстовой метки, например 'XZI'"""
        return cls(parse_letters(label), phase)

    @classmethod
    def identity(cls, L: int) -> "PauliString":
        return cls((0,) * L)

    @classmethod
    def single(cls, L: int, site: int, letter: Union[int, str]) -> "PauliString":
        """
        Однокубитный оператор на узле site (нумерация с 1)

        Args:
            L: Длина цепочки
            site: Номер узла, 1..L
            letter: Код 0..3 или символ из IXYZ
        """
        if not 1 <= site <= L:
            raise ValueError(f"Узел {site} вне диапазона 1..{L}")
        code = LETTERS.index(letter.upper()) if isinstance(letter, str) else int(letter)
        letters = [0] * L
        letters[site - 1] = code
        return cls(tuple(letters))

    @property
    def L(self) -> int:
        return len(self.letters)

    @property
    def phase_value(self) -> complex:
        return _PHASE_VALUES[self.phase]

    @property
    def label(self) -> str:
        return format_letters(self.letters)

    @property
    def weight(self) -> int:
        """Число нетривиальных узлов"""
        return sum(1 for k in self.letters if k)

    def is_hermitian(self) -> bool:
        return self.phase in (0, 2)

    def commutes_with(self, other: "PauliString") -> bool:
        if self.L != other.L:
            raise ValueError(f"Несовпадение длин: {self.L} != {other.L}")
        clashes = sum(1 for a, b in zip(self.letters, other.letters) if a and b and a != b)
        return clashes % 2 == 0

    def __mul__(self, other: "PauliString") -> "PauliString":
        return multiply(self, other)

    def __str__(self) -> str:
        prefix = ("", "i", "-", "-i")[self.phase]
        return f"{prefix}{self.label}"


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """
    Групповое произведение строк Паули

    Args:
        a: Левый сомножитель
        b: Правый сомножитель

    Returns:
        Строка с накопленной фазой
    """
    if a.L != b.L:
        raise ValueError(f"Несовпадение длин строк Паули: {a.L} != {b.L}")
    phase = a.phase + b.phase
    letters = []
    for x, y in zip(a.letters, b.letters):
        c, k = _site_product(x, y)
        letters.append(c)
        phase += k
    return PauliString(tuple(letters), phase)


class PauliSum:
    """Взвешенная сумма строк Паули в канонической форме"""

    __slots__ = ("_L", "_terms")

    def __init__(self, L: int, terms: Optional[Mapping[Letters, Number]] = None):
        """
        Args:
            L: Длина цепочки
            terms: Отображение буквы -> коэффициент (фазы уже учтены)
        """
        if L < 1:
            raise ValueError(f"Длина цепочки должна быть положительной: {L}")
        self._L = int(L)
        canonical: Dict[Letters, complex] = {}
        for letters, coeff in (terms or {}).items():
            letters = tuple(letters)
            if len(letters) != L:
                raise ValueError(f"Строка длины {len(letters)} в сумме длины {L}")
            c = complex(coeff)
            if abs(c) >= DROP_TOL:
                canonical[letters] = c
        self._terms: Tuple[Tuple[Letters, complex], ...] = tuple(
            sorted(canonical.items(), key=lambda item: _sort_key(item[0]))
        )

    # -- конструкторы ------------------------------------------------------

    @classmethod
    def zero(cls, L: int) -> "PauliSum":
        return cls(L)

    @classmethod
    def identity(cls, L: int, coeff: Number = 1.0) -> "PauliSum":
        return cls(L, {(0,) * L: coeff})

    @classmethod
    def from_string(cls, s: PauliString, coeff: Number = 1.0) -> "PauliSum":
        """Сумма из одной строки, фаза переносится в коэффициент"""
        return cls(s.L, {s.letters: complex(coeff) * s.phase_value})

    @classmethod
    def from_terms(cls, L: int, terms: Iterable[Tuple[Number, Union[PauliString, str]]]) -> "PauliSum":
        """Накопить сумму из пар (коэффициент, строка); повторы складываются"""
        acc: Dict[Letters, complex] = {}
        for coeff, s in terms:
            if isinstance(s, str):
                s = PauliString.from_label(s)
            if s.L != L:
                raise ValueError(f"Строка длины {s.L} в сумме длины {L}")
            acc[s.letters] = acc.get(s.letters, 0j) + complex(coeff) * s.phase_value
        return cls(L, acc)

    # -- свойства ----------------------------------------------------------

    @property
    def L(self) -> int:
        return self._L

    @property
    def terms(self) -> Tuple[Tuple[Letters, complex], ...]:
        return self._terms

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[Tuple[complex, PauliString]]:
        for letters, coeff in self._terms:
            yield coeff, PauliString(letters)

    def is_zero(self) -> bool:
        return not self._terms

    def is_hermitian(self, tol: float = 0.0) -> bool:
        return all(abs(c.imag) <= tol for _, c in self._terms)

    def coefficient(self, label: Union[str, Letters]) -> complex:
        letters = parse_letters(label) if isinstance(label, str) else tuple(label)
        return dict(self._terms).get(letters, 0j)

    def as_dict(self) -> Dict[Letters, complex]:
        return dict(self._terms)

    def one_norm(self) -> float:
        """Σ|c_i|, верхняя оценка спектральной нормы"""
        return float(sum(abs(c) for _, c in self._terms))

    def strings(self) -> List[PauliString]:
        return [PauliString(letters) for letters, _ in self._terms]

    # -- арифметика --------------------------------------------------------

    def _check(self, other: "PauliSum"):
        if not isinstance(other, PauliSum):
            raise TypeError(f"Ожидалась PauliSum, получено {type(other).__name__}")
        if other.L != self.L:
            raise ValueError(f"Несовпадение длин: {self.L} != {other.L}")

    def __add__(self, other: "PauliSum") -> "PauliSum":
        self._check(other)
        acc = self.as_dict()
        for letters, c in other._terms:
            acc[letters] = acc.get(letters, 0j) + c
        return PauliSum(self.L, acc)

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return self + other.scale(-1.0)

    def __neg__(self) -> "PauliSum":
        return self.scale(-1.0)

    def scale(self, factor: Number) -> "PauliSum":
        return PauliSum(self.L, {letters: c * factor for letters, c in self._terms})

    def __mul__(self, other: Union["PauliSum", Number]) -> "PauliSum":
        if isinstance(other, PauliSum):
            return product(self, other)
        return self.scale(other)

    def __rmul__(self, other: Number) -> "PauliSum":
        return self.scale(other)

    def dagger(self) -> "PauliSum":
        return PauliSum(self.L, {letters: c.conjugate() for letters, c in self._terms})

    def map_letters(self, table: Mapping[int, int]) -> "PauliSum":
        """Побуквенная подстановка (I всегда переходит в I)"""
        acc: Dict[Letters, complex] = {}
        for letters, c in self._terms:
            mapped = tuple(table.get(k, k) if k else 0 for k in letters)
            acc[mapped] = acc.get(mapped, 0j) + c
        return PauliSum(self.L, acc)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self.L == other.L and self._terms == other._terms

    def __hash__(self) -> int:
        return hash((self.L, self._terms))

    def allclose(self, other: "PauliSum", atol: float = 1e-12) -> bool:
        """Покоэффициентное сравнение с допуском"""
        self._check(other)
        return all(abs(c) <= atol for _, c in (self - other)._terms)

    def __repr__(self) -> str:
        return f"PauliSum(L={self.L}, terms={len(self)})"

    # -- сериализация ------------------------------------------------------

    def serialize(self) -> str:
        """Построчная запись 'coeff_re coeff_im letters', узел 1 слева"""
        lines = [f"{c.real:.17g} {c.imag:.17g} {format_letters(letters)}" for letters, c in self._terms]
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def parse(cls, text: str, L: Optional[int] = None) -> "PauliSum":
        """Разбор текстового представления; L обязателен для пустой суммы"""
        terms = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"Строка {lineno}: ожидалось 're im letters', получено '{line}'")
            re, im, label = parts
            terms.append((complex(float(re), float(im)), PauliString.from_label(label)))
        if L is None:
            if not terms:
                raise ValueError("Для пустой суммы необходимо указать L")
            L = terms[0][1].L
        return cls.from_terms(L, terms)


def product(a: PauliSum, b: PauliSum) -> PauliSum:
    """Произведение сумм с раскрытием скобок"""
    a._check(b)
    acc: Dict[Letters, complex] = {}
    for la, ca in a.terms:
        for lb, cb in b.terms:
            s = multiply(PauliString(la), PauliString(lb))
            acc[s.letters] = acc.get(s.letters, 0j) + ca * cb * s.phase_value
    return PauliSum(a.L, acc)


def _graded_product(a: PauliSum, b: PauliSum, anticommutator: bool) -> PauliSum:
    # Для строк Паули [P, Q] = 2PQ при антикоммутации и 0 иначе; {P, Q} наоборот
    a._check(b)
    acc: Dict[Letters, complex] = {}
    for la, ca in a.terms:
        pa = PauliString(la)
        for lb, cb in b.terms:
            pb = PauliString(lb)
            if pa.commutes_with(pb) != anticommutator:
                continue
            s = multiply(pa, pb)
            acc[s.letters] = acc.get(s.letters, 0j) + 2.0 * ca * cb * s.phase_value
    return PauliSum(a.L, acc)


def commutator(a: PauliSum, b: PauliSum) -> PauliSum:
    """
    Коммутатор [a, b] = ab − ba

    Args:
        a: Левый операнд
        b: Правый операнд

    Returns:
        Каноническая сумма
    """
    return _graded_product(a, b, anticommutator=False)


def anticommutator(a: PauliSum, b: PauliSum) -> PauliSum:
    """Антикоммутатор {a, b} = ab + ba"""
    return _graded_product(a, b, anticommutator=True)


def frobenius_norm(p: PauliSum) -> float:
    """Норма Фробениуса sqrt(2^L Σ|c_i|²) по ортогональности строк Паули"""
    return math.sqrt((2.0 ** p.L) * sum(abs(c) ** 2 for _, c in p.terms))


def build_spin_flip(axis: str, L: int) -> PauliString:
    """Оператор глобального переворота G^D = ∏_k σ^D_k"""
    if L < 1:
        raise ValueError(f"Длина цепочки должна быть положительной: {L}")
    return PauliString((axis_letter(axis),) * L)
