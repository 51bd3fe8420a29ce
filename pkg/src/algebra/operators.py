"""
Часто используемые операторы: спины, пары спинов, майорановские строки
"""
from .pauli import PauliString, PauliSum, axis_letter


def spin(L: int, site: int, axis: str) -> PauliSum:
    """Оператор спина 1/2: S^D_i = σ^D_i / 2"""
    return PauliSum.from_string(PauliString.single(L, site, axis_letter(axis)), 0.5)


def pauli(L: int, site: int, axis: str) -> PauliString:
    """Однокубитная матрица Паули σ^D_i"""
    return PauliString.single(L, site, axis_letter(axis))


def spin_bond(L: int, i: int, j: int, axis: str, coeff: float = 1.0) -> PauliSum:
    """
    Связь coeff · S^D_i S^D_j

    Args:
        L: Длина цепочки
        i: Первый узел (с 1)
        j: Второй узел (с 1), j != i
        axis: Ось x, y или z
        coeff: Коэффициент связи
    """
    if i == j:
        raise ValueError(f"Связь требует двух разных узлов, получено {i}")
    letters = [0] * L
    code = axis_letter(axis)
    letters[i - 1] = code
    letters[j - 1] = code
    return PauliSum(L, {tuple(letters): 0.25 * coeff})


def jw_string(L: int, site: int, letter: str) -> PauliString:
    """
    Строка Йордана-Вигнера (∏_{k<site} σ^z_k) σ^D_site

    Majorana a_j соответствует letter='x', b_j — letter='y'.
    """
    if not 1 <= site <= L:
        raise ValueError(f"Узел {site} вне диапазона 1..{L}")
    letters = [3] * (site - 1) + [axis_letter(letter)] + [0] * (L - site)
    return PauliString(tuple(letters))


def majorana_operator(L: int, kind: str, site: int) -> PauliString:
    """Майорановский оператор a_j (kind='a') или b_j (kind='b')"""
    if kind not in ("a", "b"):
        raise ValueError(f"Тип майорановского оператора должен быть 'a' или 'b': {kind}")
    return jw_string(L, site, "x" if kind == "a" else "y")
