"""Multi-indices, lexicographic monomial bases and the integer coefficients
shared by the symmetric-product machinery.

A multi-index is a plain tuple of non-negative ints. Bases of ``Sym^k K^n``
are enumerated in *decreasing* lexicographic order of exponent vectors, so for
``n=3, k=2`` the order is ``z1^2, z1 z2, z1 z3, z2^2, z2 z3, z3^2``. This order
is part of the serialization contract.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import groupby
from math import comb, factorial, prod
from typing import Iterable, Sequence

MultiIndex = tuple[int, ...]

INT64_MAX = 2**63 - 1
DEFAULT_SIZE_CAP = 20_000


def _checked(value: int) -> int:
    if abs(value) > INT64_MAX:
        raise OverflowError(f"combinatorial coefficient {value} exceeds 64-bit range")
    return value


def modulus(mi: Sequence[int]) -> int:
    return sum(mi)


def dim_sym(n: int, k: int) -> int:
    """Dimension ``d_{n,k}`` of ``Sym^k K^n``."""
    if n < 1 or k < 0:
        raise ValueError(f"dim_sym needs n >= 1 and k >= 0, got n={n}, k={k}")
    return _checked(comb(n + k - 1, n - 1))


def dim_cum(n: int, k: int) -> int:
    """Cumulative dimension ``D_{n,k} = d_{n,1} + ... + d_{n,k}``."""
    return sum(dim_sym(n, i) for i in range(1, k + 1))


def check_size(n: int, order: int, cap: int = DEFAULT_SIZE_CAP) -> int:
    """Validate that ``D_{n,order}`` stays under ``cap``; returns the size."""
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    size = dim_cum(n, order)
    if size > cap:
        raise ValueError(
            f"D_(n={n},K={order}) = {size} exceeds the size cap of {cap} columns"
        )
    return size


def _compositions_desc(n: int, k: int) -> Iterable[MultiIndex]:
    if n == 1:
        yield (k,)
        return
    for first in range(k, -1, -1):
        for rest in _compositions_desc(n - 1, k - first):
            yield (first,) + rest


@lru_cache(maxsize=None)
def lex_basis(n: int, k: int) -> tuple[MultiIndex, ...]:
    """All multi-indices of length ``n`` and modulus ``k`` in decreasing lex order."""
    dim_sym(n, k)
    return tuple(_compositions_desc(n, k))


@lru_cache(maxsize=None)
def _rank_table(n: int, k: int) -> dict[MultiIndex, int]:
    return {mi: pos for pos, mi in enumerate(lex_basis(n, k))}


def lex_rank(mi: Sequence[int], k: int | None = None) -> int:
    """Position of ``mi`` inside ``lex_basis(len(mi), |mi|)``.

    If ``k`` is given the modulus of ``mi`` must match it.
    """
    mi = tuple(int(v) for v in mi)
    if any(v < 0 for v in mi):
        raise ValueError(f"multi-index entries must be non-negative: {mi}")
    if k is not None and sum(mi) != k:
        raise ValueError(f"multi-index {mi} has modulus {sum(mi)}, expected {k}")
    return _rank_table(len(mi), sum(mi))[mi]


def lex_unrank(n: int, k: int, index: int) -> MultiIndex:
    basis = lex_basis(n, k)
    if not 0 <= index < len(basis):
        raise IndexError(f"index {index} out of range for d_({n},{k}) = {len(basis)}")
    return basis[index]


def lex_less(a: Sequence[int], b: Sequence[int]) -> bool:
    """Strict ``a <_lex b``: first differing entry of ``a`` is smaller."""
    for x, y in zip(a, b):
        if x != y:
            return x < y
    return False


def multi_factorial(mi: Sequence[int]) -> int:
    return _checked(prod(factorial(v) for v in mi))


def multi_binom(k: Sequence[int], p: Sequence[int]) -> int:
    """Entrywise binomial ``prod_j C(k_j, p_j)``; requires ``0 <= p <= k``."""
    if len(k) != len(p):
        raise ValueError("multi-indices of different length")
    if any(pj < 0 or pj > kj for kj, pj in zip(k, p)):
        raise ValueError(f"multi_binom needs 0 <= p <= k, got k={tuple(k)}, p={tuple(p)}")
    return _checked(prod(comb(kj, pj) for kj, pj in zip(k, p)))


def multinomial(parts: Sequence[int]) -> int:
    """``(sum parts)! / prod(parts!)``."""
    if any(v < 0 for v in parts):
        raise ValueError(f"negative part in {tuple(parts)}")
    return _checked(factorial(sum(parts)) // prod(factorial(v) for v in parts))


def partition_coeff(parts: Sequence[int]) -> int:
    """Number of ways to split a ``k``-set into blocks of the given sizes.

    ``parts`` must be sorted non-decreasingly with all entries >= 1; blocks of
    equal size are unordered, hence the division by the multiplicity
    factorials.
    """
    parts = tuple(parts)
    if not parts or any(p < 1 for p in parts):
        raise ValueError(f"parts must be positive, got {parts}")
    if any(a > b for a, b in zip(parts, parts[1:])):
        raise ValueError(f"parts must be sorted non-decreasingly, got {parts}")
    repeats = prod(factorial(len(list(g))) for _, g in groupby(parts))
    return _checked(multinomial(parts) // repeats)


@lru_cache(maxsize=None)
def sorted_partitions(k: int, r: int, smallest: int = 1) -> tuple[tuple[int, ...], ...]:
    """Non-decreasing tuples of ``r`` positive integers summing to ``k``."""
    if r == 0:
        return ((),) if k == 0 else ()
    out = []
    for first in range(smallest, k // r + 1):
        for rest in sorted_partitions(k - first, r - 1, first):
            out.append((first,) + rest)
    return tuple(out)


@lru_cache(maxsize=None)
def splits(k: MultiIndex, j: int) -> tuple[MultiIndex, ...]:
    """All ``p`` with ``0 <= p <= k`` entrywise and ``|p| = j``."""
    if len(k) == 0:
        return ((),) if j == 0 else ()
    out = []
    for first in range(min(k[0], j), -1, -1):
        for rest in splits(k[1:], j - first):
            out.append((first,) + rest)
    return tuple(out)
