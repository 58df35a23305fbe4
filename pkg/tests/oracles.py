"""Reference implementations used as test oracles.

Everything here is written directly from the defining formulas with plain
loops, sharing no code with the package beyond the ``SymBlock`` container.
"""
from __future__ import annotations

import itertools
from math import comb, factorial, prod

import numpy as np
import sympy as sp

from varjet.symblock import SymBlock


def basis(n: int, k: int) -> list[tuple[int, ...]]:
    """Exponent vectors of modulus ``k`` in decreasing lexicographic order."""
    return sorted((mi for mi in itertools.product(range(k + 1), repeat=n) if sum(mi) == k), reverse=True)


def rank(n: int, k: int) -> dict[tuple[int, ...], int]:
    return {mi: i for i, mi in enumerate(basis(n, k))}


def vec_product(a: np.ndarray, i1: int, b: np.ndarray, i2: int, n: int) -> np.ndarray:
    """Product of coordinate vectors in ``Sym^i1`` and ``Sym^i2``: ``e^a ⊙ e^b = e^(a+b)``."""
    r = rank(n, i1 + i2)
    out = np.zeros(len(r), dtype=np.result_type(a, b))
    for ia, ea in enumerate(basis(n, i1)):
        for ib, eb in enumerate(basis(n, i2)):
            out[r[tuple(x + y for x, y in zip(ea, eb))]] += a[ia] * b[ib]
    return out


def naive_sym_product(a: SymBlock, b: SymBlock) -> np.ndarray:
    """Column ``k`` is ``C(j1+j2, j1)^-1 sum_p C(k, p) A e^p ⊙ B e^(k-p)``."""
    n, m = a.dst_dim, a.src_dim
    i1, j1 = a.type
    i2, j2 = b.type
    cols = basis(m, j1 + j2)
    ra, rb = rank(m, j1), rank(m, j2)
    out = np.zeros((len(basis(n, i1 + i2)), len(cols)), dtype=np.result_type(a.entries, b.entries))
    for c, k in enumerate(cols):
        for p in itertools.product(*(range(kl + 1) for kl in k)):
            if sum(p) != j1:
                continue
            q = tuple(x - y for x, y in zip(k, p))
            coef = prod(comb(x, y) for x, y in zip(k, p)) / comb(j1 + j2, j1)
            out[:, c] += coef * vec_product(a.entries[:, ra[p]], i1, b.entries[:, rb[q]], i2, n)
    return out


def vector_power(v: np.ndarray, k: int) -> np.ndarray:
    """``v^{⊙k}`` by repeated coordinate products."""
    n = len(v)
    out = np.ones(1, dtype=np.asarray(v).dtype)
    for j in range(k):
        out = vec_product(out, j, np.asarray(v), 1, n)
    return out


def random_block(rng, i: int, j: int, n: int, m: int | None = None) -> SymBlock:
    m = n if m is None else m
    shape = (len(basis(n, i)), len(basis(m, j)))
    return SymBlock(i, j, n, m, rng.standard_normal(shape))


def lex_partials(expr, symbols, point, k: int) -> np.ndarray:
    """Row of raw partials ``∂^a expr`` at ``point`` for ``a`` in the order-``k`` basis."""
    subs = dict(zip(symbols, point))
    row = []
    for mi in basis(len(symbols), k):
        d = expr
        for s, e in zip(symbols, mi):
            if e:
                d = sp.diff(d, s, e)
        row.append(float(sp.N(d.subs(subs), 30)))
    return np.array(row)


def taylor_coefficients(expr, symbols, k: int):
    """Symbolic raw partials of order ``k`` in basis order, for repeated evaluation."""
    out = []
    for mi in basis(len(symbols), k):
        d = expr
        for s, e in zip(symbols, mi):
            if e:
                d = sp.diff(d, s, e)
        out.append(sp.lambdify(symbols, d, "math"))
    return out


def multinomial_weights(n: int, k: int) -> np.ndarray:
    return np.array([factorial(k) / prod(factorial(x) for x in mi) for mi in basis(n, k)])
