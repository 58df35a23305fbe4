"""Products, powers and reciprocals of scalar-row jets.

A scalar jet is a list ``[f_0, f_1, ..., f_K]`` where ``f_0`` is the value and
``f_k`` the lex-sifted ``k``-th differential (a row of length ``d_{n,k}``).
"""
from __future__ import annotations

from math import comb, factorial
from typing import Sequence

import numpy as np

from ..multiidx import partition_coeff, sorted_partitions
from ..symblock import SymBlock, sym_multi_product, sym_product


def _blocks(jet: Sequence, n: int) -> list[SymBlock]:
    out = [SymBlock(0, 0, n, n, np.asarray(jet[0], dtype=float).reshape(1, 1))]
    for k in range(1, len(jet)):
        out.append(SymBlock(0, k, n, n, np.asarray(jet[k]).reshape(1, -1)))
    return out


def _rows(blocks: Sequence[SymBlock]) -> list:
    return [float(blocks[0].entries[0, 0])] + [b.entries[0].copy() for b in blocks[1:]]


def _dim(jet: Sequence) -> int:
    if len(jet) < 2:
        raise ValueError("cannot infer dimension from an order-0 jet; pass n explicitly")
    return len(jet[1])


def jet_product(u: Sequence, v: Sequence, n: int | None = None) -> list:
    """Jet of ``fg``: ``(fg)^{(i)} = sum_j C(i, j) f^{(j)} ⊙ g^{(i-j)}``."""
    if len(u) != len(v):
        raise ValueError("jets of different order")
    n = _dim(u) if n is None else n
    a, b = _blocks(u, n), _blocks(v, n)
    out = []
    for i in range(len(u)):
        acc = None
        for j in range(i + 1):
            term = comb(i, j) * sym_product(a[j], b[i - j])
            acc = term if acc is None else acc + term
        out.append(acc)
    return _rows(out)


def _partition_sum(blocks: Sequence[SymBlock], i: int, r: int) -> SymBlock | None:
    """``sum c^i_{i_1..i_r} f^{(i_1)} ⊙ ... ⊙ f^{(i_r)}`` over sorted partitions of ``i``."""
    acc = None
    for parts in sorted_partitions(i, r):
        term = partition_coeff(parts) * sym_multi_product(blocks[p] for p in parts)
        acc = term if acc is None else acc + term
    return acc


def jet_power(u: Sequence, k: int, n: int | None = None) -> list:
    """Jet of ``f^k`` via
    ``(f^k)^{(i)} = k! sum_{j=1}^{k} f^{j-1}/(j-1)! sum c^i ⊙_{u=1}^{k-j+1} f^{(i_u)}``."""
    if k < 1:
        raise ValueError(f"power must be >= 1, got {k}")
    n = _dim(u) if n is None else n
    blocks = _blocks(u, n)
    f0 = float(blocks[0].entries[0, 0])
    out = [f0**k]
    for i in range(1, len(u)):
        acc = np.zeros(len(u[i]))
        for j in range(1, k + 1):
            r = k - j + 1
            part = _partition_sum(blocks, i, r)
            if part is None:
                continue
            acc = acc + factorial(k) * f0 ** (j - 1) / factorial(j - 1) * part.entries[0]
        out.append(acc)
    return out


def jet_reciprocal(u: Sequence, k: int = 1, n: int | None = None) -> list:
    """Jet of ``1/f^k`` via
    ``f^k (1/f^k)^{(i)} = k sum_{j=0}^{i} (k+j-1)!/k! f^{-j} (-1)^j sum c^i ⊙_{u=1}^{j} f^{(i_u)}``.

    Raises
    ------
    ZeroDivisionError
        If the constant term vanishes.
    """
    n = _dim(u) if n is None else n
    blocks = _blocks(u, n)
    f0 = float(blocks[0].entries[0, 0])
    if f0 == 0:
        raise ZeroDivisionError("reciprocal of a jet with zero constant term")
    out = [f0 ** (-k)]
    for i in range(1, len(u)):
        acc = np.zeros(len(u[i]))
        for j in range(1, i + 1):
            part = _partition_sum(blocks, i, j)
            if part is None:
                continue
            acc = acc + k * factorial(k + j - 1) / factorial(k) * f0 ** (-j) * (-1) ** j * part.entries[0]
        out.append(acc / f0**k)
    return out


def trim_cross_products(candidates: np.ndarray, base_jets: Sequence[Sequence], order: int,
                        tol: float = 1e-8) -> np.ndarray:
    """Indices of candidate order-``order`` rows not spanned by products of lower jets.

    ``base_jets`` are jets ``[0, g_1, ..., g_K]`` of valuation one. The span is
    built from the order-``order`` blocks of every product ``g_{a} g_{b} ...``
    with at least two factors, evaluated at the same time as the candidates.
    """
    n = len(base_jets[0][1])
    spans = []
    jets = [list(j[: order + 1]) for j in base_jets]
    frontier = [(idx,) for idx in range(len(jets))]
    products = {(idx,): jets[idx] for idx in range(len(jets))}
    for _ in range(2, order + 1):
        nxt = []
        for key in frontier:
            for idx in range(key[-1], len(jets)):
                new = key + (idx,)
                products[new] = jet_product(products[key], jets[idx], n)
                spans.append(products[new][order])
                nxt.append(new)
        frontier = nxt
    cand = np.atleast_2d(candidates)
    if not spans:
        return np.arange(cand.shape[0])
    basis = np.array(spans)
    keep = []
    current = basis
    for r in range(cand.shape[0]):
        row = cand[r]
        coef, *_ = np.linalg.lstsq(current.T, row, rcond=None)
        resid = np.max(np.abs(current.T @ coef - row))
        if resid > tol * max(1.0, np.max(np.abs(row))):
            keep.append(r)
            current = np.vstack([current, row])
    return np.array(keep, dtype=int)
