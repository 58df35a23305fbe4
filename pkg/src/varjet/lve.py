"""Linearized variational matrix, kernel-condition strips and the dual system.

Blocks are indexed by order. With the increasing-order layout the
linearized matrix is block upper triangular with
``block(r, s) = C(s, r-1) A_{s-r+1} ⊙ Id^{⊙(r-1)}`` for ``r <= s``, so that
``Ẏ_k = sum_s A_s Z_{s,k}`` along ``Υ = exp⊙ Y``.

First-integral jets are handled in row form: ``f_k`` is a length
``d_{n,k}`` row, the transpose of the column ``V_k``.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Sequence

import numpy as np

from .symblock import DimensionError, SymBlock, TriangularTruncation, id_power_product


def _by_order(a_blocks: Sequence[SymBlock]) -> dict[int, SymBlock]:
    """Index field blocks by source order, checking they are consecutive (1, k)-blocks."""
    out = {}
    for blk in a_blocks:
        if blk.dst_order != 1:
            raise DimensionError(f"field block has type {blk.type}, expected (1, k)")
        out[blk.src_order] = blk
    orders = sorted(out)
    if orders != list(range(orders[0], orders[0] + len(orders))):
        raise DimensionError(f"field block orders are not consecutive: {orders}")
    n = {b.dst_dim for b in out.values()}
    if len(n) != 1:
        raise DimensionError("field blocks over different dimensions")
    return out


def assemble_lve(a_blocks: Sequence[SymBlock], order: int | None = None) -> TriangularTruncation:
    """Order-``K`` linearized variational matrix from ``A_1, ..., A_K``.

    ``A_0`` may be included and is ignored. ``order`` defaults to the highest
    block supplied.
    """
    a = _by_order(a_blocks)
    k_max = max(a) if order is None else order
    missing = [s for s in range(1, k_max + 1) if s not in a]
    if missing:
        raise DimensionError(f"missing field blocks of order {missing}")
    n = a[1].dst_dim
    blocks = {}
    for r in range(1, k_max + 1):
        for s in range(r, k_max + 1):
            blocks[(r, s)] = comb(s, r - 1) * id_power_product(a[s - r + 1], r - 1)
    return TriangularTruncation(k_max, n, blocks)


@dataclass(frozen=True)
class AhatMatrix:
    """Kernel-condition strips for orders ``1..K``.

    ``terms[k-1]`` lists ``(s, C(k-1, k-s), A_{k-s} ⊙ Id^{⊙(s-1)})`` for
    ``s = 1..k``; an admissible jet satisfies
    ``sum_s C(k-1, k-s) f_s (A_{k-s} ⊙ Id^{⊙(s-1)}) = 0``.
    """

    order: int
    dim: int
    terms: tuple[tuple[tuple[int, int, np.ndarray], ...], ...]

    def weights(self, k: int) -> list[int]:
        return [w for _, w, _ in self.terms[k - 1]]

    def residual_terms(self, jet: Sequence[np.ndarray], k: int) -> list[np.ndarray]:
        return [w * (np.asarray(jet[s - 1]) @ m) for s, w, m in self.terms[k - 1]]

    def dense(self, k: int) -> np.ndarray:
        """Transposed strip as a ``d_{n,k-1} x D_{n,k}`` matrix acting on stacked ``V_1..V_k``."""
        cols = [None] * k
        for s, w, m in self.terms[k - 1]:
            cols[s - 1] = w * m.T
        return np.hstack(cols)


def assemble_ahat(a_blocks: Sequence[SymBlock], order: int | None = None) -> AhatMatrix:
    """Kernel strips from ``A_0, ..., A_{K-1}``."""
    a = _by_order(a_blocks)
    if 0 not in a:
        raise DimensionError("the kernel condition needs A_0")
    k_max = max(a) + 1 if order is None else order
    if k_max - 1 > max(a):
        raise DimensionError(f"order {k_max} needs A_0..A_{k_max - 1}")
    n = a[0].dst_dim
    terms = []
    for k in range(1, k_max + 1):
        row = []
        for s in range(1, k + 1):
            m = id_power_product(a[k - s], s - 1).entries
            row.append((s, comb(k - 1, k - s), m))
        terms.append(tuple(row))
    return AhatMatrix(k_max, n, tuple(terms))


def _jet_rows(jet) -> list[np.ndarray]:
    """Accept a list of rows ``f_1..f_K`` or a scalar-row strip with an order-0 block."""
    blocks = getattr(jet, "blocks", None)
    if blocks is not None:
        return [np.asarray(b.entries).ravel() for b in blocks[1:]]
    return [np.asarray(f).ravel() for f in jet]


def kernel_residual(jet, a_blocks: Sequence[SymBlock], relative: bool = False) -> np.ndarray:
    """Per-order kernel-condition residuals ``||sum_s C(k-1,k-s) f_s (A_{k-s} ⊙ Id^{s-1})||_inf``.

    With ``relative=True`` each residual is divided by ``max(1, largest term norm)``,
    which keeps the measure meaningful when the jet entries are large.
    """
    rows = _jet_rows(jet)
    ahat = assemble_ahat(a_blocks, order=len(rows))
    out = np.zeros(len(rows))
    for k in range(1, len(rows) + 1):
        terms = ahat.residual_terms(rows, k)
        total = np.sum(terms, axis=0)
        out[k - 1] = np.max(np.abs(total)) if total.size else 0.0
        if relative:
            out[k - 1] /= max(1.0, max(np.max(np.abs(t)) for t in terms))
    return out


def dual_rhs(jet, a_blocks: Sequence[SymBlock]) -> list[np.ndarray]:
    """Right-hand side of the dual system in row form.

    ``ḟ_r = -sum_{s<=r} C(r, s-1) f_s (A_{r-s+1} ⊙ Id^{⊙(s-1)})``, i.e.
    ``V̇ = -A_LVE^T V``.
    """
    rows = _jet_rows(jet)
    a = _by_order(a_blocks)
    out = []
    for r in range(1, len(rows) + 1):
        acc = np.zeros_like(rows[r - 1], dtype=np.result_type(rows[r - 1], a[1].entries))
        for s in range(1, r + 1):
            acc = acc - comb(r, s - 1) * (rows[s - 1] @ id_power_product(a[r - s + 1], s - 1).entries)
        out.append(acc)
    return out


def dual_matrix(lve: TriangularTruncation) -> np.ndarray:
    """``A_LVE* = -(A_LVE)^T`` as a dense matrix."""
    return -lve.to_dense().T
