"""Degree-one filter, degree-one jets and the higher filter blocks at ``t0``."""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Sequence

import numpy as np

from ..lve import kernel_residual
from ..symblock import (
    JetStrip,
    SymBlock,
    TriangularTruncation,
    identity_block,
    id_power_product,
    sym_exp_strip,
    sym_power,
    sym_product,
    triangular_inverse,
    zeros_block,
)


class ZeroPivotError(ValueError):
    """The pivot component of the field vanishes at the base point."""


def _pivot_row(n: int, pivot: int, dtype=float) -> SymBlock:
    row = np.zeros((1, n), dtype=dtype)
    row[0, pivot] = 1.0
    return SymBlock(0, 1, n, n, row)


def filter_degree_one(x0: Sequence[float], pivot: int) -> SymBlock:
    """``F_1 = Id - (X^0 ⊙ e_i^T) / X^0_i`` as a ``(1, 1)``-block (``pivot`` is 0-based).

    Raises
    ------
    ZeroPivotError
        If ``X^0_i = 0``.
    """
    x0 = np.asarray(x0)
    n = x0.shape[0]
    if not 0 <= pivot < n:
        raise ValueError(f"pivot index {pivot} outside 0..{n - 1}")
    if x0[pivot] == 0:
        raise ZeroPivotError(f"pivot component X_{pivot + 1} of the base field value is zero")
    col = SymBlock(1, 0, n, n, x0.reshape(n, 1))
    outer = sym_product(col, _pivot_row(n, pivot, x0.dtype))
    return identity_block(n, 1, dtype=np.result_type(x0, float)) - outer * (1.0 / x0[pivot])


def degree_one_rows(f1: SymBlock, y1_inv: np.ndarray, pivot: int) -> np.ndarray:
    """The ``n-1`` nonzero rows of ``F_1 Y_1^{-1}``, stacked."""
    keep = [r for r in range(f1.dst_dim) if r != pivot]
    return (f1.entries @ y1_inv)[keep]


def normalization_matrix(raw_t0: np.ndarray, reference_t0: np.ndarray) -> tuple[np.ndarray, float]:
    """``P`` with ``P raw = reference`` at ``t0``, and the defect ``||P raw - reference||_inf``."""
    p = reference_t0 @ np.linalg.pinv(raw_t0)
    defect = float(np.max(np.abs(p @ raw_t0 - reference_t0))) if raw_t0.size else 0.0
    return p, defect


def u_binomial(f1: SymBlock, k: int, pivot: int) -> SymBlock:
    """``[sum_{j=0}^{k-1} C(k, j+1) (-1)^j (Id - F_1)^{⊙j} ⊙ Id^{⊙(k-1-j)}] ⊙ e_i^T``."""
    n = f1.dst_dim
    g = identity_block(n) - f1
    acc = None
    for j in range(k):
        term = _odot_with_id(sym_power(g, j), k - 1 - j, n, f1.entries.dtype)
        term = (comb(k, j + 1) * (-1) ** j) * term
        acc = term if acc is None else acc + term
    return sym_product(acc, _pivot_row(n, pivot, f1.entries.dtype))


def u_sum(f1: SymBlock, k: int, pivot: int) -> SymBlock:
    """``(sum_{j=0}^{k-1} Id^{⊙j} ⊙ F_1^{⊙(k-1-j)}) ⊙ e_i^T``."""
    n = f1.dst_dim
    acc = None
    for j in range(k):
        term = _odot_with_id(sym_power(f1, k - 1 - j), j, n, f1.entries.dtype)
        acc = term if acc is None else acc + term
    return sym_product(acc, _pivot_row(n, pivot, f1.entries.dtype))


def u_cyclotomic(f1: SymBlock, k: int, pivot: int) -> SymBlock:
    """``[⊙_{j=1}^{k-1} (Id - ζ_k^j F_1)] ⊙ e_i^T`` with ``ζ_k = exp(2πi/k)``, complex."""
    n = f1.dst_dim
    fc = SymBlock(1, 1, n, n, f1.entries.astype(complex))
    idc = identity_block(n, 1, dtype=complex)
    acc = SymBlock(0, 0, n, n, np.ones((1, 1), dtype=complex))
    for j in range(1, k):
        zeta = np.exp(2j * np.pi * j / k)
        acc = sym_product(acc, idc - fc * zeta)
    return sym_product(acc, _pivot_row(n, pivot, complex))


def _odot_with_id(blk: SymBlock, r: int, n: int, dtype) -> SymBlock:
    if r == 0:
        return blk
    if blk.type == (0, 0):
        return identity_block(n, r, dtype=np.result_type(dtype, float)) * blk.entries[0, 0]
    return id_power_product(blk, r)


@dataclass(frozen=True)
class FilterBlocks:
    """Filter blocks ``F_1..F_K`` at ``t0`` and the ``U_k`` used to build them.

    ``u[k]`` holds the sum-form ``U_k`` for ``k >= 2``.
    """

    pivot: int
    x0: np.ndarray
    f: tuple[SymBlock, ...]
    u: dict = field(default_factory=dict, repr=False)

    @property
    def order(self) -> int:
        return len(self.f)

    def strip(self) -> JetStrip:
        n = len(self.x0)
        return JetStrip((zeros_block(1, 0, n),) + tuple(self.f))


@dataclass(frozen=True)
class ConjectureReport:
    """Identity residuals at ``t0`` (asserted) and away-from-``t0`` kernel residuals (data only)."""

    filters: FilterBlocks
    u_discrepancy: dict          # k -> max |U_binomial - U_sum|, max |U_cyclotomic - U_sum|
    ukk_residual: dict           # k -> ||U_k (A_0 ⊙ Id^{k-1}) - X_i Id^{k-1}||_inf
    hyp_residual: dict           # k -> ||sum_j C(k-1,j) F_{j+1}(A_{k-1-j} ⊙ Id^j)||_inf
    away: list = field(default_factory=list)   # [(t, per-order relative residual maxima)]

    def max_identity_residual(self) -> float:
        vals = list(self.ukk_residual.values()) + list(self.hyp_residual.values())
        return max(vals) if vals else 0.0

    def max_u_discrepancy(self) -> float:
        vals = [max(v) for v in self.u_discrepancy.values()]
        return max(vals) if vals else 0.0

    def passed(self, tol: float = 1e-10, u_tol: float = 1e-11) -> bool:
        return self.max_identity_residual() < tol and self.max_u_discrepancy() < u_tol


def conjecture_filter(a_blocks: Sequence[SymBlock], pivot: int, order: int) -> ConjectureReport:
    """Build ``F_1..F_K`` from ``A_0..A_{K-1}`` at ``t0`` and check the ``t0`` identities.

    ``F_k = -(1/X_i^0) [sum_{j=0}^{k-2} C(k-1, j) F_{j+1} (A_{k-j-1} ⊙ Id^{⊙j})] U_k``.
    """
    a = {b.src_order: b for b in a_blocks}
    missing = [j for j in range(order) if j not in a]
    if missing:
        raise ValueError(f"conjecture harness of order {order} needs A_0..A_{order - 1}; missing {missing}")
    x0 = a[0].entries[:, 0]
    n = len(x0)
    f1 = filter_degree_one(x0, pivot)
    fs = [f1]
    us = {}
    u_disc = {}
    ukk = {}
    hyp = {1: float(np.max(np.abs(f1.entries @ x0)))}
    ukk[1] = 0.0
    for k in range(2, order + 1):
        u = u_sum(f1, k, pivot)
        u_bin = u_binomial(f1, k, pivot)
        u_cyc = u_cyclotomic(f1, k, pivot)
        u_disc[k] = (float(np.max(np.abs(u_bin.entries - u.entries))),
                     float(np.max(np.abs(u_cyc.entries - u.entries))))
        us[k] = u
        a0_id = id_power_product(a[0], k - 1).entries
        ukk[k] = float(np.max(np.abs(u.entries @ a0_id - x0[pivot] * np.eye(a0_id.shape[1]))))
        acc = sum(comb(k - 1, j) * (fs[j].entries @ id_power_product(a[k - j - 1], j).entries)
                  for j in range(k - 1))
        fk = SymBlock(1, k, n, n, -(acc @ u.entries) / x0[pivot])
        fs.append(fk)
        total = acc + fk.entries @ a0_id
        hyp[k] = float(np.max(np.abs(total)))
    filters = FilterBlocks(pivot, x0, tuple(fs), us)
    return ConjectureReport(filters, u_disc, ukk, hyp)


def filtered_rows(filters: FilterBlocks, upsilon: TriangularTruncation) -> list[np.ndarray]:
    """Row band 1 of ``Φ_K Υ_K^{-1}``, split per order, pivot row removed."""
    phi = sym_exp_strip(filters.strip())
    inv = triangular_inverse(upsilon)
    keep = [r for r in range(len(filters.x0)) if r != filters.pivot]
    out = []
    for s in range(1, upsilon.order + 1):
        acc = sum(phi.block(1, t).entries @ inv.block(t, s).entries for t in range(1, s + 1))
        out.append(acc[keep])
    return out


def away_from_t0_residuals(filters: FilterBlocks, upsilon: TriangularTruncation,
                           a_blocks: Sequence[SymBlock]) -> np.ndarray:
    """Relative kernel residuals per order of each filtered row at one time (reported, not asserted)."""
    rows = filtered_rows(filters, upsilon)
    out = np.zeros((len(rows[0]), len(rows)))
    for l in range(len(rows[0])):
        out[l] = kernel_residual([r[l] for r in rows], a_blocks, relative=True)
    return out
