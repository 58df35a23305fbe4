"""Symmetric products of block matrices over lexicographic monomial bases.

An ``(i, j)``-block maps ``Sym^j K^m`` to ``Sym^i K^n`` and is stored as a
dense ``d_{n,i} x d_{m,j}`` array. Basis vectors ``e^{⊙a}`` multiply like
monomials, ``e^{⊙a} ⊙ e^{⊙b} = e^{⊙(a+b)}``; the product of blocks follows the
normalized split-sum over column multi-indices.

Truncations of infinite block matrices (the ``⊙``-exponential of a vector
strip, its inverse, the linearized variational matrix) are laid out in memory
with increasing order, so block ``(r, s)`` sits in row band ``r`` and column
band ``s`` and the nonzero pattern is block upper triangular.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb, factorial
from typing import Iterable, Mapping, Sequence

import numpy as np

from .multiidx import (
    dim_cum,
    dim_sym,
    lex_basis,
    lex_rank,
    multi_binom,
    partition_coeff,
    sorted_partitions,
    splits,
)


class DimensionError(ValueError):
    """Blocks with incompatible ambient dimensions or orders."""


class SingularBlockError(np.linalg.LinAlgError):
    """A diagonal block of a triangular truncation is not invertible."""

    def __init__(self, order: int, condition: float):
        self.order = order
        self.condition = condition
        super().__init__(
            f"diagonal block of order {order} is singular (condition estimate {condition:.3e})"
        )


@dataclass(frozen=True)
class SymBlock:
    """A linear map ``Sym^j K^m -> Sym^i K^n`` over lex bases.

    Parameters
    ----------
    dst_order, src_order : int
        Orders ``i`` (rows) and ``j`` (columns).
    dst_dim, src_dim : int
        Ambient dimensions ``n`` (rows) and ``m`` (columns).
    entries : ndarray
        Dense ``dim_sym(n, i) x dim_sym(m, j)`` array, real or complex.
    """

    dst_order: int
    src_order: int
    dst_dim: int
    src_dim: int
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.entries)
        if not np.iscomplexobj(arr):
            arr = arr.astype(float, copy=False)
        if arr.ndim != 2:
            raise DimensionError(f"block entries must be 2-D, got shape {arr.shape}")
        want = (dim_sym(self.dst_dim, self.dst_order), dim_sym(self.src_dim, self.src_order))
        if arr.shape != want:
            raise DimensionError(
                f"({self.dst_order},{self.src_order})-block over n={self.dst_dim}, "
                f"m={self.src_dim} needs shape {want}, got {arr.shape}"
            )
        object.__setattr__(self, "entries", arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    @property
    def type(self) -> tuple[int, int]:
        return (self.dst_order, self.src_order)

    def __add__(self, other: "SymBlock") -> "SymBlock":
        _check_same_type(self, other)
        return self._with(self.entries + other.entries)

    def __sub__(self, other: "SymBlock") -> "SymBlock":
        _check_same_type(self, other)
        return self._with(self.entries - other.entries)

    def __neg__(self) -> "SymBlock":
        return self._with(-self.entries)

    def __mul__(self, scalar) -> "SymBlock":
        return self._with(scalar * self.entries)

    __rmul__ = __mul__

    def __matmul__(self, other: "SymBlock") -> "SymBlock":
        """Composition: ``(i, j) @ (j, l) -> (i, l)``."""
        if self.src_order != other.dst_order or self.src_dim != other.dst_dim:
            raise DimensionError(
                f"cannot compose ({self.dst_order},{self.src_order}) with "
                f"({other.dst_order},{other.src_order})"
            )
        return SymBlock(self.dst_order, other.src_order, self.dst_dim, other.src_dim,
                        self.entries @ other.entries)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.entries @ np.asarray(vec)

    def transpose(self) -> "SymBlock":
        """Plain matrix transpose, reinterpreted as a ``(j, i)``-block."""
        return SymBlock(self.src_order, self.dst_order, self.src_dim, self.dst_dim,
                        self.entries.T)

    def _with(self, entries: np.ndarray) -> "SymBlock":
        return SymBlock(self.dst_order, self.src_order, self.dst_dim, self.src_dim, entries)


def _check_same_type(a: SymBlock, b: SymBlock) -> None:
    if (a.dst_order, a.src_order, a.dst_dim, a.src_dim) != (
        b.dst_order, b.src_order, b.dst_dim, b.src_dim
    ):
        raise DimensionError(f"block types differ: {a.type} over ({a.dst_dim},{a.src_dim}) "
                             f"vs {b.type} over ({b.dst_dim},{b.src_dim})")


def zeros_block(i: int, j: int, n: int, m: int | None = None, dtype=float) -> SymBlock:
    m = n if m is None else m
    return SymBlock(i, j, n, m, np.zeros((dim_sym(n, i), dim_sym(m, j)), dtype=dtype))


def identity_block(n: int, k: int = 1, dtype=float) -> SymBlock:
    """``Id_n^{⊙k}``, the identity on ``Sym^k K^n``."""
    return SymBlock(k, k, n, n, np.eye(dim_sym(n, k), dtype=dtype))


def column_block(vec: Sequence) -> SymBlock:
    """A vector ``v in K^n`` as a ``(1, 0)``-block."""
    v = np.asarray(vec).reshape(-1, 1)
    return SymBlock(1, 0, v.shape[0], v.shape[0], v)


def row_block(row: Sequence, k: int = 1) -> SymBlock:
    """A row over ``Sym^k K^n`` as a ``(0, k)``-block; ``n`` inferred from the length."""
    r = np.asarray(row).reshape(1, -1)
    n = _infer_dim(r.shape[1], k)
    return SymBlock(0, k, n, n, r)


def _infer_dim(length: int, k: int) -> int:
    if k == 0:
        raise DimensionError("cannot infer ambient dimension of an order-0 row")
    n = 1
    while dim_sym(n, k) < length:
        n += 1
    if dim_sym(n, k) != length:
        raise DimensionError(f"length {length} is not d_(n,{k}) for any n")
    return n


def basis_row(n: int, exponents: Sequence[int]) -> np.ndarray:
    """The coordinate row ``(e^{⊙k})^T`` of a single monomial."""
    k = sum(exponents)
    row = np.zeros(dim_sym(n, k))
    row[lex_rank(exponents)] = 1.0
    return row


@lru_cache(maxsize=None)
def _row_merge(n: int, i1: int, i2: int) -> np.ndarray:
    """0/1 table sending pairs of row monomials ``(a, b)`` to ``a + b``."""
    da, db = dim_sym(n, i1), dim_sym(n, i2)
    out = np.zeros((dim_sym(n, i1 + i2), da * db))
    for ia, a in enumerate(lex_basis(n, i1)):
        for ib, b in enumerate(lex_basis(n, i2)):
            c = tuple(x + y for x, y in zip(a, b))
            out[lex_rank(c), ia * db + ib] = 1.0
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def _col_split(m: int, j1: int, j2: int) -> np.ndarray:
    """Weights ``C(k, p) / C(j1+j2, j1)`` mapping column ``k`` to pairs ``(p, k-p)``."""
    dp, dq = dim_sym(m, j1), dim_sym(m, j2)
    out = np.zeros((dp * dq, dim_sym(m, j1 + j2)))
    norm = comb(j1 + j2, j1)
    for ik, k in enumerate(lex_basis(m, j1 + j2)):
        for p in splits(k, j1):
            q = tuple(x - y for x, y in zip(k, p))
            out[lex_rank(p) * dq + lex_rank(q), ik] = multi_binom(k, p) / norm
    out.setflags(write=False)
    return out


def sym_product(a: SymBlock, b: SymBlock) -> SymBlock:
    """Symmetric product of an ``(i1, j1)``- and an ``(i2, j2)``-block.

    Column ``e^{⊙k}`` of the result is
    ``C(j1+j2, j1)^{-1} sum_p C(k, p) A e^{⊙p} ⊙ B e^{⊙(k-p)}`` over
    ``|p| = j1``, ``0 <= p <= k``.

    Raises
    ------
    DimensionError
        If the ambient dimensions differ.
    """
    if a.dst_dim != b.dst_dim or a.src_dim != b.src_dim:
        raise DimensionError(
            f"ambient dimensions differ: ({a.dst_dim},{a.src_dim}) vs ({b.dst_dim},{b.src_dim})"
        )
    n, m = a.dst_dim, a.src_dim
    merge = _row_merge(n, a.dst_order, b.dst_order)
    split = _col_split(m, a.src_order, b.src_order)
    entries = merge @ np.kron(a.entries, b.entries) @ split
    return SymBlock(a.dst_order + b.dst_order, a.src_order + b.src_order, n, m, entries)


def sym_multi_product(blocks: Iterable[SymBlock]) -> SymBlock:
    """Left fold of :func:`sym_product`."""
    blocks = list(blocks)
    if not blocks:
        raise ValueError("empty product")
    out = blocks[0]
    for blk in blocks[1:]:
        out = sym_product(out, blk)
    return out


def sym_power(a: SymBlock, r: int) -> SymBlock:
    """``A^{⊙r}``; ``r = 0`` gives the scalar ``(0, 0)``-block ``1``."""
    if r < 0:
        raise ValueError(f"power must be >= 0, got {r}")
    if r == 0:
        return SymBlock(0, 0, a.dst_dim, a.src_dim, np.ones((1, 1), dtype=a.entries.dtype))
    out = a
    for _ in range(r - 1):
        out = sym_product(out, a)
    return out


def sym_vector_power(v: Sequence, k: int) -> np.ndarray:
    """Coordinates of ``v^{⊙k}``: entry at ``i`` is ``C(k; i) v^i``."""
    v = np.asarray(v)
    n = v.shape[0]
    basis = np.array(lex_basis(n, k), dtype=int).reshape(-1, n)
    weights = np.array([factorial(k) // _mfact(mi) for mi in lex_basis(n, k)], dtype=float)
    return weights * np.prod(v[None, :] ** basis, axis=1)


def _mfact(mi) -> int:
    out = 1
    for x in mi:
        out *= factorial(x)
    return out


def multinomial_weights(n: int, k: int) -> np.ndarray:
    """``C(k; i)`` for each ``i`` in ``lex_basis(n, k)``."""
    return np.array([factorial(k) // _mfact(mi) for mi in lex_basis(n, k)], dtype=float)


def id_power_product(a: SymBlock, r: int) -> SymBlock:
    """``A ⊙ Id_n^{⊙r}`` for a block with square ambient dimension."""
    if r == 0:
        return a
    return sym_product(a, identity_block(a.dst_dim, r, dtype=a.entries.dtype))


@dataclass(frozen=True)
class JetStrip:
    """Blocks ``B_0, ..., B_K`` of a truncated series row; block ``j`` has source order ``j``.

    ``dst_order`` is 1 for vector-valued strips (field jets, flows) and 0 for
    scalar rows (first-integral jets).
    """

    blocks: tuple[SymBlock, ...]

    def __post_init__(self):
        blocks = tuple(self.blocks)
        object.__setattr__(self, "blocks", blocks)
        if not blocks:
            raise ValueError("a strip needs at least the order-0 block")
        i0, n, m = blocks[0].dst_order, blocks[0].dst_dim, blocks[0].src_dim
        for j, blk in enumerate(blocks):
            if blk.src_order != j or blk.dst_order != i0 or blk.dst_dim != n or blk.src_dim != m:
                raise DimensionError(f"strip block {j} has type {blk.type}, expected ({i0},{j})")

    @property
    def order(self) -> int:
        return len(self.blocks) - 1

    @property
    def dst_order(self) -> int:
        return self.blocks[0].dst_order

    @property
    def dim(self) -> int:
        return self.blocks[0].src_dim

    def __getitem__(self, j: int) -> SymBlock:
        return self.blocks[j]

    def truncate(self, k: int) -> "JetStrip":
        return JetStrip(self.blocks[: k + 1])

    @classmethod
    def from_arrays(cls, arrays: Sequence[np.ndarray], dst_order: int, n: int) -> "JetStrip":
        return cls(tuple(SymBlock(dst_order, j, n, n, np.atleast_2d(a))
                         for j, a in enumerate(arrays)))


@dataclass(frozen=True)
class TriangularTruncation:
    """Order-``K`` corner of a block upper-triangular matrix with blocks ``Z_{r,s}``.

    Only ``1 <= r <= s <= K`` are stored; missing blocks read as zero.
    """

    order: int
    dim: int
    blocks: Mapping[tuple[int, int], SymBlock]

    def __post_init__(self):
        for (r, s), blk in self.blocks.items():
            if not 1 <= r <= s <= self.order:
                raise DimensionError(f"block ({r},{s}) outside the upper triangle of order {self.order}")
            if blk.type != (r, s) or blk.dst_dim != self.dim:
                raise DimensionError(f"block at ({r},{s}) has type {blk.type}")

    def block(self, r: int, s: int) -> SymBlock:
        if (r, s) in self.blocks:
            return self.blocks[(r, s)]
        return zeros_block(r, s, self.dim, dtype=self._dtype())

    def _dtype(self):
        for blk in self.blocks.values():
            if np.iscomplexobj(blk.entries):
                return complex
        return float

    def offsets(self) -> list[int]:
        return [0] + [dim_cum(self.dim, k) for k in range(1, self.order + 1)]

    def to_dense(self) -> np.ndarray:
        off = self.offsets()
        out = np.zeros((off[-1], off[-1]), dtype=self._dtype())
        for (r, s), blk in self.blocks.items():
            out[off[r - 1]:off[r], off[s - 1]:off[s]] = blk.entries
        return out

    @classmethod
    def from_dense(cls, mat: np.ndarray, n: int, order: int) -> "TriangularTruncation":
        off = [0] + [dim_cum(n, k) for k in range(1, order + 1)]
        if mat.shape != (off[-1], off[-1]):
            raise DimensionError(f"dense matrix shape {mat.shape} does not match D_({n},{order})")
        blocks = {}
        for r in range(1, order + 1):
            for s in range(r, order + 1):
                blocks[(r, s)] = SymBlock(r, s, n, n, mat[off[r - 1]:off[r], off[s - 1]:off[s]])
        return cls(order, n, blocks)

    @classmethod
    def identity(cls, n: int, order: int) -> "TriangularTruncation":
        return cls(order, n, {(r, r): identity_block(n, r) for r in range(1, order + 1)})

    def corner(self, k: int) -> "TriangularTruncation":
        return TriangularTruncation(k, self.dim,
                                    {rs: b for rs, b in self.blocks.items() if rs[1] <= k})

    def __matmul__(self, other: "TriangularTruncation") -> "TriangularTruncation":
        if other.order != self.order or other.dim != self.dim:
            raise DimensionError("truncations of different order or dimension")
        out = {}
        for r in range(1, self.order + 1):
            for s in range(r, self.order + 1):
                acc = None
                for t in range(r, s + 1):
                    if (r, t) in self.blocks and (t, s) in other.blocks:
                        term = self.blocks[(r, t)] @ other.blocks[(t, s)]
                        acc = term if acc is None else acc + term
                if acc is not None:
                    out[(r, s)] = acc
        return TriangularTruncation(self.order, self.dim, out)


def sym_exp_strip(y: JetStrip, order: int | None = None) -> TriangularTruncation:
    """Blocks ``Z_{r,s}`` of ``exp⊙ Y`` for a vector strip with ``Y_0 = 0``.

    Uses ``Z_{1,s} = Y_s`` and
    ``Z_{r,s} = (1/r) sum_{j=1}^{s-r+1} C(s, j) Y_j ⊙ Z_{r-1, s-j}``.
    """
    if y.dst_order != 1:
        raise DimensionError("the ⊙-exponential needs a vector strip (destination order 1)")
    k = y.order if order is None else order
    if k > y.order:
        raise ValueError(f"strip has order {y.order}, requested {k}")
    if np.any(y[0].entries != 0):
        raise ValueError("order-0 block of the strip must vanish")
    z: dict[tuple[int, int], SymBlock] = {}
    for s in range(1, k + 1):
        z[(1, s)] = y[s]
    for r in range(2, k + 1):
        for s in range(r, k + 1):
            acc = None
            for j in range(1, s - r + 2):
                term = comb(s, j) * sym_product(y[j], z[(r - 1, s - j)])
                acc = term if acc is None else acc + term
            z[(r, s)] = acc * (1.0 / r)
    return TriangularTruncation(k, y.dim, z)


def zrs_closed_form(y: JetStrip, r: int, s: int) -> SymBlock:
    """``Z_{r,s}`` as a sum over sorted partitions ``i_1 <= ... <= i_r`` of ``s``."""
    acc = None
    for parts in sorted_partitions(s, r):
        term = partition_coeff(parts) * sym_multi_product(y[i] for i in parts)
        acc = term if acc is None else acc + term
    if acc is None:
        return zeros_block(r, s, y.dim)
    return acc


def triangular_inverse(t: TriangularTruncation, cond_limit: float = 1e14) -> TriangularTruncation:
    """Block back-substitution inverse of a triangular truncation.

    Raises
    ------
    SingularBlockError
        If a diagonal block is singular or its condition estimate exceeds
        ``cond_limit``.
    """
    inv_diag = {}
    for r in range(1, t.order + 1):
        d = t.block(r, r).entries
        cond = np.linalg.cond(d)
        if not np.isfinite(cond) or cond > cond_limit:
            raise SingularBlockError(r, float(cond))
        inv_diag[r] = np.linalg.inv(d)
    w: dict[tuple[int, int], np.ndarray] = {}
    for s in range(1, t.order + 1):
        w[(s, s)] = inv_diag[s]
        for r in range(s - 1, 0, -1):
            acc = sum(t.block(r, q).entries @ w[(q, s)] for q in range(r + 1, s + 1))
            w[(r, s)] = -inv_diag[r] @ acc
    n = t.dim
    return TriangularTruncation(t.order, n, {rs: SymBlock(rs[0], rs[1], n, n, m) for rs, m in w.items()})


@dataclass(frozen=True)
class BlockSeries:
    """Order-``K`` truncation of an infinite block matrix, blocks ``(i, j)`` with ``0 <= i, j <= K``.

    Supports the infinite symmetric product and the ⊙-exponential of series
    whose nonzero blocks all have destination order >= 1.
    """

    order: int
    dst_dim: int
    src_dim: int
    blocks: Mapping[tuple[int, int], SymBlock]

    def block(self, i: int, j: int) -> SymBlock:
        if (i, j) in self.blocks:
            return self.blocks[(i, j)]
        return zeros_block(i, j, self.dst_dim, self.src_dim, dtype=self._dtype())

    def _dtype(self):
        return complex if any(np.iscomplexobj(b.entries) for b in self.blocks.values()) else float

    @classmethod
    def from_strip(cls, y: JetStrip) -> "BlockSeries":
        return cls(y.order, y[0].dst_dim, y.dim, {(y.dst_order, j): b for j, b in enumerate(y.blocks)})

    def __add__(self, other: "BlockSeries") -> "BlockSeries":
        keys = set(self.blocks) | set(other.blocks)
        return BlockSeries(self.order, self.dst_dim, self.src_dim,
                           {k: self.block(*k) + other.block(*k) for k in keys})

    def scale(self, c) -> "BlockSeries":
        return BlockSeries(self.order, self.dst_dim, self.src_dim,
                           {k: c * b for k, b in self.blocks.items()})

    def odot(self, other: "BlockSeries") -> "BlockSeries":
        """``C_{i,j} = sum C(j, j1) A_{i1,j1} ⊙ B_{i-i1, j-j1}``, truncated at order ``K``."""
        out: dict[tuple[int, int], SymBlock] = {}
        for (i1, j1), a in self.blocks.items():
            for (i2, j2), b in other.blocks.items():
                i, j = i1 + i2, j1 + j2
                if i > self.order or j > self.order:
                    continue
                term = comb(j, j1) * sym_product(a, b)
                out[(i, j)] = term if (i, j) not in out else out[(i, j)] + term
        return BlockSeries(self.order, self.dst_dim, self.src_dim, out)

    def compose(self, other: "BlockSeries") -> "BlockSeries":
        """Ordinary matrix product, truncated; needs ``self.src_dim == other.dst_dim``."""
        out: dict[tuple[int, int], SymBlock] = {}
        for (i, t), a in self.blocks.items():
            for (t2, j), b in other.blocks.items():
                if t2 != t:
                    continue
                term = a @ b
                out[(i, j)] = term if (i, j) not in out else out[(i, j)] + term
        return BlockSeries(self.order, self.dst_dim, other.src_dim, out)

    def exp(self) -> "BlockSeries":
        """``sum_r A^{⊙r} / r!``; terminates because row orders grow with ``r``."""
        if any(i == 0 for i, _ in self.blocks):
            raise ValueError("⊙-exponential needs every block to have destination order >= 1")
        one = SymBlock(0, 0, self.dst_dim, self.src_dim, np.ones((1, 1), dtype=self._dtype()))
        total = BlockSeries(self.order, self.dst_dim, self.src_dim, {(0, 0): one})
        power = total
        for r in range(1, self.order + 1):
            power = power.odot(self).scale(1.0 / r)
            total = total + power
        return total

    def allclose(self, other: "BlockSeries", atol: float = 1e-12, rtol: float = 1e-12) -> bool:
        keys = set(self.blocks) | set(other.blocks)
        return all(np.allclose(self.block(*k).entries, other.block(*k).entries, atol=atol, rtol=rtol)
                   for k in keys)
