"""Truncated multivariate Taylor arithmetic and derivative blocks of fields.

Values are polynomials in ``n`` nilpotent perturbation variables truncated at
total degree ``K``. Internally coefficients are normalized (divided by
``i!``); :class:`TaylorValue` exposes raw partials ``∂^i f``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial
from typing import Sequence

import numpy as np

from ..multiidx import dim_sym, lex_basis, lex_rank
from ..symblock import SymBlock
from .parser import Binary, Call, Expression, Node, Num, Param, Unary, Var


class SingularEvaluation(ArithmeticError):
    """Expression not smooth at the evaluation point."""

    def __init__(self, message: str, subexpression: str):
        self.subexpression = subexpression
        super().__init__(f"{message} in subexpression {subexpression!r}")


@dataclass(frozen=True)
class _Layout:
    n: int
    order: int
    offsets: tuple[int, ...]
    size: int
    pair_left: np.ndarray
    pair_right: np.ndarray
    pair_sum: np.ndarray
    factorials: np.ndarray


@lru_cache(maxsize=None)
def layout(n: int, order: int) -> _Layout:
    """Index tables for products of truncated series in ``n`` variables."""
    offsets = [0]
    monos = []
    for k in range(order + 1):
        monos.extend(lex_basis(n, k))
        offsets.append(offsets[-1] + dim_sym(n, k))
    pos = {mi: offsets[sum(mi)] + lex_rank(mi) for mi in monos}
    left, right, total = [], [], []
    for a in monos:
        ka = sum(a)
        for b in monos:
            if ka + sum(b) > order:
                continue
            c = tuple(x + y for x, y in zip(a, b))
            left.append(pos[a])
            right.append(pos[b])
            total.append(pos[c])
    facts = np.array([float(np.prod([factorial(v) for v in mi])) for mi in monos])
    return _Layout(n, order, tuple(offsets), offsets[-1], np.array(left), np.array(right),
                   np.array(total), facts)


class _Series:
    """Normalized truncated series; only used during evaluation."""

    __slots__ = ("c", "lay")

    def __init__(self, c: np.ndarray, lay: _Layout):
        self.c = c
        self.lay = lay

    @property
    def value(self):
        return self.c[0]

    def const(self, v) -> "_Series":
        c = np.zeros(self.lay.size, dtype=np.result_type(self.c, v))
        c[0] = v
        return _Series(c, self.lay)

    def __add__(self, o):
        return _Series(self.c + o.c, self.lay)

    def __sub__(self, o):
        return _Series(self.c - o.c, self.lay)

    def __neg__(self):
        return _Series(-self.c, self.lay)

    def scale(self, s):
        return _Series(s * self.c, self.lay)

    def __mul__(self, o):
        lay = self.lay
        w = self.c[lay.pair_left] * o.c[lay.pair_right]
        if np.iscomplexobj(w):
            out = (np.bincount(lay.pair_sum, w.real, lay.size)
                   + 1j * np.bincount(lay.pair_sum, w.imag, lay.size))
        else:
            out = np.bincount(lay.pair_sum, w, lay.size)
        return _Series(out, lay)

    def compose(self, derivs: Sequence) -> "_Series":
        """``f(self)`` given ``derivs[k] = f^{(k)}(self.value)``."""
        h = _Series(self.c.copy(), self.lay)
        h.c[0] = 0
        out = self.const(derivs[0])
        power = None
        for k in range(1, self.lay.order + 1):
            power = h if power is None else power * h
            out = out + power.scale(derivs[k] / factorial(k))
        return out


def _derivs(func: str, x0, order: int, src: str) -> list:
    if func == "exp":
        e = np.exp(x0)
        return [e] * (order + 1)
    if func == "sin":
        s, c = np.sin(x0), np.cos(x0)
        return [(s, c, -s, -c)[k % 4] for k in range(order + 1)]
    if func == "cos":
        s, c = np.sin(x0), np.cos(x0)
        return [(c, -s, -c, s)[k % 4] for k in range(order + 1)]
    if func == "log":
        if np.isrealobj(x0) and x0 <= 0:
            raise SingularEvaluation(f"log of non-positive value {x0!r}", src)
        return [np.log(x0)] + [(-1) ** (k - 1) * factorial(k - 1) / x0**k for k in range(1, order + 1)]
    if func == "sqrt":
        return _real_power_derivs(x0, 0.5, order, src)
    raise SingularEvaluation(f"unknown function {func!r}", src)


def _real_power_derivs(x0, p: float, order: int, src: str) -> list:
    if np.isrealobj(x0) and x0 <= 0:
        raise SingularEvaluation(f"non-integer power of non-positive base {x0!r}", src)
    out = []
    coef = 1.0
    for k in range(order + 1):
        out.append(coef * x0 ** (p - k))
        coef *= p - k
    return out


def _reciprocal_derivs(x0, order: int, src: str) -> list:
    if x0 == 0:
        raise SingularEvaluation("division by zero", src)
    return [(-1) ** k * factorial(k) / x0 ** (k + 1) for k in range(order + 1)]


def _int_power(base: _Series, p: int) -> _Series:
    if p == 0:
        return base.const(1.0)
    result = None
    sq = base
    while p:
        if p & 1:
            result = sq if result is None else result * sq
        p >>= 1
        if p:
            sq = sq * sq
    return result


def _constant_value(node: Node):
    """Numeric value of a variable-free subtree, or ``None``."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Param):
        return node.value
    if isinstance(node, Unary):
        v = _constant_value(node.arg)
        return None if v is None else -v
    if isinstance(node, Binary):
        a, b = _constant_value(node.left), _constant_value(node.right)
        if a is None or b is None:
            return None
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            return a / b if b != 0 else None
        if a > 0 or (float(b).is_integer() and (a != 0 or b >= 0)):
            return a**b
        return None
    return None


def _eval(node: Node, x: list[_Series], seed: _Series) -> _Series:
    if isinstance(node, (Num, Param)):
        return seed.const(node.value)
    if isinstance(node, Var):
        return x[node.index]
    if isinstance(node, Unary):
        return -_eval(node.arg, x, seed)
    if isinstance(node, Call):
        arg = _eval(node.arg, x, seed)
        return arg.compose(_derivs(node.func, arg.value, seed.lay.order, node.src))
    if isinstance(node, Binary):
        left = _eval(node.left, x, seed)
        if node.op == "^":
            expo = _constant_value(node.right)
            if expo is None:
                # general power a^b = exp(b log a)
                right = _eval(node.right, x, seed)
                if np.isrealobj(left.value) and left.value <= 0:
                    raise SingularEvaluation("variable exponent of non-positive base", node.src)
                lg = left.compose(_derivs("log", left.value, seed.lay.order, node.src))
                prod = right * lg
                return prod.compose(_derivs("exp", prod.value, seed.lay.order, node.src))
            if float(expo).is_integer():
                p = int(expo)
                if p >= 0:
                    return _int_power(left, p)
                inv = left.compose(_reciprocal_derivs(left.value, seed.lay.order, node.src))
                return _int_power(inv, -p)
            return left.compose(_real_power_derivs(left.value, expo, seed.lay.order, node.src))
        right = _eval(node.right, x, seed)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if node.op == "/":
            inv = right.compose(_reciprocal_derivs(right.value, seed.lay.order, node.src))
            return left * inv
    raise TypeError(f"unknown node {node!r}")


@dataclass(frozen=True)
class TaylorValue:
    """Raw partial derivatives ``∂^i f`` at a base point, all ``|i| <= K``.

    ``coeffs`` is ordered by modulus, then by decreasing lex order inside
    each modulus.
    """

    point: np.ndarray
    order: int
    coeffs: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.point)

    @property
    def value(self):
        return self.coeffs[0]

    def block(self, k: int) -> np.ndarray:
        """Lex-sifted differential of order ``k`` as a flat row."""
        off = layout(self.dim, self.order).offsets
        return self.coeffs[off[k]:off[k + 1]]

    def partial(self, mi: Sequence[int]) -> float:
        return self.block(sum(mi))[lex_rank(mi)]

    def polynomial(self, xi: Sequence) -> float:
        """``sum_i ∂^i f xi^i / i!``, the truncated Taylor polynomial at ``point + xi``."""
        lay = layout(self.dim, self.order)
        xi = np.asarray(xi)
        total = 0.0
        for k in range(self.order + 1):
            mons = np.array(lex_basis(self.dim, k), dtype=int).reshape(-1, self.dim)
            vals = np.prod(xi[None, :] ** mons, axis=1)
            total = total + np.sum(self.block(k) / lay.factorials[lay.offsets[k]:lay.offsets[k + 1]] * vals)
        return total


def _seed_vars(point: np.ndarray, order: int) -> tuple[list[_Series], _Series]:
    n = len(point)
    lay = layout(n, order)
    dtype = np.result_type(point, float)
    xs = []
    for j in range(n):
        c = np.zeros(lay.size, dtype=dtype)
        c[0] = point[j]
        if order >= 1:
            c[1 + j] = 1.0
        xs.append(_Series(c, lay))
    return xs, _Series(np.zeros(lay.size, dtype=dtype), lay)


def eval_taylor(expr: Expression, point: Sequence, order: int) -> TaylorValue:
    """All raw partials of ``expr`` at ``point`` up to total order ``order``.

    Raises
    ------
    SingularEvaluation
        On division by zero, log or fractional power of a non-positive value.
    """
    point = np.asarray(point)
    if point.shape != (len(expr.variables),):
        raise ValueError(f"point has shape {point.shape}, expected ({len(expr.variables)},)")
    xs, seed = _seed_vars(point, order)
    out = _eval(expr.root, xs, seed)
    lay = out.lay
    return TaylorValue(point, order, out.c * lay.factorials)


def evaluate(expr: Expression, point: Sequence):
    """Plain value of ``expr`` at ``point``."""
    return eval_taylor(expr, point, 0).value


def field_blocks(field: Sequence[Expression], point: Sequence, order: int) -> list[SymBlock]:
    """Blocks ``A_0, ..., A_K`` of a vector field at ``point``.

    Row ``r`` of ``A_k`` is the lex-sifted ``k``-th differential of component
    ``r``; ``A_0`` is the ``(1, 0)``-block holding the field value.
    """
    n = len(field)
    point = np.asarray(point)
    if point.shape != (n,):
        raise ValueError(f"point has shape {point.shape}, expected ({n},)")
    xs, seed = _seed_vars(point, order)
    coeffs = np.stack([_eval(e.root, xs, seed).c for e in field]) * layout(n, order).factorials
    off = layout(n, order).offsets
    return [SymBlock(1, k, n, n, coeffs[:, off[k]:off[k + 1]]) for k in range(order + 1)]
