"""Progressive quadrature recursion for jets of formal first integrals.

For each of the ``n-1`` degree-one rows the order-``k`` block is

    f_k(t) = (c_k + q_k(t)) (Y_1^{-1}(t))^{⊙k},
    q̇_k   = r_k(t) Y_1^{⊙k}(t),
    r_k    = -sum_{j=2}^k C(k, j) f_{k-j+1} (A_j ⊙ Id^{⊙(k-j)}),

which is variation of constants for the dual system. The constant
``c_k = f_k(t0)`` is fixed by the kernel condition at ``t0``,
``c_k (A_0 ⊙ Id^{⊙(k-1)}) = -sum_{j=1}^{k-1} C(k-1, j) f_{k-j}(t0) (A_j ⊙ Id^{⊙(k-1-j)})``,
solved in the minimum-norm sense; the condition then holds for all ``t``.
Optionally the free part (the left null space of ``A_0 ⊙ Id^{⊙(k-1)}``) is
taken from a reference jet so that the output does not depend on ``t0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Callable, Sequence

import numpy as np

from ..exprjet import VectorField
from ..multiidx import check_size, dim_sym
from ..symblock import SymBlock, id_power_product, sym_power
from ..transport import (
    DEFAULT_ATOL,
    DEFAULT_RTOL,
    Trajectory,
    VariationalFlow,
    integrate_base,
    integrate_variational,
    path_quadrature,
)
from .filters import degree_one_rows, filter_degree_one, normalization_matrix

# (order, state) -> one row per integral, or None when no reference exists at that order
ReferenceRows = Callable[[int, np.ndarray], "np.ndarray | None"]


class InfeasibleConstraint(RuntimeError):
    """The kernel condition at ``t0`` has no solution within tolerance."""

    def __init__(self, order: int, residual: float, tol: float):
        self.order = order
        self.residual = residual
        self.tol = tol
        super().__init__(
            f"kernel condition at order {order} is infeasible: "
            f"least-squares residual {residual:.3e} exceeds {tol:.1e}"
        )


@dataclass
class _PowerCache:
    t: float | None = None
    y1: np.ndarray | None = None
    inv_powers: dict = field(default_factory=dict)
    powers: dict = field(default_factory=dict)


@dataclass
class JetResult:
    """Jets of ``n-1`` formal first integrals along one trajectory.

    Attributes
    ----------
    constants : list of ndarray
        ``constants[k-1]`` has one row ``f_k(t0)`` per integral.
    quadratures : list
        ``quadratures[k-1]`` accumulates ``q_k`` for all integrals (``None`` for ``k = 1``).
    anchor_defects : list of float
        Distance between the reference row and the constructed row at ``t0``,
        per order (zero when no reference was used).
    feasibility : list of float
        Least-squares residual of the kernel condition at ``t0``, per order.
    """

    trajectory: Trajectory
    flow: VariationalFlow
    filter1: SymBlock
    constants: list = field(default_factory=list)
    quadratures: list = field(default_factory=list)
    anchor_defects: list = field(default_factory=list)
    feasibility: list = field(default_factory=list)
    base_values: np.ndarray | None = None
    normalized: bool = False
    _cache: _PowerCache = field(default_factory=_PowerCache, repr=False)

    @property
    def order(self) -> int:
        return len(self.constants)

    @property
    def count(self) -> int:
        return self.constants[0].shape[0]

    @property
    def dim(self) -> int:
        return self.trajectory.dim

    def _inv_power(self, t: float, k: int) -> np.ndarray:
        c = self._cache
        if c.t != t:
            c.t, c.y1 = t, self.flow.y(1, t)
            c.inv_powers, c.powers = {}, {}
        if k not in c.inv_powers:
            n = self.dim
            c.inv_powers[k] = sym_power(SymBlock(1, 1, n, n, np.linalg.inv(c.y1)), k).entries
        return c.inv_powers[k]

    def _power(self, t: float, k: int) -> np.ndarray:
        self._inv_power(t, 1)
        c = self._cache
        if k not in c.powers:
            n = self.dim
            c.powers[k] = sym_power(SymBlock(1, 1, n, n, c.y1), k).entries
        return c.powers[k]

    def block(self, k: int, t: float) -> np.ndarray:
        """``f_k(t)`` for every integral, shape ``(n-1, d_{n,k})``."""
        c = self.constants[k - 1]
        q = self.quadratures[k - 1]
        if q is not None:
            c = c + q(t).reshape(c.shape)
        return c @ self._inv_power(t, k)

    def rows(self, t: float, index: int = 0, order: int | None = None) -> list[np.ndarray]:
        """``[f_1(t), ..., f_K(t)]`` for integral ``index``."""
        k_max = self.order if order is None else order
        return [self.block(k, t)[index] for k in range(1, k_max + 1)]

    def all_blocks(self, t: float, order: int | None = None) -> list[np.ndarray]:
        k_max = self.order if order is None else order
        return [self.block(k, t) for k in range(1, k_max + 1)]

    def truncated(self, order: int) -> "JetResult":
        return JetResult(self.trajectory, self.flow, self.filter1, self.constants[:order],
                         self.quadratures[:order], self.anchor_defects[:order],
                         self.feasibility[:order], self.base_values, self.normalized)


def _kernel_terms(a: Sequence[SymBlock], k: int) -> list[np.ndarray]:
    """``A_j ⊙ Id^{⊙(k-1-j)}`` for ``j = 0..k-1``."""
    return [id_power_product(a[j], k - 1 - j).entries for j in range(k)]


def start_jets(
    traj: Trajectory,
    reference: ReferenceRows | None = None,
    flow: VariationalFlow | None = None,
) -> JetResult:
    """Degree-one rows ``F_1 Y_1^{-1}``, rescaled to ``reference`` at ``t0`` if given."""
    flow = flow if flow is not None else integrate_variational(traj, 1)
    x0 = traj.field(traj.z0)
    f1 = filter_degree_one(x0, traj.pivot)
    raw = degree_one_rows(f1, np.eye(traj.dim), traj.pivot)
    ref = reference(1, traj.z0) if reference is not None else None
    if ref is not None:
        p, defect = normalization_matrix(raw, np.asarray(ref, dtype=float))
        c1 = p @ raw
    else:
        c1, defect = raw, 0.0
    return JetResult(traj, flow, f1, [c1], [None], [defect], [0.0],
                     normalized=reference is not None)


def progressive_step(
    result: JetResult,
    reference: ReferenceRows | None = None,
    feas_tol: float = 1e-8,
) -> JetResult:
    """Append the next order ``k`` to ``result`` in place and return it.

    Raises
    ------
    InfeasibleConstraint
        If the kernel condition at ``t0`` has no solution within ``feas_tol``
        (relative to the size of its right-hand side).
    """
    traj = result.trajectory
    k = result.order + 1
    n = traj.dim
    check_size(n, k)
    a0 = traj.blocks(traj.t0, k)
    terms = _kernel_terms(a0, k)
    m = terms[0]
    lower = [c for c in result.constants]
    rhs = -sum(comb(k - 1, j) * (lower[k - j - 1] @ terms[j]) for j in range(1, k))
    sol, *_ = np.linalg.lstsq(m.T, rhs.T, rcond=None)
    ck = sol.T
    resid = float(np.max(np.abs(ck @ m - rhs))) if rhs.size else 0.0
    scale = max(1.0, float(np.max(np.abs(rhs))) if rhs.size else 0.0)
    if resid > feas_tol * scale:
        raise InfeasibleConstraint(k, resid / scale, feas_tol)
    defect = 0.0
    ref = reference(k, traj.z0) if reference is not None else None
    if ref is not None:
        ref = np.asarray(ref, dtype=float)
        null_proj = np.eye(m.shape[0]) - m @ np.linalg.pinv(m)
        ck = ck + ref @ null_proj
        defect = float(np.max(np.abs(ck - ref)))

    count = ck.shape[0]
    d = dim_sym(n, k)

    def integrand(t):
        a = traj.blocks(t, k)
        acc = np.zeros((count, d))
        for j in range(2, k + 1):
            fj = result.block(k - j + 1, t)
            acc -= comb(k, j) * (fj @ id_power_product(a[j], k - j).entries)
        return (acc @ result._power(t, k)).ravel()

    quad = path_quadrature(traj, integrand, variable="t")
    result.constants.append(ck)
    result.quadratures.append(quad)
    result.anchor_defects.append(defect)
    result.feasibility.append(resid / scale)
    return result


def compute_jets(
    field: VectorField,
    z0: Sequence[float],
    t_span: tuple[float, float],
    order: int,
    pivot: int = 0,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    reference: ReferenceRows | None = None,
    base_value: Callable[[np.ndarray], np.ndarray] | None = None,
    feas_tol: float = 1e-8,
) -> JetResult:
    """Integrate the base solution and run the recursion up to ``order``.

    ``pivot`` is 0-based. ``reference`` switches on normalization; without it
    the raw degree-one rows and minimum-norm constants are used.
    """
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    check_size(field.dim, order)
    traj = integrate_base(field, z0, t_span, pivot=pivot, rtol=rtol, atol=atol)
    result = start_jets(traj, reference)
    for _ in range(2, order + 1):
        progressive_step(result, reference, feas_tol)
    if base_value is not None:
        result.base_values = np.asarray(base_value(traj.z0), dtype=float)
    return result
