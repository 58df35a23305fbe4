"""Numerical transport along a particular solution.

The base solution, the variational flows ``Y_1..Y_K`` and path quadratures are
integrated with an adaptive Dormand-Prince 5(4) pair and evaluated through its
dense output. Each later quantity is integrated in its own pass, reading the
earlier ones from their interpolants, so computing more orders never changes
the lower ones.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import OdeSolution, solve_ivp

from .exprjet import VectorField
from .multiidx import dim_sym
from .symblock import (
    JetStrip,
    SymBlock,
    TriangularTruncation,
    sym_exp_strip,
    zeros_block,
)

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12
METHOD = "RK45"
# The base solution is integrated this much tighter than the later stages;
# every stage reads φ(t) through its interpolant, and near equilibria the jets
# amplify errors in φ.
BASE_REFINE = 1e-2


class IntegrationError(RuntimeError):
    """The integrator could not cover the requested span."""


class PivotVanishing(IntegrationError):
    """The pivot component of the field vanished on the trajectory."""

    def __init__(self, t: float, pivot: int, value: float):
        self.t = t
        self.pivot = pivot
        self.value = value
        super().__init__(
            f"pivot component X_{pivot + 1} vanishes at t = {t:.10g} (value {value:.3e})"
        )


@dataclass(frozen=True)
class Trajectory:
    """Integrated particular solution with dense output.

    ``pivot`` is 0-based.
    """

    field: VectorField
    z0: np.ndarray
    t0: float
    t_end: float
    pivot: int
    solution: OdeSolution = field(repr=False)
    steps: np.ndarray = field(repr=False)
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL

    @property
    def dim(self) -> int:
        return len(self.z0)

    def phi(self, t) -> np.ndarray:
        if t == self.t0:
            return self.z0.copy()
        return self.solution(t)

    def velocity(self, t) -> np.ndarray:
        return self.field(self.phi(t))

    def pivot_velocity(self, t) -> float:
        return self.velocity(t)[self.pivot]

    def blocks(self, t, order: int) -> list[SymBlock]:
        return self.field.blocks(self.phi(t), order)

    def sample_times(self, count: int) -> np.ndarray:
        return np.linspace(self.t0, self.t_end, count)


def _run(rhs, t0, t_end, y0, rtol, atol, what: str, events=None):
    sol = solve_ivp(rhs, (t0, t_end), y0, method=METHOD, dense_output=True,
                    rtol=rtol, atol=atol, events=events)
    if sol.status == -1:
        raise IntegrationError(f"{what}: {sol.message}")
    return sol


def integrate_base(
    field: VectorField,
    z0: Sequence[float],
    t_span: tuple[float, float],
    pivot: int = 0,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    refine: float = BASE_REFINE,
) -> Trajectory:
    """Integrate ``ż = X(z)`` from ``z0`` over ``t_span``.

    The base solution itself is integrated at ``refine * (rtol, atol)``;
    ``rtol`` and ``atol`` are stored on the trajectory for the later stages.

    Raises
    ------
    PivotVanishing
        If ``X_pivot`` is zero at ``z0`` or changes sign along the path.
    IntegrationError
        On step-size failure.
    """
    z0 = np.asarray(z0, dtype=float)
    if z0.shape != (field.dim,):
        raise ValueError(f"initial state has shape {z0.shape}, expected ({field.dim},)")
    if not 0 <= pivot < field.dim:
        raise ValueError(f"pivot index {pivot} outside 0..{field.dim - 1}")
    t0, t_end = map(float, t_span)
    v0 = field(z0)[pivot]
    if v0 == 0 or not np.isfinite(v0):
        raise PivotVanishing(t0, pivot, float(v0))

    def rhs(t, z):
        return field(z)

    def pivot_event(t, z):
        return field(z)[pivot]

    pivot_event.terminal = True
    sol = _run(rhs, t0, t_end, z0, rtol * refine, atol * refine, "base solution",
               events=[pivot_event])
    if sol.status == 1:
        te = float(sol.t_events[0][0])
        raise PivotVanishing(te, pivot, float(field(sol.y_events[0][0])[pivot]))
    return Trajectory(field, z0, t0, t_end, pivot, sol.sol, sol.t, rtol, atol)


@dataclass(frozen=True)
class VariationalFlow:
    """Dense outputs for ``Y_1(t), ..., Y_K(t)`` with ``Y_1(t0) = Id`` and ``Y_k(t0) = 0``."""

    trajectory: Trajectory
    stages: tuple[OdeSolution, ...] = field(repr=False)

    @property
    def order(self) -> int:
        return len(self.stages)

    @property
    def dim(self) -> int:
        return self.trajectory.dim

    def y(self, k: int, t) -> np.ndarray:
        n = self.dim
        if t == self.trajectory.t0:
            return np.eye(n) if k == 1 else np.zeros((n, dim_sym(n, k)))
        return self.stages[k - 1](t).reshape(n, dim_sym(n, k))

    def y1_inv(self, t) -> np.ndarray:
        return np.linalg.inv(self.y(1, t))

    def strip(self, t, order: int | None = None) -> JetStrip:
        k = self.order if order is None else order
        n = self.dim
        return JetStrip((zeros_block(1, 0, n),)
                        + tuple(SymBlock(1, j, n, n, self.y(j, t)) for j in range(1, k + 1)))

    def upsilon(self, t, order: int | None = None) -> TriangularTruncation:
        """``Υ_K(t) = exp⊙ Y`` truncated at order ``K``."""
        return sym_exp_strip(self.strip(t, order))


def _z_column_without_top(a_blocks, strip: JetStrip, k: int) -> np.ndarray:
    """``sum_{s=2}^k A_s Z_{s,k}``, which only involves ``Y_1..Y_{k-1}``."""
    z = sym_exp_strip(strip, k)
    acc = np.zeros((strip.dim, dim_sym(strip.dim, k)))
    for s in range(2, k + 1):
        acc += a_blocks[s].entries @ z.block(s, k).entries
    return acc


def integrate_variational(
    traj: Trajectory,
    order: int,
    previous: VariationalFlow | None = None,
) -> VariationalFlow:
    """Integrate ``Ẏ_k = A_1 Y_k + sum_{s>=2} A_s Z_{s,k}`` order by order.

    ``previous`` lets an existing lower-order flow be extended without
    recomputing its stages.
    """
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    n = traj.dim
    stages = list(previous.stages[:order]) if previous is not None else []
    for k in range(len(stages) + 1, order + 1):
        lower = VariationalFlow(traj, tuple(stages))
        d = dim_sym(n, k)

        if k == 1:
            def rhs(t, y):
                a1 = traj.field.jacobian(traj.phi(t))
                return (a1 @ y.reshape(n, n)).ravel()
            y0 = np.eye(n).ravel()
        else:
            def rhs(t, y, k=k, d=d, lower=lower):
                a = traj.blocks(t, k)
                strip = JetStrip(lower.strip(t).blocks + (zeros_block(1, k, n),))
                inhom = _z_column_without_top(a, strip, k)
                return (a[1].entries @ y.reshape(n, d) + inhom).ravel()
            y0 = np.zeros(n * d)
        sol = _run(rhs, traj.t0, traj.t_end, y0, traj.rtol, traj.atol, f"variational order {k}")
        stages.append(sol.sol)
    return VariationalFlow(traj, tuple(stages))


@dataclass(frozen=True)
class Quadrature:
    """Dense accumulated integral ``q(t) = ∫_{t0}^t g``."""

    t0: float
    solution: OdeSolution = field(repr=False)
    size: int = 0

    def __call__(self, t) -> np.ndarray:
        if t == self.t0:
            return np.zeros(self.size)
        return self.solution(t)


def path_quadrature(
    traj: Trajectory,
    integrand: Callable[[float], np.ndarray],
    variable: str = "t",
    rtol: float | None = None,
    atol: float | None = None,
) -> Quadrature:
    """Accumulate ``∫ g dt`` or, with ``variable="pivot"``, ``∫ g dz_i = ∫ g X_i(φ(t)) dt``."""
    if variable not in ("t", "pivot"):
        raise ValueError(f"variable must be 't' or 'pivot', got {variable!r}")
    g0 = np.atleast_1d(np.asarray(integrand(traj.t0), dtype=float))
    size = g0.size

    if variable == "t":
        def rhs(t, q):
            return np.atleast_1d(integrand(t)).astype(float)
    else:
        def rhs(t, q):
            return np.atleast_1d(integrand(t)).astype(float) * traj.pivot_velocity(t)
    sol = _run(rhs, traj.t0, traj.t_end, np.zeros(size),
               traj.rtol if rtol is None else rtol,
               traj.atol if atol is None else atol, "path quadrature")
    return Quadrature(traj.t0, sol.sol, size)
