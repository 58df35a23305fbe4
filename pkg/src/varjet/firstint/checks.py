"""Admissibility checks, truncated-series evaluation and constancy scaling."""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from ..lve import dual_rhs, kernel_residual
from ..symblock import sym_vector_power
from ..transport import METHOD, Trajectory

RowsAt = Callable[[float], Sequence[np.ndarray]]

DEFAULT_EPS = (1e-1, 3e-2, 1e-2, 3e-3)


@dataclass(frozen=True)
class AdmissibilityReport:
    """Per-time, per-order residuals.

    ``kernel[t, k-1]`` is the relative kernel-condition residual and
    ``dual[t, k-1]`` the relative mismatch between a finite-difference
    derivative of the jet and the dual-system right-hand side.
    """

    times: np.ndarray
    kernel: np.ndarray
    dual: np.ndarray
    kernel_tol: float
    dual_tol: float

    @property
    def admissible(self) -> bool:
        return bool(np.all(self.kernel <= self.kernel_tol) and np.all(self.dual <= self.dual_tol))

    def worst(self) -> dict:
        ik = np.unravel_index(np.argmax(self.kernel), self.kernel.shape)
        idd = np.unravel_index(np.argmax(self.dual), self.dual.shape)
        return {
            "kernel": {"value": float(self.kernel[ik]), "time": float(self.times[ik[0]]), "order": int(ik[1]) + 1},
            "dual": {"value": float(self.dual[idd]), "time": float(self.times[idd[0]]), "order": int(idd[1]) + 1},
        }


def _fd_derivative(rows_at: RowsAt, t: float, h: float, lo: float, hi: float) -> list[np.ndarray]:
    """Second-order finite difference, one-sided near the ends of ``[lo, hi]``."""
    if t - h >= lo and t + h <= hi:
        a, b = rows_at(t - h), rows_at(t + h)
        return [(y - x) / (2 * h) for x, y in zip(a, b)]
    s = 1.0 if t - h < lo else -1.0
    f0, f1, f2 = rows_at(t), rows_at(t + s * h), rows_at(t + 2 * s * h)
    return [s * (-3 * x + 4 * y - z) / (2 * h) for x, y, z in zip(f0, f1, f2)]


def admissibility_check(
    rows_at: RowsAt,
    traj: Trajectory,
    times: Sequence[float] | None = None,
    kernel_tol: float = 1e-8,
    dual_tol: float = 1e-5,
    step: float | None = None,
) -> AdmissibilityReport:
    """Kernel residuals and a finite-difference check of the dual system.

    The finite-difference mismatch at each order is
    ``||Δf_k/Δt - rhs_k||_inf / max(||rhs_k||_inf, ||f_k||_inf * |span|^{-1} * 1e-3, tiny)``.
    """
    times = traj.sample_times(10) if times is None else np.asarray(times, dtype=float)
    lo, hi = sorted((traj.t0, traj.t_end))
    span = hi - lo
    h = step if step is not None else 1e-4 * max(span, 1e-3)
    order = len(rows_at(times[0]))
    kern = np.zeros((len(times), order))
    dual = np.zeros((len(times), order))
    for it, t in enumerate(times):
        rows = [np.asarray(r) for r in rows_at(t)]
        a = traj.blocks(t, order)
        kern[it] = kernel_residual(rows, a, relative=True)
        rhs = dual_rhs(rows, a)
        fd = _fd_derivative(rows_at, t, h, lo, hi)
        for k in range(order):
            scale = max(np.max(np.abs(rhs[k])), np.max(np.abs(rows[k])) * 1e-3 / max(span, 1e-3), 1e-300)
            dual[it, k] = np.max(np.abs(fd[k] - rhs[k])) / scale
    return AdmissibilityReport(times, kern, dual, kernel_tol, dual_tol)


def evaluate_truncated(rows: Sequence[np.ndarray], xi: Sequence[float], base_value: float = 0.0) -> float:
    """``f^0 + sum_k (1/k!) f_k · ξ^{⊙k}``."""
    xi = np.asarray(xi, dtype=float)
    total = base_value
    for k, row in enumerate(rows, start=1):
        total += float(np.dot(row, sym_vector_power(xi, k))) / factorial(k)
    return total


@dataclass(frozen=True)
class ScalingReport:
    """Drift of the truncated series along perturbed trajectories.

    ``drift[d, e]`` is the maximum over the time grid of
    ``|E(t) - E(t0)|`` for direction ``d`` and amplitude ``eps[e]``.
    """

    eps: np.ndarray
    directions: np.ndarray
    drift: np.ndarray
    slopes: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def min_slope(self) -> float:
        return float(np.min(self.slopes))

    @property
    def max_drift(self) -> float:
        return float(np.max(self.drift))


def loglog_slope(eps: Sequence[float], drift: Sequence[float]) -> float:
    """Least-squares slope of ``log drift`` against ``log eps``; ``inf`` if any drift is zero."""
    drift = np.asarray(drift, dtype=float)
    if np.any(drift <= 0):
        return float("inf")
    return float(np.polyfit(np.log(eps), np.log(drift), 1)[0])


def constancy_scaling(
    rows_at: RowsAt,
    traj: Trajectory,
    directions: Sequence[Sequence[float]],
    eps: Sequence[float] = DEFAULT_EPS,
    samples: int = 41,
    rtol: float = 1e-13,
    atol: float = 1e-15,
) -> ScalingReport:
    """Measure how fast the truncated series drifts along nearby trajectories.

    Each perturbed solution starts at ``φ(t0) + ε ξ`` and is integrated
    together with a fresh copy of the base solution, so the offset
    ``ψ(t) - φ(t)`` is resolved at the tight tolerances given here. An
    admissible order-``K`` jet drifts like ``ε^{K+1}``.

    Raises
    ------
    RuntimeError
        If a perturbed trajectory leaves the domain of the field.
    """
    field_fn = traj.field
    n = traj.dim
    times = np.linspace(traj.t0, traj.t_end, samples)
    rows_cache = [rows_at(t) for t in times]
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    eps = np.asarray(eps, dtype=float)
    drift = np.zeros((len(dirs), len(eps)))

    def rhs(t, y):
        phi, off = y[:n], y[n:]
        v = field_fn(phi)
        return np.concatenate([v, field_fn(phi + off) - v])

    for d, xi in enumerate(dirs):
        for e, amp in enumerate(eps):
            y0 = np.concatenate([traj.z0, amp * xi])
            sol = solve_ivp(rhs, (traj.t0, traj.t_end), y0, method=METHOD, t_eval=times,
                            rtol=rtol, atol=atol)
            if sol.status != 0 or not np.all(np.isfinite(sol.y)):
                raise RuntimeError(f"perturbed trajectory (eps={amp}, direction {d}) failed: {sol.message}")
            vals = np.array([evaluate_truncated(rows_cache[i], sol.y[n:, i]) for i in range(len(times))])
            drift[d, e] = np.max(np.abs(vals - vals[0]))
    slopes = np.array([loglog_slope(eps, drift[d]) for d in range(len(dirs))])
    return ScalingReport(eps, dirs, drift, slopes)
