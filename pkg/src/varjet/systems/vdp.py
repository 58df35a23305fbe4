"""Scalar coefficients ``g_k`` of the Van der Pol formal first integral.

In the transformed coordinates the series is ``F = sum_k g_k(x) y^k / k!``
with ``g_1 = e^x``, ``g_k = 0`` for even ``k`` and, for odd ``k >= 3``,

    g_k(x) = e^{kx} ∫_{x0}^x (k-1) k (ξ-1) ξ² e^{-kξ} [(k-2) g_{k-2}(ξ) - ξ g'_{k-2}(ξ)] dξ.

The lower limit ``x0`` matches jets whose free constants vanish at ``t0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from scipy.integrate import quad, solve_ivp

RTOL = 1e-12
ATOL = 1e-14


@dataclass(frozen=True)
class GFunction:
    """``g_k`` and its derivative on an interval of ``x``."""

    k: int
    value: Callable[[float], float]
    derivative: Callable[[float], float]

    def __call__(self, x: float) -> float:
        return self.value(x)


def vdp_g1() -> GFunction:
    return GFunction(1, math.exp, math.exp)


def _zero(k: int) -> GFunction:
    return GFunction(k, lambda x: 0.0, lambda x: 0.0)


def vdp_g_step(prev: GFunction, k: int, x0: float, x1: float) -> GFunction:
    """``g_k`` from ``g_{k-2}`` on the ``x`` interval from ``x0`` to ``x1``.

    Even ``k`` returns the zero function. The integral is accumulated with
    dense output, so the result can be evaluated anywhere between ``x0``
    and ``x1``.
    """
    if k % 2 == 0:
        return _zero(k)
    if k < 3 or prev.k != k - 2:
        raise ValueError(f"vdp_g_step needs odd k >= 3 and g_(k-2); got k={k}, prev k={prev.k}")

    def integrand(xi):
        return (k - 1) * k * (xi - 1) * xi**2 * math.exp(-k * xi) * (
            (k - 2) * prev.value(xi) - xi * prev.derivative(xi))

    sol = solve_ivp(lambda xi, q: [integrand(xi)], (x0, x1), [0.0], method="RK45",
                    dense_output=True, rtol=RTOL, atol=ATOL)
    if sol.status != 0:
        raise RuntimeError(f"g_{k} quadrature failed: {sol.message}")

    def q(x):
        return 0.0 if x == x0 else float(sol.sol(x)[0])

    def value(x):
        return math.exp(k * x) * q(x)

    def derivative(x):
        return k * value(x) + math.exp(k * x) * integrand(x)

    return GFunction(k, value, derivative)


def vdp_g(k: int, x0: float, x1: float) -> GFunction:
    """``g_k`` by repeated :func:`vdp_g_step` from ``g_1``."""
    if k % 2 == 0:
        return _zero(k)
    g = vdp_g1()
    for j in range(3, k + 1, 2):
        g = vdp_g_step(g, j, x0, x1)
    return g


def vdp_G3(x: float, x0: float) -> float:
    """``G_3 = ∫_{x0}^x e^{-2ξ} (ξ-1)² ξ² dξ``."""
    return quad(lambda s: math.exp(-2 * s) * (s - 1) ** 2 * s**2, x0, x, epsabs=1e-15, epsrel=1e-13)[0]


def vdp_G5(x: float, x0: float) -> float:
    """``G_5 = ∫_{x0}^x (ξ-1)³ e^{-4ξ} ξ⁵ dξ + 3 ∫_{x0}^x (ξ-1)² e^{-2ξ} ξ² G_3(ξ) dξ``."""
    first = quad(lambda s: (s - 1) ** 3 * math.exp(-4 * s) * s**5, x0, x, epsabs=1e-15, epsrel=1e-13)[0]
    second = quad(lambda s: (s - 1) ** 2 * math.exp(-2 * s) * s**2 * vdp_G3(s, x0), x0, x,
                  epsabs=1e-15, epsrel=1e-13)[0]
    return first + 3 * second


def vdp_g_from_G(k: int, x: float, x0: float) -> float:
    """``g_k`` from the nested-quadrature form ``g_{2i+1} = (-1)^i (2i+1)! e^{(2i+1)x} G_{2i+1}``."""
    if k % 2 == 0:
        return 0.0
    big = {1: lambda: 1.0, 3: lambda: vdp_G3(x, x0), 5: lambda: vdp_G5(x, x0)}
    if k not in big:
        raise ValueError(f"nested-quadrature form available for k in (1, 3, 5), got {k}")
    i = (k - 1) // 2
    return (-1) ** i * math.factorial(k) * math.exp(k * x) * big[k]()


__all__ = ["GFunction", "vdp_g1", "vdp_g_step", "vdp_g", "vdp_G3", "vdp_G5", "vdp_g_from_G"]
