"""Double-precision ₂F₁ and upper incomplete Γ for the closed-form first integrals."""
from __future__ import annotations

import math

REL_STOP = 1e-14
MAX_TERMS = 100000
# Direct series below this |z|; above it the 1 - z connection formula is used
# whenever c - a - b is not an integer.
CONNECT_ABOVE = 0.5


def _nonpositive_int(c: float) -> bool:
    return c <= 0 and float(c).is_integer()


def _series(a: float, b: float, c: float, z: float) -> float:
    term, total = 1.0, 1.0
    for k in range(MAX_TERMS):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1)) * z
        total += term
        if term == 0.0 or abs(term) <= REL_STOP * abs(total):
            return total
    raise ArithmeticError(f"2F1({a}, {b}; {c}; {z}) series did not converge in {MAX_TERMS} terms")


def hyp2f1(a: float, b: float, c: float, z: float) -> float:
    """Gauss hypergeometric function ``₂F₁(a, b; c; z)`` for real ``|z| < 1``.

    Power series with term-ratio stopping at relative ``1e-14``. For
    ``z > 0.5`` the series in ``1 - z`` is used instead when ``c - a - b`` is
    not an integer, since the direct series converges slowly there.

    Raises
    ------
    ValueError
        If ``|z| >= 1`` or ``c`` is a non-positive integer.
    """
    if not abs(z) < 1:
        raise ValueError(f"hyp2f1 needs |z| < 1, got z = {z}")
    if _nonpositive_int(c):
        raise ValueError(f"hyp2f1 undefined for non-positive integer c = {c}")
    s = c - a - b
    if z > CONNECT_ABOVE and not float(s).is_integer():
        w = 1.0 - z
        g = math.gamma
        first = 0.0
        if not (_nonpositive_int(c - a) or _nonpositive_int(c - b)):
            first = g(c) * g(s) / (g(c - a) * g(c - b)) * _series(a, b, 1.0 - s, w)
        second = 0.0
        if not (_nonpositive_int(a) or _nonpositive_int(b)):
            second = w**s * g(c) * g(-s) / (g(a) * g(b)) * _series(c - a, c - b, s + 1.0, w)
        return first + second
    return _series(a, b, c, z)


def _lower_series(s: float, x: float) -> float:
    """``γ(s, x)`` for ``s > 0``."""
    term = 1.0 / s
    total = term
    for k in range(1, MAX_TERMS):
        term *= x / (s + k)
        total += term
        if term <= REL_STOP * total:
            break
    return total * math.exp(-x + s * math.log(x))


def _upper_cf(s: float, x: float) -> float:
    """``Γ(s, x)`` by the modified Lentz continued fraction."""
    tiny = 1e-300
    b = x + 1.0 - s
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, MAX_TERMS):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        d = tiny if abs(d) < tiny else d
        c = b + an / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) <= REL_STOP:
            break
    return h * math.exp(-x + s * math.log(x))


def _e1(x: float) -> float:
    """Exponential integral ``E_1(x) = Γ(0, x)``."""
    if x >= 1.0:
        return _upper_cf(0.0, x)
    total, term = 0.0, 1.0
    for k in range(1, MAX_TERMS):
        term *= -x / k
        total += term / k
        if abs(term / k) <= REL_STOP * abs(total):
            break
    return -0.5772156649015329 - math.log(x) - total


def upper_inc_gamma(s: float, x: float) -> float:
    """Upper incomplete gamma ``Γ(s, x) = ∫_x^∞ t^{s-1} e^{-t} dt`` for ``x > 0``.

    The continued fraction is used when ``x >= max(s + 1, 1)``. Otherwise,
    for ``s > 0``, ``Γ(s) - γ(s, x)`` comes from the lower series, and for
    ``s <= 0`` the value is obtained from
    ``Γ(s + m, x)`` with ``s + m`` in ``(0, 1)`` (or from ``E_1`` for integer
    ``s``) through ``Γ(s, x) = (Γ(s + 1, x) - x^s e^{-x}) / s``.

    Raises
    ------
    ValueError
        If ``x <= 0``.
    """
    if not x > 0:
        raise ValueError(f"upper_inc_gamma needs x > 0, got x = {x}")
    if x >= max(s + 1.0, 1.0):
        return _upper_cf(s, x)
    if s > 0:
        return math.gamma(s) - _lower_series(s, x)
    if float(s).is_integer():
        top, value = 0.0, _e1(x)
    else:
        top = s + math.ceil(-s)
        value = upper_inc_gamma(top, x)
    # Downward recurrence from ``top`` to ``s``.
    a = top
    while a > s + 0.5:
        a -= 1.0
        value = (value - math.exp(-x + a * math.log(x))) / a
    return value
