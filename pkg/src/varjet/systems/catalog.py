"""Built-in example systems in simplifying coordinates.

Each system stores its transformed field, the map back to the original
coordinates together with the original field, the particular solution the
jets are taken along, reference first-integral expressions whose Taylor
blocks are the expected jets, and closed-form first integrals where known.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from ..exprjet import Expression, VectorField, eval_taylor, parse
from .special import hyp2f1, upper_inc_gamma


class UnknownSystem(KeyError):
    """No built-in system has the requested name."""


class InvalidParameters(ValueError):
    """Parameter values outside the range a built-in supports."""


class DomainViolation(ValueError):
    """A closed form was evaluated outside its domain."""


@dataclass(frozen=True)
class BuiltinSystem:
    """A fully populated example system.

    Attributes
    ----------
    variables, field
        Transformed coordinates and the field in them.
    original_variables, original_field, untransform
        Original coordinates, the original field, and the original
        coordinates as expressions of the transformed ones.
    z0, t_span, pivot
        Particular solution: initial state, time span and 0-based pivot.
    base_ode
        The reduced scalar equation the particular solution obeys.
    references, reference_order
        One expression per first integral; its order-``k`` Taylor block at a
        point of the trajectory is the expected jet for ``k <= reference_order``.
    closed_forms
        Names of the closed-form first integrals, in the order returned by
        :meth:`closed_form_values`.
    closed_form_state
        A default initial state (off the particular solution) at which the
        closed forms are defined.
    """

    name: str
    description: str
    params: Mapping[str, float]
    variables: tuple[str, ...]
    field: VectorField
    original_variables: tuple[str, ...]
    original_field: VectorField
    untransform: VectorField
    z0: tuple[float, ...]
    t_span: tuple[float, float]
    pivot: int
    base_ode: str
    references: tuple[Expression, ...] = ()
    reference_order: int = 0
    closed_forms: tuple[str, ...] = ()
    closed_form_state: tuple[float, ...] | None = None
    _closed: Callable[[np.ndarray], list[float]] | None = field(default=None, repr=False)
    _base: Callable[[float], np.ndarray] | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.field.dim

    def reference_rows(self, k: int, state) -> np.ndarray | None:
        """Order-``k`` reference rows at ``state`` (one per integral), or ``None``."""
        if not self.references or k > self.reference_order:
            return None
        return np.array([eval_taylor(e, state, k).block(k) for e in self.references])

    def reference_value(self, state) -> np.ndarray:
        return np.array([eval_taylor(e, state, 0).value for e in self.references])

    def base_solution(self, t: float) -> np.ndarray:
        """Exact particular solution at time ``t``."""
        return self._base(t)

    def closed_form_values(self, state) -> list[float]:
        """Closed-form first integrals at ``state`` (transformed coordinates).

        Raises
        ------
        DomainViolation
            If ``state`` is outside the domain of a closed form.
        """
        if self._closed is None:
            return []
        return self._closed(np.asarray(state, dtype=float))

    def to_original(self, state) -> np.ndarray:
        return self.untransform(state)

    def pushforward_residual(self, state) -> float:
        """``||DM(z) X(z) - X_orig(M(z))||_inf`` for the untransform map ``M``."""
        push = self.untransform.jacobian(state) @ self.field(state)
        return float(np.max(np.abs(push - self.original_field(self.untransform(state)))))


# name -> (parameter defaults, description)
PARAMETERS: dict[str, dict[str, float]] = {
    "dixon": {"alpha": 3.0},
    "sir_gamma0": {"beta": 2.0, "mu": 1.0, "n": 1.0},
    "sir_mu0": {"beta": 1.0, "gamma": 1.0, "n": 1.0},
    "vanderpol": {"mu": 2.0},
}

DESCRIPTIONS = {
    "dixon": "Dixon's system with alpha = beta in coordinates (u, v) = (sin y / x, cos y / x)",
    "sir_gamma0": "SIR with vital dynamics, gamma = 0, in coordinates making x' = -mu x on y = z = 0",
    "sir_mu0": "SIR without vital dynamics, beta = gamma, in coordinates (S, I, R) = (n(1+xy), -ny, gamma n z)",
    "vanderpol": "Van der Pol oscillator, mu = 2, in coordinates (u, v) = (xy, (x-1)y)/sqrt(2)",
}


def _resolve(name: str, params: Mapping[str, float] | None) -> dict[str, float]:
    defaults = PARAMETERS[name]
    given = dict(params or {})
    unknown = sorted(set(given) - set(defaults))
    if unknown:
        raise InvalidParameters(
            f"{name}: unknown parameter(s) {', '.join(unknown)}; expected {', '.join(defaults)}")
    out = {**defaults, **{k: float(v) for k, v in given.items()}}
    for key, value in out.items():
        if not math.isfinite(value):
            raise InvalidParameters(f"{name}: parameter {key} must be finite, got {value}")
    return out


def _dixon(p: dict) -> BuiltinSystem:
    a = p["alpha"]
    if a <= 0:
        raise InvalidParameters(f"dixon: alpha must be positive, got {a}")
    if a == 1:
        raise InvalidParameters("dixon: alpha = 1 is solvable directly and has no jet data")
    v = ("x", "y")
    fld = VectorField.from_strings(["alpha*x*(1 - x*cos(y))", "-(alpha - 1)*x*sin(y)"], v, p)
    g1 = "(1 - x)^(1/alpha - 1)"
    g3 = "(1 - x)^(1/alpha - 2)*(2*alpha + (alpha - 2)*x - 1)/(alpha - 2)"
    g5 = ("-(1 - x)^(1/alpha - 3)*(-(alpha - 2)*x*((alpha - 2)*(3*alpha - 4)*x"
          " + alpha*(39*alpha - 55) + 14) + alpha*(2*(53 - 24*alpha)*alpha - 73) + 16)"
          "/((alpha - 2)^2*(3*alpha - 4))")
    # The g3 and g5 expressions have poles at alpha = 2 and alpha = 4/3.
    if a == 2:
        ref, order = f"{g1}*y", 2
    elif a == 4 / 3:
        ref, order = f"{g1}*y + {g3}*y^3/6", 4
    else:
        ref, order = f"{g1}*y + {g3}*y^3/6 + {g5}*y^5/120", 6
    x0 = 0.5

    def closed(z):
        x, y = z
        s, c = math.sin(y), math.cos(y)
        if s <= 0 or c * c >= 1:
            raise DomainViolation(f"dixon closed form needs sin(y) > 0, got y = {y}")
        return [x * s ** (a / (1 - a))
                - a * c / (a - 1) * hyp2f1(0.5, a / (2 * (a - 1)) + 1, 1.5, c * c)]

    def base(t):
        return np.array([1.0 / (1.0 + (1.0 / x0 - 1.0) * math.exp(-a * t)), 0.0])

    return BuiltinSystem(
        name="dixon", description=DESCRIPTIONS["dixon"], params=p, variables=v, field=fld,
        original_variables=("u", "v"),
        original_field=VectorField.from_strings(
            ["u*v/(u^2 + v^2) - alpha*u", "v^2/(u^2 + v^2) - alpha*v + alpha - 1"], ("u", "v"), p),
        untransform=VectorField.from_strings(["sin(y)/x", "cos(y)/x"], v, p),
        z0=(x0, 0.0), t_span=(0.0, 2.0), pivot=0,
        base_ode="x' = alpha*x*(1 - x), y = 0",
        references=(parse(ref, v, p),), reference_order=order - 1,
        closed_forms=("f",), closed_form_state=(0.5, 1.0),
        _closed=closed, _base=base,
    )


def _sir_gamma0(p: dict) -> BuiltinSystem:
    beta, mu, n = p["beta"], p["mu"], p["n"]
    if beta == 0 or mu == 0:
        raise InvalidParameters(f"sir_gamma0: beta and mu must be nonzero, got beta={beta}, mu={mu}")
    if n <= 0:
        raise InvalidParameters(f"sir_gamma0: population n must be positive, got {n}")
    v = ("x", "y", "z")
    fld = VectorField.from_strings(
        ["-mu*x*(y^2*(x^(-beta/mu) + 1) + n)/n", "-mu*y/2", "0"], v, p)
    if beta != mu:
        f_ref = "y/sqrt(x) + y^3*(-mu*x^(-beta/mu) + beta - mu)/(2*(beta - mu)*n*sqrt(x))"
        order = 3
    else:
        f_ref, order = "y/sqrt(x)", 2
    u = beta / mu
    x0 = 1.0

    def closed(state):
        x, y, z = state
        w = u * y * y / n
        if x <= 0 or w <= 0:
            raise DomainViolation(
                f"sir_gamma0 closed form needs x > 0 and beta*y^2/(mu*n) > 0, got x={x}, y={y}")
        bracket = math.exp(w) * w**u * upper_inc_gamma(1 - u, w) + x**u
        if bracket <= 0:
            raise DomainViolation(f"sir_gamma0 closed form: nonpositive base {bracket:.3e}")
        return [y * math.exp(y * y / (2 * n)) / bracket ** (1 / (2 * u)), z]

    return BuiltinSystem(
        name="sir_gamma0", description=DESCRIPTIONS["sir_gamma0"], params=p, variables=v, field=fld,
        original_variables=("S", "I", "R"),
        original_field=VectorField.from_strings(
            ["mu*(n - S) - beta*S*I/n", "beta*S*I/n - I*mu", "-mu*R"], ("S", "I", "R"), p),
        untransform=VectorField.from_strings(
            ["y^2*(x^(-beta/mu) + 1) + n", "-x^(-beta/mu)*y^2", "y^2*z"], v, p),
        z0=(x0, 0.0, 0.0), t_span=(0.0, 1.5), pivot=0,
        base_ode="x' = -mu*x, y = z = 0",
        references=(parse(f_ref, v, p), parse("z", v, p)), reference_order=order,
        closed_forms=("f", "g"), closed_form_state=(1.0, 0.1, 0.2),
        _closed=closed, _base=lambda t: np.array([x0 * math.exp(-mu * t), 0.0, 0.0]),
    )


def _sir_mu0(p: dict) -> BuiltinSystem:
    beta, gamma, n = p["beta"], p["gamma"], p["n"]
    if beta != gamma:
        raise InvalidParameters(f"sir_mu0: requires beta = gamma, got beta={beta}, gamma={gamma}")
    if gamma == 0:
        raise InvalidParameters("sir_mu0: gamma must be nonzero")
    if n <= 0:
        raise InvalidParameters(f"sir_mu0: population n must be positive, got {n}")
    v = ("x", "y", "z")
    fld = VectorField.from_strings(["gamma - gamma*(x - 1)*x*y", "gamma*x*y^2", "-y"], v, p)
    refs = ("-x*y + log(x*y + 1) + y", "log(x*y + 1)/gamma + z")
    x0 = 0.5

    def closed(state):
        x, y, z = state
        if x * y + 1 <= 0:
            raise DomainViolation(f"sir_mu0 closed forms need x*y + 1 > 0, got {x * y + 1}")
        lg = math.log(x * y + 1)
        return [-x * y + lg + y, lg / gamma + z]

    return BuiltinSystem(
        name="sir_mu0", description=DESCRIPTIONS["sir_mu0"], params=p, variables=v, field=fld,
        original_variables=("S", "I", "R"),
        original_field=VectorField.from_strings(
            ["-beta*S*I/n", "beta*S*I/n - gamma*I", "gamma*I"], ("S", "I", "R"), p),
        untransform=VectorField.from_strings(["n*(1 + x*y)", "-n*y", "gamma*n*z"], v, p),
        z0=(x0, 0.0, 0.0), t_span=(0.0, 1.0), pivot=0,
        base_ode="x' = gamma, y = z = 0",
        references=tuple(parse(r, v, p) for r in refs), reference_order=10**6,
        closed_forms=("f", "g"), closed_form_state=(0.5, -0.2, 0.1),
        _closed=closed, _base=lambda t: np.array([x0 + gamma * t, 0.0, 0.0]),
    )


def _vanderpol(p: dict) -> BuiltinSystem:
    if p["mu"] != 2:
        raise InvalidParameters(
            f"vanderpol: the built-in is fixed at mu = 2 (got {p['mu']}); "
            "supply other values as an inline system")
    v = ("x", "y")
    fld = VectorField.from_strings(["-(x - 1)*x^3*y^2 - 1", "(x - 1)*x^2*y^3 + y"], v, p)
    x0 = 2.0
    return BuiltinSystem(
        name="vanderpol", description=DESCRIPTIONS["vanderpol"], params=p, variables=v, field=fld,
        original_variables=("u", "v"),
        original_field=VectorField.from_strings(["v", "mu*(1 - u^2)*v - u"], ("u", "v"), p),
        untransform=VectorField.from_strings(["x*y/sqrt(2)", "(x - 1)*y/sqrt(2)"], v, p),
        z0=(x0, 0.0), t_span=(0.0, 1.0), pivot=0,
        base_ode="x' = -1, y = 0",
        references=(parse("y*exp(x)", v, p),), reference_order=1,
        _base=lambda t: np.array([x0 - t, 0.0]),
    )


_BUILDERS = {
    "dixon": _dixon,
    "sir_gamma0": _sir_gamma0,
    "sir_mu0": _sir_mu0,
    "vanderpol": _vanderpol,
}


def builtin_names() -> tuple[str, ...]:
    return tuple(_BUILDERS)


def builtin(name: str, params: Mapping[str, float] | None = None) -> BuiltinSystem:
    """Construct a built-in system.

    Raises
    ------
    UnknownSystem
        If ``name`` is not a built-in.
    InvalidParameters
        If a parameter is unknown or outside the supported range.
    """
    if name not in _BUILDERS:
        raise UnknownSystem(f"unknown built-in {name!r}; choose from {', '.join(_BUILDERS)}")
    return _BUILDERS[name](_resolve(name, params))
