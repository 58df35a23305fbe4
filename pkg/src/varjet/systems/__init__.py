"""Built-in example systems, their reference jets and closed-form first integrals."""
from .catalog import (
    PARAMETERS,
    BuiltinSystem,
    DomainViolation,
    InvalidParameters,
    UnknownSystem,
    builtin,
    builtin_names,
)
from .special import hyp2f1, upper_inc_gamma
from .vdp import GFunction, vdp_G3, vdp_G5, vdp_g, vdp_g1, vdp_g_from_G, vdp_g_step


def closed_form_values(system: BuiltinSystem, state) -> list[float]:
    """Closed-form first integrals of ``system`` at ``state``."""
    return system.closed_form_values(state)


__all__ = [
    "PARAMETERS", "BuiltinSystem", "DomainViolation", "GFunction", "InvalidParameters",
    "UnknownSystem", "builtin", "builtin_names", "closed_form_values", "hyp2f1",
    "upper_inc_gamma", "vdp_G3", "vdp_G5", "vdp_g", "vdp_g1", "vdp_g_from_G", "vdp_g_step",
]
