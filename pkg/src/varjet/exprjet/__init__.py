"""Expression language for vector fields and their derivative blocks."""

from .field import VectorField
from .parser import GRAMMAR_VERSION, Expression, ParseError, parse
from .taylor import SingularEvaluation, TaylorValue, eval_taylor, evaluate, field_blocks

__all__ = [
    "GRAMMAR_VERSION",
    "Expression",
    "ParseError",
    "SingularEvaluation",
    "TaylorValue",
    "VectorField",
    "eval_taylor",
    "evaluate",
    "field_blocks",
    "parse",
]
