"""Vector fields assembled from parsed component expressions."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..symblock import SymBlock
from .parser import Expression, parse
from .taylor import field_blocks


@dataclass(frozen=True)
class VectorField:
    """Autonomous field ``ż = X(z)`` given by one expression per component."""

    components: tuple[Expression, ...]

    @classmethod
    def from_strings(
        cls,
        texts: Sequence[str],
        variables: Sequence[str],
        params: Mapping[str, float] | None = None,
    ) -> "VectorField":
        if len(texts) != len(variables):
            raise ValueError(f"{len(texts)} components for {len(variables)} variables")
        return cls(tuple(parse(t, variables, params) for t in texts))

    @property
    def dim(self) -> int:
        return len(self.components)

    @property
    def variables(self) -> tuple[str, ...]:
        return self.components[0].variables

    @property
    def texts(self) -> tuple[str, ...]:
        return tuple(c.text for c in self.components)

    def __call__(self, z: Sequence) -> np.ndarray:
        return field_blocks(self.components, z, 0)[0].entries[:, 0]

    def blocks(self, z: Sequence, order: int) -> list[SymBlock]:
        """``[A_0, ..., A_order]`` at ``z``."""
        return field_blocks(self.components, z, order)

    def jacobian(self, z: Sequence) -> np.ndarray:
        return field_blocks(self.components, z, 1)[1].entries
