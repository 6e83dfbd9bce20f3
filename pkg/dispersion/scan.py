from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np


@dataclass(frozen=True)
class DispersionRoot:
    """A refined zero of D(z_m, lambda)."""
    lam: float
    derivative: float
    simple: bool
    bracket: Tuple[float, float]


@dataclass(frozen=True)
class SkippedPoint:
    lam: float
    note: str


@dataclass(frozen=True, eq=False)
class DispersionScan:
    """
    D(z_m, lambda) on a log-spaced lambda grid with the refined roots.

    Skipped grid points carry NaN in d_values and an entry in skipped.
    """
    lambda_grid: np.ndarray
    d_values: np.ndarray
    z_m: float
    roots: List[DispersionRoot] = field(default_factory=list)
    skipped: List[SkippedPoint] = field(default_factory=list)

    @property
    def values(self) -> np.ndarray:
        return np.array([root.lam for root in self.roots])

    def as_columns(self) -> Dict[str, np.ndarray]:
        evaluated = np.isfinite(self.d_values)
        return {'lambda': self.lambda_grid[evaluated], 'D': self.d_values[evaluated]}
