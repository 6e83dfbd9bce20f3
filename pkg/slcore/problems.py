"""
Domain types for weighted Sturm-Liouville problems

    -(a w')' + b w = Lambda kappa w   on (0, L)

with a regular (Dirichlet or Robin) end at 0 and a regular or singular end at L,
together with their Liouville normal form -v'' + q v = Lambda v on (0, zeta_plus).
"""
from dataclasses import dataclass, field
from typing import Callable, Optional
import math

import numpy as np

from common.utils import sign_changes

Coefficient = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SingularEnd:
    """
    Leading powers of the coefficients in s = L - z at the singular end:
    a ~ s**a_power, kappa ~ s**kappa_power.
    """
    a_power: float
    kappa_power: float
    b_power: Optional[float] = None

    @property
    def exponent(self) -> float:
        """zeta_plus - zeta ~ s**exponent."""
        return 0.5 * (self.kappa_power - self.a_power) + 1.0

    @property
    def beta(self) -> float:
        return (self.a_power + self.kappa_power) / (4.0 * self.exponent)

    @property
    def cq(self) -> float:
        """Limit of q (zeta_plus - zeta)**2."""
        return self.beta * (self.beta - 1.0)

    @property
    def natural(self) -> bool:
        """True when a vanishes at the end, so no boundary value is imposed there."""
        return self.a_power > 0.0

    def describe(self):
        return {'a_power': self.a_power, 'kappa_power': self.kappa_power, 'cq': self.cq}


@dataclass(frozen=True)
class SLProblem:
    """
    Weighted Sturm-Liouville problem.

    The coefficient callables are vectorized and must extend smoothly slightly
    below z = 0. A regular right end is also sampled slightly beyond z = L; a
    singular one never at or beyond it.

    Attributes:
        a: Leading coefficient, positive on (0, L)
        b: Potential-like term
        kappa: Weight, positive on (0, L)
        length: Domain length L
        right_end: Singular descriptor, or None for a regular Dirichlet end
        robin: Left condition w'(0) = robin * w(0); None means w(0) = 0
        name: Label used in logs and exports
    """
    a: Coefficient
    b: Coefficient
    kappa: Coefficient
    length: float
    right_end: Optional[SingularEnd] = None
    robin: Optional[float] = None
    name: str = 'problem'

    @property
    def singular(self) -> bool:
        return self.right_end is not None

    def coefficients(self, z):
        z = np.asarray(z, dtype=float)
        return (
            np.broadcast_to(self.a(z), z.shape).astype(float),
            np.broadcast_to(self.b(z), z.shape).astype(float),
            np.broadcast_to(self.kappa(z), z.shape).astype(float),
        )


@dataclass(frozen=True)
class MeshSpec:
    """Graded mesh and Richardson refinement settings for the finite-difference oracle."""
    cells: int = 400
    power: Optional[float] = None
    refinements: int = 2
    tolerance: float = 1e-2

    def grading(self, problem: SLProblem) -> float:
        if self.power is not None:
            return self.power
        return 2.0 if problem.singular else 1.0


@dataclass(frozen=True)
class SchrodingerForm:
    """
    Liouville normal form -v'' + q v = Lambda v on (0, zeta_plus).

    Attributes:
        zeta_plus: Transformed domain length
        q: Vectorized potential in zeta
        cq: Singular strength lim q (zeta_plus - zeta)**2, None for a regular end
        q_first: Coefficient of the 1/(zeta_plus - zeta) term of q
        zeta_of_z: Map z -> zeta
        z_of_zeta: Inverse map
        weight_quarter: Multiplier m(z) = (a kappa)**(1/4) with v = m w
        k0: Form-bound shift
        k1: Form-bound singular constant, 3/4 < k1 < cq
        left_slope: Left condition v'(0) = left_slope * v(0); None means v(0) = 0
        problem: Source problem, if any
    """
    zeta_plus: float
    q: Coefficient
    cq: Optional[float] = None
    q_first: float = 0.0
    zeta_of_z: Coefficient = field(default=lambda z: np.asarray(z, dtype=float))
    z_of_zeta: Coefficient = field(default=lambda zeta: np.asarray(zeta, dtype=float))
    weight_quarter: Coefficient = field(default=lambda z: np.ones_like(np.asarray(z, dtype=float)))
    k0: float = 1.0
    k1: float = 0.0
    left_slope: Optional[float] = None
    problem: Optional[SLProblem] = None

    @property
    def singular(self) -> bool:
        return self.cq is not None

    @property
    def recessive_exponent(self) -> float:
        """Exponent of the recessive branch v ~ (zeta_plus - zeta)**exponent."""
        if not self.singular:
            return 1.0
        return 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * self.cq))

    @classmethod
    def direct(cls, q: Coefficient, zeta_plus: float, cq: Optional[float] = None,
               q_first: float = 0.0, left_slope: Optional[float] = None,
               samples: int = 2001) -> 'SchrodingerForm':
        """
        Build a form straight from a potential, with identity coordinate maps.
        """
        k1 = 0.5 * (0.75 + cq) if cq is not None else 0.0
        zeta = np.linspace(0.0, zeta_plus, samples)[:-1]
        depth = zeta_plus - zeta
        excess = k1 / depth ** 2 - np.asarray(q(zeta), dtype=float)
        k0 = 1.0 + max(0.0, float(np.max(excess)))
        return cls(zeta_plus=zeta_plus, q=q, cq=cq, q_first=q_first, k0=k0, k1=k1, left_slope=left_slope)


@dataclass(frozen=True, eq=False)
class Eigenpair:
    """
    Eigenvalue with eigenfunction samples in the original variable.

    Attributes:
        index: Mode number n >= 1
        value: Eigenvalue Lambda_n
        grid: Sample heights
        values: Eigenfunction w on the grid, normalized by int w**2 kappa dz = 1
        residual: Discrete residual of the method
        method: 'fd' or 'shooting'
        error_estimate: Refinement or root-bracket error estimate
        zeta_grid: Liouville coordinate samples, shooting only
        v_values: Transformed eigenfunction on zeta_grid, shooting only
    """
    index: int
    value: float
    grid: np.ndarray
    values: np.ndarray
    residual: float
    method: str
    error_estimate: float = 0.0
    zeta_grid: Optional[np.ndarray] = None
    v_values: Optional[np.ndarray] = None

    @property
    def zeros(self) -> int:
        """Interior sign changes of the eigenfunction."""
        return sign_changes(self.values[1:-1], rtol=1e-9)

    def as_row(self):
        return {'n': self.index, 'lambda': self.value, 'residual': self.residual, 'zeros': self.zeros}
