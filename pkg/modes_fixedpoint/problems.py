"""
Weighted eigenproblems in the Lagrangian pressure perturbation eta.

g-branch, parameter lambda:
    -(eta'/rho)' + (l**2 - lambda/c2) eta/rho = Lambda l**2 N2 eta/rho,
p-branch, parameter mu = 1/lambda:
    -(eta'/rho)' + l**2 (1 - mu N2) eta/rho = Lambda eta/(c2 rho).

An eigenvalue of the oscillation operator is a fixed point lambda Lambda_n(lambda) = 1
(resp. mu Lambda_n(mu) = 1). The ground condition w(0) = 0 reads
eta'(0) + (l**2 g/lambda) eta(0) = 0.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple
import math

import numpy as np

from common.exceptions import ParameterOutOfRange, PeriodMismatch
from equilibrium.profile import EquilibriumProfile
from slcore.problems import SingularEnd, SLProblem


class GroundCondition(str, Enum):
    ROBIN = 'robin'
    DIRICHLET = 'dirichlet'


class Branch(str, Enum):
    G = 'g'
    P = 'p'


def check_quantized(l: float, period: float, name: str = 'x_plus') -> None:
    """
    Raise PeriodMismatch unless l * period / (2 pi) is an integer.
    """
    harmonics = l * period / (2.0 * math.pi)
    if abs(harmonics - round(harmonics)) > 1e-12 * max(1.0, abs(harmonics)):
        raise PeriodMismatch(details={'l': l, name: period, 'harmonics': harmonics})


@dataclass(frozen=True)
class ModeSpec:
    """
    Horizontal wavenumber and branch of a family of modes.

    Attributes:
        l: Horizontal wavenumber, l > 0
        x_plus: Horizontal period along the mode direction
        y_plus: Period of the other horizontal direction
        branch: 'g' or 'p'
        direction: 'x' or 'y'
    """
    l: float
    x_plus: float = 1.0
    y_plus: float = 1.0
    branch: str = Branch.G.value
    direction: str = 'x'

    def __post_init__(self):
        if not self.l > 0.0:
            raise ParameterOutOfRange("Horizontal wavenumber must be positive", details={'l': self.l})
        period = self.x_plus if self.direction == 'x' else self.y_plus
        check_quantized(self.l, period, 'x_plus' if self.direction == 'x' else 'y_plus')

    @classmethod
    def harmonic(cls, k: int, x_plus: float = 1.0, **kwargs) -> 'ModeSpec':
        return cls(l=2.0 * math.pi * k / x_plus, x_plus=x_plus, **kwargs)

    def key(self) -> str:
        return f'{self.l!r}:{self.branch}'


def g_problem(profile: EquilibriumProfile, spec: ModeSpec, lam: float,
              ground: GroundCondition = GroundCondition.ROBIN) -> SLProblem:
    """
    SLProblem(a = 1/rho, b = (l**2 - lambda/c2)/rho, kappa = l**2 N2/rho).

    Raises:
        ParameterOutOfRange: Unless 0 <= lambda < l g
    """
    l, g = spec.l, profile.g
    if not 0.0 <= lam < l * g:
        raise ParameterOutOfRange(details={'lambda': lam, 'l_g': l * g})

    def a(z):
        return 1.0 / np.asarray(profile.fields(z, check_domain=False).rho)

    def b(z):
        sample = profile.fields(z, check_domain=False)
        return (l ** 2 - lam / np.asarray(sample.c2)) / np.asarray(sample.rho)

    def kappa(z):
        sample = profile.fields(z, check_domain=False)
        return l ** 2 * np.asarray(sample.n2) / np.asarray(sample.rho)

    robin = -l ** 2 * g / lam if ground == GroundCondition.ROBIN and lam > 0.0 else None
    return SLProblem(
        a=a, b=b, kappa=kappa, length=profile.z_plus,
        right_end=SingularEnd(a_power=-profile.nu, kappa_power=-profile.nu),
        robin=robin, name=f'g:{profile.fingerprint[:12]}:l={l:.6g}:lambda={lam:.6g}',
    )


def p_problem(profile: EquilibriumProfile, spec: ModeSpec, mu: float,
              ground: GroundCondition = GroundCondition.ROBIN) -> SLProblem:
    """
    SLProblem(a = 1/rho, b = l**2 (1 - mu N2)/rho, kappa = 1/(c2 rho)).

    Raises:
        ParameterOutOfRange: Unless 0 <= mu < 1/(l g)
    """
    l, g = spec.l, profile.g
    if not 0.0 <= mu < 1.0 / (l * g):
        raise ParameterOutOfRange(details={'mu': mu, 'mu_max': 1.0 / (l * g)})

    def a(z):
        return 1.0 / np.asarray(profile.fields(z, check_domain=False).rho)

    def b(z):
        sample = profile.fields(z, check_domain=False)
        return l ** 2 * (1.0 - mu * np.asarray(sample.n2)) / np.asarray(sample.rho)

    def kappa(z):
        sample = profile.fields(z, check_domain=False)
        return 1.0 / (np.asarray(sample.c2) * np.asarray(sample.rho))

    robin = -l ** 2 * g * mu if ground == GroundCondition.ROBIN else None
    return SLProblem(
        a=a, b=b, kappa=kappa, length=profile.z_plus,
        right_end=SingularEnd(a_power=-profile.nu, kappa_power=-profile.nu - 1.0),
        robin=robin, name=f'p:{profile.fingerprint[:12]}:l={l:.6g}:mu={mu:.6g}',
    )


@dataclass(frozen=True, eq=False)
class WeightedSpectrum:
    """Positive eigenvalues Lambda_1 < Lambda_2 < ... at one parameter value."""
    branch: str
    parameter: float
    values: np.ndarray
    nonpositive: int = 0
    error_estimate: Optional[np.ndarray] = None


@dataclass(frozen=True)
class FixedPointResult:
    """
    One fixed-point eigenvalue.

    Attributes:
        branch: 'g' or 'p'
        n: Mode index of Lambda_n
        lam: Oscillation eigenvalue (lambda_{-n} for g, 1/mu_n for p)
        capital_lambda: Lambda_n at the fixed point
        parameter: lambda (g) or mu (p) at the fixed point
        bracket: Final scan interval of the designated root
        f_residual: |parameter * Lambda_n(parameter) - 1|
        roots_found: Number of certified roots on the scan
        roots: Oscillation eigenvalues of every certified root
        tolerance: Certificate bound the residual was accepted against
        status: 'ok' or the code of the reported failure
    """
    branch: str
    n: int
    lam: float
    capital_lambda: float
    parameter: float
    bracket: Tuple[float, float]
    f_residual: float
    roots_found: int
    roots: Tuple[float, ...] = ()
    tolerance: float = 1e-8
    status: str = 'ok'

    @property
    def ok(self) -> bool:
        return self.status == 'ok'

    def as_row(self) -> Dict[str, object]:
        return {
            'branch': self.branch, 'n': self.n, 'lambda': self.lam,
            'capital_lambda': self.capital_lambda, 'f_residual': self.f_residual,
            'roots_found': self.roots_found,
        }


@dataclass(frozen=True, eq=False)
class ParameterSweep:
    """
    Lambda_n sampled over a parameter grid.

    Attributes:
        branch: 'g' or 'p'
        parameter_grid: Increasing lambda (g) or mu (p) values
        spectra: Array of shape (grid points, n_max)
        lipschitz_estimate: Largest |Delta Lambda_n / Delta parameter|
        nonpositive: Non-positive eigenvalues skipped at each grid point
    """
    branch: str
    parameter_grid: np.ndarray
    spectra: np.ndarray
    lipschitz_estimate: float
    nonpositive: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @property
    def ordered(self) -> bool:
        return bool(np.all(np.diff(self.spectra, axis=1) > 0.0))

    def max_jump(self) -> float:
        if len(self.parameter_grid) < 2:
            return 0.0
        return float(np.max(np.abs(np.diff(self.spectra, axis=0))))
