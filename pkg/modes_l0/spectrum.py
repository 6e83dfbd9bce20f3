"""
Purely vertical (l = 0) oscillations: -(c2 rho w')' = lambda rho w on (0, z_plus)
with w(0) = 0 and no condition at the vacuum height.
"""
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.optimize import brentq
from scipy.special import jv

from common.exceptions import NotIsentropic
from equilibrium.profile import EquilibriumProfile
from slcore.problems import Eigenpair, MeshSpec, SingularEnd, SLProblem


def vertical_problem(profile: EquilibriumProfile) -> SLProblem:
    """SLProblem(a = c2 rho, b = 0, kappa = rho) with a ~ s**(nu+1), kappa ~ s**nu at z_plus."""

    def a(z):
        sample = profile.fields(z, check_domain=False)
        return np.asarray(sample.c2) * np.asarray(sample.rho)

    def kappa(z):
        return np.asarray(profile.fields(z, check_domain=False).rho)

    def b(z):
        return np.zeros_like(np.asarray(z, dtype=float))

    return SLProblem(
        a=a, b=b, kappa=kappa, length=profile.z_plus,
        right_end=SingularEnd(a_power=profile.nu + 1.0, kappa_power=profile.nu),
        name=f'l0:{profile.fingerprint[:12]}',
    )


@dataclass(frozen=True, eq=False)
class VerticalSpectrum:
    """
    Vertical eigenvalues of one profile.

    ``pairs`` are the finite-difference eigenpairs (normalized by the lumped
    int w**2 rho dz = 1, positive at z_plus); ``shooting`` holds the
    transformed-shooting pairs when they were computed.
    """
    profile_id: str
    pairs: List[Eigenpair]
    problem: SLProblem
    mesh: MeshSpec
    shooting: List[Eigenpair] = field(default_factory=list)
    disagreement: Optional[float] = None

    @property
    def values(self) -> np.ndarray:
        return np.array([pair.value for pair in self.pairs])

    def cross_validation(self):
        return {
            'methods': ['fd', 'shooting'] if self.shooting else ['fd'],
            'max_relative_disagreement': self.disagreement,
        }


@dataclass(frozen=True, eq=False)
class VerticalModeFunction:
    """Samples of w and of the transformed W = (a kappa)**(1/4) w."""
    n: int
    value: float
    grid: np.ndarray
    w: np.ndarray
    transformed: np.ndarray
    residual: float


def bessel_zeros(order: float, count: int) -> np.ndarray:
    """First ``count`` positive zeros of J_order, by sign scan and brentq."""
    zeros: List[float] = []
    step = 0.25
    x = max(order, 0.0) + step
    previous = jv(order, x)
    while len(zeros) < count:
        nxt = x + step
        value = jv(order, nxt)
        if previous == 0.0:
            zeros.append(x)
        elif previous * value < 0.0:
            zeros.append(brentq(lambda t: jv(order, t), x, nxt, xtol=1e-15, rtol=4 * np.finfo(float).eps))
        x, previous = nxt, value
    return np.array(zeros[:count])


def bessel_vertical_eigenvalues(profile: EquilibriumProfile, count: int) -> np.ndarray:
    """
    g j_{nu,k}**2 / (4 nu z_plus), k = 1..count, for an isentropic profile.

    Raises:
        NotIsentropic: If the entropy law is not constant
    """
    if not profile.law.is_isentropic:
        raise NotIsentropic(details={'law': profile.law.kind})
    roots = bessel_zeros(profile.nu, count)
    return profile.g * roots ** 2 / (4.0 * profile.nu * profile.z_plus)


def bessel_vertical_shape(profile: EquilibriumProfile, k: int, z) -> np.ndarray:
    """Unnormalized s**(-nu/2) J_nu(j_{nu,k} sqrt(s/z_plus)) with s = z_plus - z."""
    if not profile.law.is_isentropic:
        raise NotIsentropic(details={'law': profile.law.kind})
    root = bessel_zeros(profile.nu, k)[-1]
    s = profile.z_plus - np.asarray(z, dtype=float)
    return s ** (-0.5 * profile.nu) * jv(profile.nu, root * np.sqrt(s / profile.z_plus))
