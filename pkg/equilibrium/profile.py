"""
Domain types of the stratified equilibrium.

The background is parameterized by eta = rho**(gamma - 1). Hydrostatic
balance makes the enthalpy-like function

    F(eta) = eta * exp(Sigma(eta)/c_v) + nu * integral_0^eta exp(Sigma/c_v)

equal to u = g (z_plus - z), so every field is an explicit function of eta
and heights are recovered by inverting F.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Union

import numpy as np

from common.exceptions import InversionFailure, OutOfDomain
from common.utils import config_hash
from .laws import EntropyLaw

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class GasParameters:
    """Polytropic gas constants; ``nu`` is always recomputed from gamma."""
    gamma: float
    c_v: float
    g: float

    @property
    def nu(self) -> float:
        return 1.0 / (self.gamma - 1.0)

    def describe(self) -> Dict[str, float]:
        return {'gamma': self.gamma, 'c_v': self.c_v, 'g': self.g}


@dataclass(frozen=True)
class FieldSample:
    """Background fields at one height or on an array of heights."""
    rho: ArrayLike
    p: ArrayLike
    s: ArrayLike
    c2: ArrayLike
    n2: ArrayLike
    a_schwarz: ArrayLike
    h_rho: ArrayLike


@dataclass(frozen=True)
class AdmissibilityCheck:
    name: str
    passed: bool
    value: float
    detail: str = ''


@dataclass(frozen=True)
class AdmissibilityReport:
    checks: List[AdmissibilityCheck]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def check(self, name: str) -> AdmissibilityCheck:
        for item in self.checks:
            if item.name == name:
                return item
        raise KeyError(name)


@dataclass(frozen=True)
class EquilibriumProfile:
    """
    Admissible equilibrium on [0, z_plus) evaluated analytically in eta.

    Attributes:
        params: Gas constants
        law: Entropy law
        z_plus: Vacuum height
        eta_base: Value of eta at z = 0
        c_rho: Vacuum-contact amplitude of rho ~ c_rho (z_plus - z)**nu
        inversion_rtol: Relative tolerance of the eta inversion
    """
    params: GasParameters
    law: EntropyLaw
    z_plus: float
    eta_base: float
    c_rho: float = 0.0
    inversion_rtol: float = 1e-13
    _fingerprint: str = field(default='', init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, '_fingerprint', config_hash(self.describe()))

    @property
    def nu(self) -> float:
        return self.params.nu

    @property
    def g(self) -> float:
        return self.params.g

    @property
    def fingerprint(self) -> str:
        return self._fingerprint

    def describe(self) -> Dict[str, Any]:
        """JSON descriptor from which the profile can be rebuilt."""
        return {
            'gas': self.params.describe(),
            'law': self.law.describe(),
            'z_plus': self.z_plus,
        }

    # functions of eta

    def _exp_sigma(self, eta):
        return np.exp(self.law.sigma(eta) / self.params.c_v)

    def enthalpy(self, eta):
        """F(eta) = g * (z_plus - z)."""
        eta = np.asarray(eta, dtype=float)
        return eta * self._exp_sigma(eta) + self.nu * self.law.exp_integral(eta, self.params.c_v)

    def enthalpy_prime(self, eta):
        """dF/deta = exp(Sigma/c_v) * ((nu + 1) + eta * Sigma'/c_v)."""
        eta = np.asarray(eta, dtype=float)
        return self._exp_sigma(eta) * ((self.nu + 1.0) + eta * self.law.sigma_prime(eta) / self.params.c_v)

    def depth_of_eta(self, eta):
        """s = z_plus - z as a function of eta."""
        return self.enthalpy(eta) / self.g

    def fields_of_eta(self, eta) -> FieldSample:
        eta = np.asarray(eta, dtype=float)
        gamma, c_v, g, nu = self.params.gamma, self.params.c_v, self.g, self.nu
        exp_sigma = self._exp_sigma(eta)
        sigma_prime = self.law.sigma_prime(eta)
        slope = self.enthalpy_prime(eta)
        rho = eta ** nu
        a_schwarz = g * sigma_prime / (gamma * c_v * slope)
        h_rho = eta * slope / (g * nu)
        return FieldSample(
            rho=rho,
            p=rho * eta * exp_sigma,
            s=self.law.sigma(eta),
            c2=gamma * eta * exp_sigma,
            n2=-g * a_schwarz,
            a_schwarz=a_schwarz,
            h_rho=h_rho,
        )

    # functions of z

    def eta_at(self, z, check_domain: bool = True) -> np.ndarray:
        """
        Invert F(eta) = g (z_plus - z) by safeguarded Newton iteration.

        Args:
            z: Height or array of heights
            check_domain: Raise OutOfDomain outside [0, z_plus)

        Raises:
            OutOfDomain: If a height lies outside [0, z_plus)
            InversionFailure: If the iteration does not converge
        """
        z = np.asarray(z, dtype=float)
        if check_domain and (np.any(z < 0.0) or np.any(z >= self.z_plus)):
            raise OutOfDomain(details={'z_min': float(np.min(z)), 'z_max': float(np.max(z)), 'z_plus': self.z_plus})
        target = self.g * (self.z_plus - z)
        return self.invert_enthalpy(target)

    def invert_enthalpy(self, target) -> np.ndarray:
        target = np.atleast_1d(np.asarray(target, dtype=float))
        scale = max(self.eta_base, 1e-300)
        lo = np.zeros_like(target)
        hi = np.full_like(target, scale)
        for _ in range(200):
            short = self.enthalpy(hi) < target
            if not np.any(short):
                break
            hi = np.where(short, 2.0 * hi, hi)
        else:
            raise InversionFailure("Could not bracket the enthalpy inversion")

        eta = target / ((self.nu + 1.0) * self._exp_sigma(np.zeros_like(target)))
        eta = np.clip(eta, lo, hi)
        for _ in range(100):
            residual = self.enthalpy(eta) - target
            lo = np.where(residual < 0.0, eta, lo)
            hi = np.where(residual > 0.0, eta, hi)
            candidate = eta - residual / self.enthalpy_prime(eta)
            outside = (candidate < lo) | (candidate > hi) | ~np.isfinite(candidate)
            candidate = np.where(outside, 0.5 * (lo + hi), candidate)
            done = np.abs(candidate - eta) <= self.inversion_rtol * np.abs(candidate)
            eta = candidate
            if np.all(done):
                break
        else:
            raise InversionFailure(details={'max_residual': float(np.max(np.abs(self.enthalpy(eta) - target)))})
        return eta

    def fields(self, z, check_domain: bool = True) -> FieldSample:
        """Background fields at height z (scalar or array)."""
        scalar = np.ndim(z) == 0
        sample = self.fields_of_eta(self.eta_at(z, check_domain=check_domain))
        if scalar:
            return FieldSample(**{name: float(np.asarray(value).reshape(-1)[0]) for name, value in vars(sample).items()})
        return sample

    def density(self, z):
        return self.eta_at(z) ** self.nu

    def sound_speed2(self, z):
        return self.fields(z).c2

    def n2_from_scale_height(self, sample: FieldSample):
        """Second evaluation of N**2 as -g**2/c2 + g/h_rho."""
        with np.errstate(divide='ignore', invalid='ignore'):
            return -self.g ** 2 / np.asarray(sample.c2) + self.g / np.asarray(sample.h_rho)
