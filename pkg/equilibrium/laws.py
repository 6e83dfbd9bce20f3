"""
Entropy laws S = Sigma(eta) as functions of eta = rho**(gamma - 1).

Each law knows its value, derivative, the integral of exp(Sigma/c_v) used by
the enthalpy function, and its Taylor coefficients at eta = 0 used by the
vacuum-boundary series.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence
import math

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

from common.exceptions import ConfigurationError


@dataclass(frozen=True)
class EntropyLaw:
    """
    Base entropy law. ``eta_max`` optionally widens the validation range.
    """
    eta_max: Optional[float] = None

    kind = 'abstract'

    def sigma(self, eta):
        raise NotImplementedError

    def sigma_prime(self, eta):
        raise NotImplementedError

    def exp_integral(self, eta, c_v: float):
        """Integral of exp(Sigma(t)/c_v) for t from 0 to eta."""
        raise NotImplementedError

    def taylor(self, order: int) -> np.ndarray:
        """Coefficients sigma_k of Sigma(eta) = sum sigma_k eta**k, k <= order."""
        raise NotImplementedError

    @property
    def is_isentropic(self) -> bool:
        return False

    def describe(self) -> Dict[str, Any]:
        raise NotImplementedError


@dataclass(frozen=True)
class IsentropicLaw(EntropyLaw):
    """Constant entropy Sigma(eta) = value."""
    value: float = 0.0

    kind = 'isentropic'

    def sigma(self, eta):
        return np.full_like(np.asarray(eta, dtype=float), self.value)

    def sigma_prime(self, eta):
        return np.zeros_like(np.asarray(eta, dtype=float))

    def exp_integral(self, eta, c_v: float):
        return math.exp(self.value / c_v) * np.asarray(eta, dtype=float)

    def taylor(self, order: int) -> np.ndarray:
        coefficients = np.zeros(order + 1)
        coefficients[0] = self.value
        return coefficients

    @property
    def is_isentropic(self) -> bool:
        return True

    def describe(self) -> Dict[str, Any]:
        return {'kind': self.kind, 'value': self.value}


@dataclass(frozen=True)
class LinearLaw(EntropyLaw):
    """Sigma(eta) = -beta * eta."""
    beta: float = 0.0

    kind = 'linear'

    def sigma(self, eta):
        return -self.beta * np.asarray(eta, dtype=float)

    def sigma_prime(self, eta):
        return np.full_like(np.asarray(eta, dtype=float), -self.beta)

    def exp_integral(self, eta, c_v: float):
        eta = np.asarray(eta, dtype=float)
        rate = self.beta / c_v
        if rate == 0.0:
            return eta
        return -np.expm1(-rate * eta) / rate

    def taylor(self, order: int) -> np.ndarray:
        coefficients = np.zeros(order + 1)
        if order >= 1:
            coefficients[1] = -self.beta
        return coefficients

    @property
    def is_isentropic(self) -> bool:
        return self.beta == 0.0

    def describe(self) -> Dict[str, Any]:
        return {'kind': self.kind, 'beta': self.beta}


@dataclass(frozen=True)
class TableLaw(EntropyLaw):
    """
    Monotone cubic (PCHIP) interpolation of tabulated (eta, Sigma) pairs.

    The exp(Sigma/c_v) integral is tabulated once per c_v on a dense grid and
    integrated through a cubic spline antiderivative.
    """
    eta_points: Sequence[float] = ()
    sigma_points: Sequence[float] = ()
    _integrals: Dict[float, Any] = field(default_factory=dict, init=False, repr=False, compare=False)

    kind = 'table'
    DENSE_POINTS = 4097

    def __post_init__(self):
        eta = np.asarray(self.eta_points, dtype=float)
        sigma = np.asarray(self.sigma_points, dtype=float)
        if eta.ndim != 1 or eta.size < 2 or eta.size != sigma.size:
            raise ConfigurationError("Entropy table needs at least two (eta, sigma) rows")
        if np.any(eta < 0) or np.any(np.diff(eta) <= 0):
            raise ConfigurationError("Entropy table eta column must be nonnegative and strictly increasing")
        object.__setattr__(self, 'eta_points', tuple(eta))
        object.__setattr__(self, 'sigma_points', tuple(sigma))
        object.__setattr__(self, '_interpolant', PchipInterpolator(eta, sigma, extrapolate=True))

    @property
    def table_max(self) -> float:
        return self.eta_points[-1]

    def sigma(self, eta):
        return self._interpolant(np.asarray(eta, dtype=float))

    def sigma_prime(self, eta):
        return self._interpolant(np.asarray(eta, dtype=float), 1)

    def _integral(self, c_v: float):
        if c_v not in self._integrals:
            grid = np.linspace(0.0, self.table_max, self.DENSE_POINTS)
            spline = CubicSpline(grid, np.exp(self.sigma(grid) / c_v))
            self._integrals[c_v] = spline.antiderivative()
        return self._integrals[c_v]

    def exp_integral(self, eta, c_v: float):
        return self._integral(c_v)(np.asarray(eta, dtype=float))

    def taylor(self, order: int) -> np.ndarray:
        coefficients = np.zeros(order + 1)
        for k in range(min(order, 3) + 1):
            coefficients[k] = float(self._interpolant(0.0, k)) / math.factorial(k)
        return coefficients

    @property
    def is_isentropic(self) -> bool:
        return bool(np.ptp(self.sigma_points) == 0.0)

    def describe(self) -> Dict[str, Any]:
        return {
            'kind': self.kind,
            'table': [[e, s] for e, s in zip(self.eta_points, self.sigma_points)],
        }


def law_from_descriptor(descriptor: Dict[str, Any]) -> EntropyLaw:
    """
    Build an entropy law from its JSON descriptor.

    Args:
        descriptor: Mapping with ``kind`` and the kind-specific parameters

    Returns:
        EntropyLaw instance

    Raises:
        ConfigurationError: If the kind is unknown
    """
    kind = descriptor.get('kind')
    eta_max = descriptor.get('eta_max')
    if kind == 'isentropic':
        return IsentropicLaw(eta_max=eta_max, value=float(descriptor.get('value', 0.0)))
    if kind == 'linear':
        return LinearLaw(eta_max=eta_max, beta=float(descriptor['beta']))
    if kind == 'table':
        rows: List[List[float]] = descriptor['table']
        return TableLaw(
            eta_max=eta_max,
            eta_points=[float(row[0]) for row in rows],
            sigma_points=[float(row[1]) for row in rows],
        )
    raise ConfigurationError(f"Unknown entropy law kind: {kind}", details={'kind': kind})
