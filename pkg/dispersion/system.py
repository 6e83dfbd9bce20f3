"""
First-order oscillation system for the vertical structure of a mode
xi = (u sin(lx), w cos(lx)) with Lagrangian pressure perturbation eta:

    dw/dz  = -A11 w - A12 eta
    deta/dz = -A21 w - A22 eta

A11 = -l**2 g/lambda, A12 = (1 - l**2 c2/lambda)/(c2 rho),
A21 = (l**2 g**2/lambda - lambda) rho, A22 = l**2 g/lambda.

Integration runs in the background variable eta_b with dz = -F'(eta_b)/g deta_b,
so every coefficient is explicit, and in the scaled unknowns (w, p), eta = s**nu p,
s = z_plus - z, which stay bounded at the vacuum boundary.
"""
from dataclasses import dataclass
from typing import Optional, Tuple
import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from common.exceptions import OutOfDomain, StepFailure, ZeroLambda
from equilibrium.profile import EquilibriumProfile


@dataclass(frozen=True, eq=False)
class FirstOrderSystem:
    """
    Coefficients of the oscillation system at one spectral parameter.

    Attributes:
        profile: Background equilibrium
        l: Horizontal wavenumber
        lam: Spectral parameter, nonzero
    """
    profile: EquilibriumProfile
    l: float
    lam: float

    @property
    def z_plus(self) -> float:
        return self.profile.z_plus

    def coefficients(self, z) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(A11, A12, A21, A22) at heights z in [0, z_plus)."""
        sample = self.profile.fields(np.atleast_1d(z))
        rho, c2 = np.asarray(sample.rho), np.asarray(sample.c2)
        l2, g, lam = self.l ** 2, self.profile.g, self.lam
        a11 = np.full_like(rho, -l2 * g / lam)
        a12 = (1.0 - l2 * c2 / lam) / (c2 * rho)
        a21 = (l2 * g ** 2 / lam - lam) * rho
        return a11, a12, a21, -a11

    def turning_factor(self, z) -> np.ndarray:
        """Q(z) = 1 - l**2 c2/lambda."""
        c2 = np.asarray(self.profile.fields(np.atleast_1d(z)).c2)
        return 1.0 - self.l ** 2 * c2 / self.lam

    # scaled form

    def scaled_field(self, eta_b: float, y: np.ndarray) -> np.ndarray:
        """d(w, p)/d eta_b."""
        profile = self.profile
        nu, g, l2, lam = profile.nu, profile.g, self.l ** 2, self.lam
        c_v, law = profile.params.c_v, profile.law
        exp_sigma = math.exp(float(law.sigma(eta_b)) / c_v)
        s = (eta_b * exp_sigma + nu * float(law.exp_integral(eta_b, c_v))) / g
        slope = exp_sigma * ((nu + 1.0) + eta_b * float(law.sigma_prime(eta_b)) / c_v) / g
        c2 = profile.params.gamma * eta_b * exp_sigma
        ratio = (s / eta_b) ** nu
        k11 = -l2 * g * s / lam
        k12 = ratio * s * (1.0 - l2 * c2 / lam) / c2
        k21 = (l2 * g ** 2 / lam - lam) * s / ratio
        k22 = l2 * g * s / lam - nu
        w, p = y
        return (slope / s) * np.array([k11 * w + k12 * p, k21 * w + k22 * p])

    def eta_of_depth(self, s) -> np.ndarray:
        """Background eta_b at depth s = z_plus - z, inverted directly from F(eta_b) = g s."""
        return self.profile.invert_enthalpy(self.profile.g * np.asarray(s, dtype=float))

    def to_scaled(self, s, state) -> np.ndarray:
        return np.array([state[0], state[1] / s ** self.profile.nu])

    def from_scaled(self, s, scaled) -> np.ndarray:
        return np.array([scaled[0], scaled[1] * s ** self.profile.nu])

    def integrate_scaled(self, s_from: float, s_to: float, scaled: np.ndarray, s_eval: Optional[np.ndarray] = None,
                         rtol: float = 1e-10, atol: float = 1e-13):
        """
        Integrate (w, p) between two depths s = z_plus - z in (0, z_plus].

        Returns:
            (final (w, p), samples of shape (2, len(s_eval)) or None)

        Raises:
            StepFailure: If the integrator breaks down
        """
        e_from = float(self.eta_of_depth(s_from)[0])
        e_to = float(self.eta_of_depth(s_to)[0])
        e_eval = None if s_eval is None else self.eta_of_depth(s_eval)
        scaled = np.asarray(scaled, dtype=float)
        if e_from == e_to:
            return scaled, (None if s_eval is None else np.repeat(scaled[:, None], len(e_eval), axis=1))
        result = solve_ivp(self.scaled_field, (e_from, e_to), scaled, method='DOP853',
                           dense_output=e_eval is not None, rtol=rtol, atol=atol)
        if not result.success:
            raise StepFailure(result.message, details={'lambda': self.lam, 's_from': s_from, 's_to': s_to})
        return result.y[:, -1], (result.sol(e_eval) if e_eval is not None else None)

    def propagate(self, state, z_from: float, z_to: float, rtol: float = 1e-10, atol: float = 1e-13) -> np.ndarray:
        """(w, eta) at z_to from (w, eta) at z_from."""
        for z in (z_from, z_to):
            if not 0.0 <= z < self.z_plus:
                raise OutOfDomain(details={'z': z, 'z_plus': self.z_plus})
        s_from, s_to = self.z_plus - z_from, self.z_plus - z_to
        final, _ = self.integrate_scaled(s_from, s_to, self.to_scaled(s_from, state), rtol=rtol, atol=atol)
        return self.from_scaled(s_to, final)


def assemble_system(profile: EquilibriumProfile, l: float, lam: float) -> FirstOrderSystem:
    """
    Raises:
        ZeroLambda: If lambda == 0
    """
    if lam == 0.0:
        raise ZeroLambda(details={'l': l})
    return FirstOrderSystem(profile=profile, l=l, lam=lam)


def turning_point(profile: EquilibriumProfile, l: float, lam: float) -> Optional[float]:
    """
    Height where l**2 c2(z) = lambda, or None when lambda >= l**2 c2(0).

    c2 = gamma eta_b exp(Sigma/c_v) increases with eta_b, so the root is unique.
    """
    if lam <= 0.0:
        return None
    target = lam / l ** 2
    bottom = float(profile.fields_of_eta(profile.eta_base).c2)
    if target >= bottom:
        return None
    eta_b = brentq(lambda e: float(profile.fields_of_eta(e).c2) - target, 0.0, profile.eta_base,
                   xtol=1e-300, rtol=4 * np.finfo(float).eps)
    return profile.z_plus - float(profile.enthalpy(eta_b)) / profile.g
