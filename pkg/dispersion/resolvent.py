"""
Variation-of-parameters solution of (L - lambda) xi = f for real lambda off the spectrum.

With Phi = [phi_O phi_S] and h = ((l/lambda) f^u, rho (f^w - (l g/lambda) f^u)),
Y = c1 phi_O + c2 phi_S solves dY/dz = -A Y + h when Phi c' = h; c1 is
integrated from z_plus inward and c2 from the ground outward, so the
solution meets w(0) = 0 and stays bounded at the vacuum boundary.
"""
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.interpolate import CubicSpline

from common.exceptions import ConfigurationError
from common.utils import weighted_norm
from equilibrium.profile import EquilibriumProfile
from .operator import ModeFunction, background_on, operator_residual

Forcing = Union[Callable[[np.ndarray], np.ndarray], np.ndarray, float]


@dataclass(frozen=True, eq=False)
class ResolventProblem:
    """
    One solved resolvent equation on heights from 0 to z_plus - s0.

    Attributes:
        lam: Spectral parameter
        forcing_u, forcing_w: Forcing samples on solution.grid
        h1, h2: Transformed right-hand side
        c1, c2: Variation-of-parameters coefficients
        solution: The solution as a ModeFunction (alpha is the top value of w)
        bound: ||solution|| / ||forcing||, zero for zero forcing
        residual: ||(L - lambda) solution - f|| / ||f||
    """
    lam: float
    forcing_u: np.ndarray
    forcing_w: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    solution: ModeFunction
    bound: float
    residual: float

    @property
    def grid(self) -> np.ndarray:
        return self.solution.grid


@dataclass(frozen=True, eq=False)
class Resolvent:
    """
    Fundamental solutions sampled once per lambda, reused for every forcing.

    Attributes:
        profile: Background equilibrium
        l: Horizontal wavenumber
        lam: Spectral parameter
        depth: Increasing depths s = z_plus - z from s0 to z_plus
        regular: (w, p) of phi_O on depth, eta = s**nu p
        vacuum: (w, p) of phi_S on depth
        determinant: det Phi at the middle node
        condition: |det Phi| / (|phi_O| |phi_S|) at the middle node
    """
    profile: EquilibriumProfile
    l: float
    lam: float
    depth: np.ndarray
    regular: np.ndarray
    vacuum: np.ndarray
    determinant: float
    condition: float

    @property
    def grid(self) -> np.ndarray:
        return self.profile.z_plus - self.depth[::-1]

    def sample(self, forcing: Forcing) -> np.ndarray:
        grid = self.grid
        if callable(forcing):
            return np.asarray(forcing(grid), dtype=float) * np.ones_like(grid)
        values = np.asarray(forcing, dtype=float)
        if values.ndim == 0:
            return np.full_like(grid, float(values))
        if values.shape != grid.shape:
            raise ConfigurationError("Forcing samples must match the resolvent grid",
                                     details={'expected': grid.size, 'received': values.size})
        return values

    def solve(self, forcing_u: Forcing, forcing_w: Forcing, certify: bool = True) -> ResolventProblem:
        profile, l, lam = self.profile, self.l, self.lam
        nu, g = profile.nu, profile.g
        forcing = self.sample(forcing_u), self.sample(forcing_w)
        fu, fw = forcing[0][::-1], forcing[1][::-1]

        s = self.depth
        eta_b, rho = background_on(profile, profile.z_plus - s)[:2]
        weight = s ** nu
        w_o, eta_o = self.regular[0], weight * self.regular[1]
        w_s, eta_s = self.vacuum[0], weight * self.vacuum[1]

        h1 = (l / lam) * fu
        h2 = rho * (fw - (l * g / lam) * fu)
        det = w_o * eta_s - eta_o * w_s
        # c1 vanishes at z_plus and c2 at the ground; both accumulate in depth
        c1 = -CubicSpline(s, (eta_s * h1 - w_s * h2) / det).antiderivative()(s)
        rate = CubicSpline(s, (w_o * h2 - eta_o * h1) / det).antiderivative()
        c2 = rate(s[-1]) - rate(s)

        w = c1 * w_o + c2 * w_s
        p = c1 * self.regular[1] + c2 * self.vacuum[1]
        u = -(l / lam) * (p * (s / eta_b) ** nu + g * w) - fu / lam
        eta = weight * p

        flip = slice(None, None, -1)
        grid = self.grid
        solution = ModeFunction(
            lam=lam, l=l, grid=grid, u=u[flip], w=w[flip], eta=eta[flip],
            alpha=float(w[0]), u_trace=float(u[0]),
        )
        rho_up = rho[flip]
        f_norm = weighted_norm(grid, rho_up, *forcing)
        bound = weighted_norm(grid, rho_up, solution.u, solution.w) / f_norm if f_norm > 0.0 else 0.0
        residual = float('nan')
        if certify:
            residual = operator_residual(profile, l, grid, solution.u, solution.w, lam,
                                         forcing=forcing)
        return ResolventProblem(
            lam=lam, forcing_u=forcing[0], forcing_w=forcing[1], h1=h1[flip], h2=h2[flip],
            c1=c1[flip], c2=c2[flip], solution=solution, bound=bound, residual=residual,
        )
