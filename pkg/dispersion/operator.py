"""
The oscillation operator on sampled vertical profiles.

For xi = (u sin(lx), w cos(lx)) with X = l u + w':

    L^u = l c2 X - l g w
    L^w = -(c2)' X - c2 (l u' + w'') - g l u + nu g gamma exp(Sigma/c_v) X / F'(eta_b)

which is -(l/rho) dP and (1/rho) dP' + (g/rho) drho with the Eulerian
perturbations dP = -c2 rho X + g rho w, drho = -l rho u - (rho w)', rewritten so
that every background factor stays finite at the vacuum boundary.
"""
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.interpolate import make_interp_spline

from common.exceptions import GridTooCoarse, NotIsentropic, OutOfDomain
from common.utils import sign_changes, weighted_norm
from equilibrium.profile import EquilibriumProfile


@dataclass(frozen=True, eq=False)
class ModeFunction:
    """
    Vertical structure of an eigenmode normalized to alpha = w(z_plus) = 1.

    Attributes:
        lam: Eigenvalue
        l: Horizontal wavenumber
        grid: Heights from 0 to z_plus
        u, w, eta: Horizontal and vertical displacement, Lagrangian pressure perturbation
        alpha: Boundary trace w(z_plus)
        u_trace: u(z_plus) = -l g alpha/lambda
        mismatch: Normalized determinant of the two branches at the matching point
    """
    lam: float
    l: float
    grid: np.ndarray
    u: np.ndarray
    w: np.ndarray
    eta: np.ndarray
    alpha: float
    u_trace: float
    mismatch: float = 0.0

    @property
    def zeros(self) -> int:
        """Interior sign changes of w."""
        return sign_changes(self.w[1:-1], rtol=1e-8)

    def as_columns(self):
        return {'z': self.grid, 'u': self.u, 'w': self.w, 'eta': self.eta}


@dataclass(frozen=True)
class Bump:
    """Smooth compactly supported A exp(-1/(1 - r**2)), r = (z - center)/half_width."""
    center: float
    half_width: float
    amplitude: float = 1.0

    @property
    def support(self) -> Tuple[float, float]:
        return self.center - self.half_width, self.center + self.half_width

    def __call__(self, z, derivative: int = 0) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        r = (z - self.center) / self.half_width
        inside = np.abs(r) < 1.0
        safe = np.where(inside, r, 0.0)
        value = np.where(inside, self.amplitude * np.exp(-1.0 / (1.0 - safe ** 2)), 0.0)
        if derivative == 0:
            return value
        if derivative == 1:
            return value * np.where(inside, -2.0 * safe / (1.0 - safe ** 2) ** 2, 0.0) / self.half_width
        raise ValueError("Bump provides the value and first derivative only")


def background_on(profile: EquilibriumProfile, grid: np.ndarray):
    """eta_b, rho, c2, (c2)', F'(eta_b) and gamma exp(Sigma/c_v) on heights in [0, z_plus]."""
    params, law = profile.params, profile.law
    eta_b = profile.eta_at(grid, check_domain=False)
    exp_sigma = np.exp(law.sigma(eta_b) / params.c_v)
    stretch = eta_b * law.sigma_prime(eta_b) / params.c_v
    slope = exp_sigma * ((profile.nu + 1.0) + stretch)
    c2 = params.gamma * eta_b * exp_sigma
    dc2 = -params.gamma * exp_sigma * (1.0 + stretch) * profile.g / slope
    return eta_b, eta_b ** profile.nu, c2, dc2, slope, params.gamma * exp_sigma


def check_grid(profile: EquilibriumProfile, grid: np.ndarray, degree: int = 5) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 * (degree + 1) or np.any(np.diff(grid) <= 0.0):
        raise GridTooCoarse(details={'points': int(grid.size), 'degree': degree})
    if grid[0] < 0.0 or grid[-1] > profile.z_plus:
        raise OutOfDomain(details={'z_min': float(grid[0]), 'z_max': float(grid[-1]), 'z_plus': profile.z_plus})
    return grid


def apply_operator(profile: EquilibriumProfile, l: float, grid, u, w, degree: int = 5) -> Tuple[np.ndarray, np.ndarray]:
    """
    (L^u, L^w) of sampled (u, w), derivatives from interpolating splines of the given degree.

    Raises:
        GridTooCoarse: If the grid has too few points or is not increasing
        OutOfDomain: If the grid leaves [0, z_plus]
    """
    grid = check_grid(profile, grid, degree)
    u, w = np.asarray(u, dtype=float), np.asarray(w, dtype=float)
    u_spline = make_interp_spline(grid, u, k=degree)
    w_spline = make_interp_spline(grid, w, k=degree)
    du, dw, d2w = u_spline(grid, 1), w_spline(grid, 1), w_spline(grid, 2)

    _, _, c2, dc2, slope, kappa = background_on(profile, grid)
    g, nu = profile.g, profile.nu
    mixed = l * u + dw
    lu = l * c2 * mixed - l * g * w
    lw = -dc2 * mixed - c2 * (l * du + d2w) - g * l * u + nu * g * kappa * mixed / slope
    return lu, lw


def operator_residual(profile: EquilibriumProfile, l: float, grid, u, w, lam: float,
                      forcing: Tuple[np.ndarray, np.ndarray] = None) -> float:
    """
    ||(L - lambda)(u, w) - f|| relative to ||f|| (or ||(u, w)|| without forcing), weight rho.
    """
    grid = np.asarray(grid, dtype=float)
    lu, lw = apply_operator(profile, l, grid, u, w)
    rho = background_on(profile, grid)[1]
    fu, fw = forcing if forcing is not None else (np.zeros_like(grid), np.zeros_like(grid))
    error = weighted_norm(grid, rho, lu - lam * np.asarray(u) - fu, lw - lam * np.asarray(w) - fw)
    reference = weighted_norm(grid, rho, fu, fw) if forcing is not None else weighted_norm(grid, rho, u, w)
    return error / reference if reference > 0.0 else error


def kernel_family_isentropic(profile: EquilibriumProfile, l: float, upsilon: Bump, grid) -> Tuple[np.ndarray, np.ndarray]:
    """
    Kernel element u = -(1/(l rho)) (rho Upsilon)', w = Upsilon of an isentropic profile.

    Raises:
        NotIsentropic: If the entropy is not constant
        OutOfDomain: If the support of Upsilon is not inside (0, z_plus)
    """
    if not profile.law.is_isentropic:
        raise NotIsentropic(details={'law': profile.law.kind})
    low, high = upsilon.support
    if upsilon.amplitude != 0.0 and not (0.0 < low and high < profile.z_plus):
        raise OutOfDomain("Upsilon must be supported inside (0, z_plus)", details={'support': [low, high]})
    grid = np.asarray(grid, dtype=float)
    w = upsilon(grid)
    inside = w != 0.0
    eta_b, _, _, _, slope, _ = background_on(profile, grid)
    log_slope = np.zeros_like(grid)
    log_slope[inside] = -profile.nu * profile.g / (eta_b[inside] * slope[inside])
    u = -(log_slope * w + upsilon(grid, 1)) / l
    return u, w


def trapezoid_weights(grid: np.ndarray) -> np.ndarray:
    h = np.diff(grid)
    weights = np.zeros_like(grid)
    weights[:-1] += 0.5 * h
    weights[1:] += 0.5 * h
    return weights


def captured_norm_fractions(grid, weight, field: Tuple[np.ndarray, np.ndarray],
                            modes: Sequence[Tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
    """
    Fraction of the weighted squared norm of a field captured by the first k modes, k = 1..K.

    Each fraction is the weighted least-squares projection onto the span of
    the first k modes, so the sequence is nondecreasing.
    """
    grid = np.asarray(grid, dtype=float)
    root = np.sqrt(trapezoid_weights(grid) * np.asarray(weight, dtype=float))
    target = np.concatenate([root * field[0], root * field[1]])
    basis = np.column_stack([np.concatenate([root * mode[0], root * mode[1]]) for mode in modes])
    total = float(np.dot(target, target))
    fractions: List[float] = []
    for k in range(1, basis.shape[1] + 1):
        coefficients = np.linalg.lstsq(basis[:, :k], target, rcond=None)[0]
        projection = basis[:, :k] @ coefficients
        fractions.append(float(np.dot(projection, projection)) / total if total > 0.0 else 0.0)
    return np.maximum.accumulate(np.array(fractions))
