"""
Shooting eigensolver for Schrodinger forms.

The count of eigenvalues below Lambda is read from modified Prufer angles,
S v = R sin(theta), v' = R cos(theta), integrated from zeta = 0 and from the
recessive branch at zeta_plus toward a matching point. The n-th eigenvalue
solves theta_left - theta_right = (n - 1) pi at the matching point.
"""
from typing import Dict, List, Optional, Tuple
import logging
import math

import numpy as np
from scipy.integrate import simpson, solve_ivp
from scipy.optimize import brentq

from common.exceptions import BracketFailure, LimitCircleEndpoint, StepFailure
from common.utils import graded_mesh
from .problems import Eigenpair, SchrodingerForm

logger = logging.getLogger(__name__)


class PruferShooter:
    """
    Prufer-angle shooting on one Schrodinger form.

    Args:
        form: Form with cq > 3/4 at a singular end
        rtol: Integrator relative tolerance
        offset: Start of the right branch, as a fraction of zeta_plus
        match_fraction: Matching point as a fraction of zeta_plus
        expansions: Bracket expansion budget
    """

    def __init__(self, form: SchrodingerForm, rtol: float = 1e-10, offset: float = 1e-6,
                 match_fraction: float = 0.5, expansions: int = 60):
        if form.singular and not form.cq > 0.75:
            raise LimitCircleEndpoint(details={'cq': form.cq})
        self.form = form
        self.rtol = rtol
        self.atol = rtol * 1e-2
        self.start_depth = offset * form.zeta_plus if form.singular else 0.0
        self.match = match_fraction * form.zeta_plus
        self.expansions = expansions
        self._angles: Dict[float, float] = {}

    # asymptotics

    def _series_coefficient(self) -> float:
        beta = self.form.recessive_exponent
        return self.form.q_first / (2.0 * beta) if self.form.singular else 0.0

    def recessive(self, depth):
        """Two-term recessive branch (depth/start_depth)**beta (1 + c1 depth)."""
        beta, c1 = self.form.recessive_exponent, self._series_coefficient()
        return (depth / self.start_depth) ** beta * (1.0 + c1 * depth)

    def right_state(self) -> Tuple[float, float]:
        """(v, v') of the recessive branch at the right start, scaled to v = 1 + c1 d."""
        if not self.form.singular:
            return 0.0, -1.0
        depth = self.start_depth
        beta, c1 = self.form.recessive_exponent, self._series_coefficient()
        return 1.0 + c1 * depth, -(beta / depth * (1.0 + c1 * depth) + c1)

    def left_state(self) -> Tuple[float, float]:
        if self.form.left_slope is None:
            return 0.0, 1.0
        return 1.0, self.form.left_slope

    # Prufer angles

    def _integrate(self, rhs, span, start, dense=False):
        result = solve_ivp(rhs, span, np.atleast_1d(start), method='DOP853', rtol=self.rtol,
                           atol=self.atol, dense_output=dense)
        if not result.success:
            raise StepFailure(result.message, details={'span': list(span)})
        return result

    def mismatch(self, value: float) -> float:
        """theta_left - theta_right at the matching point."""
        if value in self._angles:
            return self._angles[value]
        scale = math.sqrt(max(abs(value), 1.0))
        q = self.form.q

        def rhs(zeta, theta):
            s, c = math.sin(theta[0]), math.cos(theta[0])
            return [scale * c * c + (value - float(q(zeta))) / scale * s * s]

        v0, p0 = self.left_state()
        left = self._integrate(rhs, (0.0, self.match), math.atan2(scale * v0, p0)).y[0, -1]
        v1, p1 = self.right_state()
        theta_right = math.atan2(scale * v1, p1)
        right = self._integrate(rhs, (self.form.zeta_plus - self.start_depth, self.match), theta_right).y[0, -1]
        angle = left - right
        self._angles[value] = angle
        return angle

    def bracket(self, n: int, lo: float, hi: float) -> Tuple[float, float]:
        """Expand [lo, hi] until it brackets the n-th eigenvalue."""
        target = (n - 1) * math.pi
        for _ in range(self.expansions):
            if self.mismatch(lo) < target:
                break
            lo -= 2.0 * max(abs(lo), 1.0)
        else:
            raise BracketFailure(details={'n': n, 'lo': lo})
        for _ in range(self.expansions):
            if self.mismatch(hi) > target:
                return lo, hi
            logger.debug(f"shooting: expanding bracket for n={n} beyond {hi:.6g}")
            hi = lo + 2.0 * (hi - lo)
        raise BracketFailure(details={'n': n, 'hi': hi})

    def eigenvalue(self, n: int, lo: float, hi: float) -> Tuple[float, float, float]:
        """Refine the n-th eigenvalue; returns (value, angle residual, hi used)."""
        lo, hi = self.bracket(n, lo, hi)
        target = (n - 1) * math.pi
        value = brentq(lambda x: self.mismatch(x) - target, lo, hi,
                       xtol=self.rtol * max(abs(lo), abs(hi), 1.0), rtol=max(self.rtol, 4 * np.finfo(float).eps))
        return value, abs(self.mismatch(value) - target), hi

    # eigenfunctions

    def branches(self, value: float):
        """Dense left and right solutions (v, v') for one eigenvalue, glued at the matching point."""
        q = self.form.q

        def rhs(zeta, y):
            return [y[1], (float(q(zeta)) - value) * y[0]]

        left = self._integrate(rhs, (0.0, self.match), self.left_state(), dense=True)
        right = self._integrate(rhs, (self.form.zeta_plus - self.start_depth, self.match), self.right_state(), dense=True)
        lv, lp = left.y[:, -1]
        rv, rp = right.y[:, -1]
        scale = (lv * rv + lp * rp) / (rv * rv + rp * rp)
        return left.sol, right.sol, scale

    def transformed_samples(self, value: float, points: int = 4001):
        """(zeta, v) samples of the glued eigenfunction, right branch positive near zeta_plus."""
        left, right, scale = self.branches(value)
        zeta = np.linspace(0.0, self.form.zeta_plus, points)
        v = self.evaluate(zeta, left, right, scale)
        return zeta, v, left, right, scale

    def evaluate(self, zeta, left, right, scale) -> np.ndarray:
        zeta = np.asarray(zeta, dtype=float)
        depth = self.form.zeta_plus - zeta
        v = np.zeros_like(zeta)
        inner = zeta <= self.match
        middle = ~inner & (depth >= self.start_depth)
        tail = ~inner & ~middle & (depth > 0.0)
        if np.any(inner):
            v[inner] = left(zeta[inner])[0]
        if np.any(middle):
            v[middle] = scale * right(zeta[middle])[0]
        if np.any(tail):
            v[tail] = scale * self.recessive(depth[tail])
        return v


def shoot_eigensolve(form: SchrodingerForm, n_max: int, tol: float = 1e-10, offset: float = 1e-6,
                     match_fraction: float = 0.5, expansions: int = 60,
                     grid: Optional[np.ndarray] = None) -> List[Eigenpair]:
    """
    Eigenpairs of a Schrodinger form by Prufer shooting.

    Args:
        form: Schrodinger form, cq > 3/4 when singular
        n_max: Number of eigenpairs
        tol: Integrator and root tolerance
        offset: Right start depth as a fraction of zeta_plus
        match_fraction: Matching point as a fraction of zeta_plus
        expansions: Bracket expansion budget
        grid: Heights for the original-variable samples (defaults to a graded mesh)

    Returns:
        List of Eigenpair, method 'shooting', eigenfunctions normalized by
        int v**2 dzeta = 1 and positive near zeta_plus

    Raises:
        LimitCircleEndpoint: If cq <= 3/4
        BracketFailure: If a sign change cannot be bracketed
    """
    shooter = PruferShooter(form, rtol=tol, offset=offset, match_fraction=match_fraction, expansions=expansions)
    if n_max < 1:
        return []

    samples = np.linspace(0.0, form.zeta_plus, 257)[:-1]
    lo = float(np.min(form.q(samples))) - 1.0
    hi = lo + max(10.0, (math.pi / form.zeta_plus) ** 2)
    length = form.problem.length if form.problem is not None else form.zeta_plus
    if grid is None:
        grid = graded_mesh(length, 400, 2.0 if form.singular else 1.0)[:-1]

    pairs = []
    for n in range(1, n_max + 1):
        value, residual, hi = shooter.eigenvalue(n, lo, hi)
        zeta, v, left, right, scale = shooter.transformed_samples(value)
        norm = math.sqrt(simpson(v ** 2, x=zeta))
        sign = 1.0 if scale > 0.0 else -1.0
        v = sign * v / norm

        zeta_grid = np.asarray(form.zeta_of_z(grid), dtype=float)
        v_grid = sign * shooter.evaluate(zeta_grid, left, right, scale) / norm
        w = v_grid / np.asarray(form.weight_quarter(grid), dtype=float)

        pairs.append(Eigenpair(
            index=n, value=float(value), grid=np.asarray(grid, dtype=float), values=w,
            residual=residual, method='shooting', error_estimate=tol * max(abs(value), 1.0),
            zeta_grid=zeta, v_values=v,
        ))
        lo = value
    logger.debug(f"shoot_eigensolve: {n_max} modes, {len(shooter._angles)} angle evaluations")
    return pairs
