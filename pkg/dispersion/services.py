from typing import Dict, Iterable, List, Optional, Sequence, Tuple
import logging

import numpy as np
from scipy.optimize import brentq

from common.exceptions import (
    BracketFailure, GlueMismatch, NearEigenvalue, OutOfDomain, ParameterOutOfRange, SkipPoint, ZeroLambda,
)
from common.services import SpectralService
from equilibrium.profile import EquilibriumProfile
from modes_fixedpoint.problems import ModeSpec
from .operator import (
    Bump, ModeFunction, apply_operator, captured_norm_fractions, kernel_family_isentropic, operator_residual,
)
from .repositories import DispersionRepository, ModeFunctionRepository
from .resolvent import Forcing, Resolvent, ResolventProblem
from .scan import DispersionRoot, DispersionScan, SkippedPoint
from .series import BackgroundSeries, FrobeniusSeries, background_series, frobenius_series
from .system import FirstOrderSystem, assemble_system, turning_point

logger = logging.getLogger(__name__)


class DispersionService(SpectralService):
    """
    Service class for the first-order route: Frobenius start at the vacuum
    boundary, regular start at the ground, dispersion roots, mode functions
    and resolvent solves.
    """

    def __init__(self, repository: Optional[DispersionRepository] = None):
        super().__init__(repository or DispersionRepository())
        self.modes = ModeFunctionRepository(self.repository.output_dir)

    # settings

    def series_order(self) -> int:
        return int(self.option('SERIES_ORDER', 8))

    def series_offset(self, profile: EquilibriumProfile) -> float:
        return self.option('SERIES_OFFSET', 1e-6) * profile.z_plus

    def tolerances(self) -> Dict[str, float]:
        return {'rtol': self.option('ODE_RTOL', 1e-10), 'atol': self.option('ODE_ATOL', 1e-13)}

    def matching_depth(self, profile: EquilibriumProfile, z_m: Optional[float]) -> float:
        z_m = 0.5 * profile.z_plus if z_m is None else z_m
        if not 0.0 < z_m < profile.z_plus:
            raise OutOfDomain("The matching point must lie inside (0, z_plus)", details={'z_m': z_m})
        return profile.z_plus - z_m

    # system and series

    def assemble_system(self, profile: EquilibriumProfile, spec: ModeSpec, lam: float) -> FirstOrderSystem:
        """
        Raises:
            ZeroLambda: If lambda == 0
        """
        return assemble_system(profile, spec.l, lam)

    def turning_point(self, profile: EquilibriumProfile, spec: ModeSpec, lam: float) -> Optional[float]:
        return turning_point(profile, spec.l, lam)

    def background(self, profile: EquilibriumProfile, order: int) -> BackgroundSeries:
        return self.cached(f'background:{profile.fingerprint}:{order}', lambda: background_series(profile, order))

    def frobenius_series(self, profile: EquilibriumProfile, spec: ModeSpec, lam: float, order: Optional[int] = None,
                         require_second: bool = True) -> FrobeniusSeries:
        """
        Frobenius fundamental matrix at z_plus, truncated at the given order.

        Raises:
            ZeroLambda: If lambda == 0
            ResonanceUnhandled: If an integer nu obstructs the singular column and require_second is set
        """
        if lam == 0.0:
            raise ZeroLambda(details={'l': spec.l})
        order = order or self.series_order()
        return frobenius_series(profile, spec.l, lam, order, self.series_offset(profile),
                                background=self.background(profile, 2 * order), require_second=require_second)

    def integrate_regular(self, system: FirstOrderSystem, z_to: float,
                          initial: Tuple[float, float] = (0.0, 1.0)) -> np.ndarray:
        """
        (w, eta) at z_to of the solution starting from (w, eta) = initial at the ground.

        Raises:
            OutOfDomain: Unless 0 <= z_to < z_plus
            StepFailure: If the integrator breaks down
        """
        if z_to == 0.0:
            return np.asarray(initial, dtype=float)
        return system.propagate(np.asarray(initial, dtype=float), 0.0, z_to, **self.tolerances())

    def _branches(self, system: FirstOrderSystem, series: FrobeniusSeries, s_m: float) -> Tuple[np.ndarray, np.ndarray]:
        """Scaled (w, p) of phi_O and phi_S at depth s_m."""
        z_plus, tolerances = system.z_plus, self.tolerances()
        regular = system.to_scaled(z_plus, (0.0, 1.0))
        regular = system.integrate_scaled(z_plus, s_m, regular, **tolerances)[0]
        vacuum = system.integrate_scaled(series.s0, s_m, series.first(series.s0)[0], **tolerances)[0]
        return regular, vacuum

    # dispersion function

    def check_lambda(self, profile: EquilibriumProfile, spec: ModeSpec, lam: float) -> None:
        """
        Raises:
            ZeroLambda: If lambda == 0
            SkipPoint: If lambda lies in the skip window around l g
        """
        if lam == 0.0:
            raise ZeroLambda(details={'l': spec.l})
        l_g = spec.l * profile.g
        if abs(lam - l_g) <= self.option('SKIP_HALF_WIDTH', 1e-6) * l_g:
            raise SkipPoint(details={'lambda': lam, 'l_g': l_g})

    def dispersion_value(self, profile: EquilibriumProfile, spec: ModeSpec, lam: float,
                         z_m: Optional[float] = None) -> float:
        """
        D(z_m, lambda) = w_O eta_S - eta_O w_S, zero exactly at eigenvalues.

        Raises:
            ZeroLambda: If lambda == 0
            SkipPoint: If lambda is too close to l g
            OutOfDomain: If z_m is not inside (0, z_plus)
        """
        self.check_lambda(profile, spec, lam)
        s_m = self.matching_depth(profile, z_m)
        system = self.assemble_system(profile, spec, lam)
        series = self.frobenius_series(profile, spec, lam, require_second=False)
        regular, vacuum = self._branches(system, series, s_m)
        return float(s_m ** profile.nu * (regular[0] * vacuum[1] - regular[1] * vacuum[0]))

    def refine_root(self, profile: EquilibriumProfile, spec: ModeSpec, bracket: Tuple[float, float],
                    z_m: Optional[float] = None) -> float:
        """
        Raises:
            BracketFailure: If D does not change sign over the bracket
        """
        left, right = bracket
        f = lambda lam: self.dispersion_value(profile, spec, lam, z_m)
        f_left, f_right = f(left), f(right)
        if f_left == 0.0:
            return float(left)
        if f_right == 0.0:
            return float(right)
        if np.sign(f_left) == np.sign(f_right):
            raise BracketFailure(details={'bracket': [left, right], 'D': [f_left, f_right]})
        rtol = self.option('ROOT_RTOL', 1e-12)
        return float(brentq(f, left, right, xtol=1e-3 * rtol * min(abs(left), abs(right)), rtol=rtol))

    def _root(self, profile: EquilibriumProfile, spec: ModeSpec, bracket: Tuple[float, float],
              d_bracket: Tuple[float, float], z_m: Optional[float]) -> DispersionRoot:
        lam = self.refine_root(profile, spec, bracket, z_m)
        step = 1e-6 * lam
        derivative = (self.dispersion_value(profile, spec, lam + step, z_m)
                      - self.dispersion_value(profile, spec, lam - step, z_m)) / (2.0 * step)
        scale = max(abs(d) for d in d_bracket) / (bracket[1] - bracket[0])
        simple = abs(derivative) > self.option('SIMPLICITY_FLOOR', 1e-8) * scale
        if not simple:
            logger.warning(f"dispersion root {lam:.12g} is not numerically simple (dD/dlambda={derivative:.3e})")
        return DispersionRoot(lam=lam, derivative=derivative, simple=simple, bracket=bracket)

    def scan_and_refine(self, profile: EquilibriumProfile, spec: ModeSpec, lambda_range: Tuple[float, float],
                        grid_size: Optional[int] = None, z_m: Optional[float] = None) -> DispersionScan:
        """
        Sample D on a log-spaced grid and refine every sign change.

        Points in the skip window around l g are recorded rather than evaluated;
        a sign change across that window is noted and left unrefined.

        Raises:
            ParameterOutOfRange: Unless 0 < lambda_min < lambda_max
        """
        low, high = (float(value) for value in lambda_range)
        if not 0.0 < low < high:
            raise ParameterOutOfRange("The lambda range must satisfy 0 < min < max",
                                      details={'lambda_min': low, 'lambda_max': high})
        grid_size = grid_size or self.option('SCAN_POINTS', 64)
        self.validate_count('grid_size', grid_size, minimum=16)
        z_m = 0.5 * profile.z_plus if z_m is None else z_m

        grid = np.geomspace(low, high, int(grid_size))
        values = np.full(grid.size, np.nan)
        skipped: List[SkippedPoint] = []
        for i, lam in enumerate(grid):
            try:
                values[i] = self.dispersion_value(profile, spec, float(lam), z_m)
            except SkipPoint:
                logger.info(f"dispersion scan: skipped lambda={lam:.12g} next to l*g")
                skipped.append(SkippedPoint(lam=float(lam), note='skip window around l*g'))

        evaluated = np.flatnonzero(np.isfinite(values))
        roots: List[DispersionRoot] = []
        for i, j in zip(evaluated[:-1], evaluated[1:]):
            if np.sign(values[i]) * np.sign(values[j]) > 0.0:
                continue
            bracket = (float(grid[i]), float(grid[j]))
            try:
                root = self._root(profile, spec, bracket, (values[i], values[j]), z_m)
            except SkipPoint:
                logger.warning(f"dispersion scan: sign change across the l*g window in {bracket}")
                skipped.append(SkippedPoint(lam=spec.l * profile.g, note='sign change across l*g'))
                continue
            separation = self.option('ROOT_SEPARATION', 1e-10)
            if roots and abs(root.lam - roots[-1].lam) <= separation * abs(root.lam):
                continue
            roots.append(root)

        self.log_operation('scan_and_refine', profile.fingerprint[:12], {
            'l': spec.l, 'lambda_min': low, 'lambda_max': high, 'points': int(grid_size),
            'roots': len(roots), 'skipped': len(skipped),
        })
        return DispersionScan(lambda_grid=grid, d_values=values, z_m=z_m, roots=roots, skipped=skipped)

    # mode functions

    def depth_grid(self, profile: EquilibriumProfile, points: int, s_min: float = 0.0) -> np.ndarray:
        """Increasing depths from s_min to z_plus, clustered quadratically at s_min."""
        t = np.linspace(0.0, 1.0, int(points))
        return s_min + (profile.z_plus - s_min) * t ** 2

    def reconstruct_eigenfunction(self, profile: EquilibriumProfile, spec: ModeSpec, lam: float,
                                  z_m: Optional[float] = None, points: Optional[int] = None) -> ModeFunction:
        """
        Glue phi_O and phi_S at z_m into a mode normalized to w(z_plus) = 1.

        Depths below the series offset are evaluated from the Frobenius series.

        Raises:
            GlueMismatch: If the branches are not parallel at z_m
        """
        self.check_lambda(profile, spec, lam)
        s_m = self.matching_depth(profile, z_m)
        points = points or self.option('OPERATOR_GRID_POINTS', 4001)
        system = self.assemble_system(profile, spec, lam)
        series = self.frobenius_series(profile, spec, lam, require_second=False)
        nu, g, l, s0 = profile.nu, profile.g, spec.l, series.s0
        tolerances = self.tolerances()

        depth = self.depth_grid(profile, points)
        scaled = np.zeros((2, depth.size))
        near = depth < s0
        scaled[:, near] = series.first(depth[near]).T

        upper = (depth >= s0) & (depth < s_m)
        vacuum, samples = system.integrate_scaled(s0, s_m, series.first(s0)[0], s_eval=depth[upper], **tolerances)
        scaled[:, upper] = samples

        lower = depth >= s_m
        regular, samples = system.integrate_scaled(profile.z_plus, s_m, system.to_scaled(profile.z_plus, (0.0, 1.0)),
                                                   s_eval=depth[lower], **tolerances)

        phi_o = system.from_scaled(s_m, regular)
        phi_s = system.from_scaled(s_m, vacuum)
        mismatch = abs(phi_o[0] * phi_s[1] - phi_o[1] * phi_s[0]) / (np.linalg.norm(phi_o) * np.linalg.norm(phi_s))
        if mismatch > self.option('GLUE_TOLERANCE', 1e-6):
            raise GlueMismatch(details={'lambda': lam, 'mismatch': float(mismatch), 'z_m': profile.z_plus - s_m})
        scaled[:, lower] = samples * (np.dot(phi_s, phi_o) / np.dot(phi_o, phi_o))

        alpha = float(scaled[0, 0])
        w, p = scaled / alpha
        ratio = np.empty_like(depth)
        inside = depth > 0.0
        ratio[inside] = (depth[inside] / system.eta_of_depth(depth[inside])) ** nu
        ratio[~inside] = 1.0 / self.background(profile, 2 * series.order).R[0]
        u = -(l / lam) * (p * ratio + g * w)
        eta = depth ** nu * p

        flip = slice(None, None, -1)
        mode = ModeFunction(
            lam=lam, l=l, grid=profile.z_plus - depth[flip], u=u[flip], w=w[flip], eta=eta[flip],
            alpha=1.0, u_trace=-l * g / lam, mismatch=float(mismatch),
        )
        self.log_operation('reconstruct_eigenfunction', profile.fingerprint[:12], {
            'l': l, 'lambda': lam, 'mismatch': float(mismatch), 'zeros': mode.zeros,
        })
        return mode

    # operator

    def operator_grid(self, profile: EquilibriumProfile, points: Optional[int] = None) -> np.ndarray:
        return np.linspace(0.0, profile.z_plus, points or self.option('OPERATOR_GRID_POINTS', 4001))

    def apply_operator(self, profile: EquilibriumProfile, spec: ModeSpec, grid, u, w) -> Tuple[np.ndarray, np.ndarray]:
        """
        Raises:
            GridTooCoarse: If the grid cannot carry the derivative splines
        """
        return apply_operator(profile, spec.l, grid, u, w, degree=self.option('OPERATOR_SPLINE_DEGREE', 5))

    def mode_residual(self, profile: EquilibriumProfile, mode: ModeFunction) -> float:
        """||(L - lambda)(u, w)|| / ||(u, w)|| of a reconstructed mode."""
        return operator_residual(profile, mode.l, mode.grid, mode.u, mode.w, mode.lam)

    def kernel_family_isentropic(self, profile: EquilibriumProfile, spec: ModeSpec, upsilon: Bump,
                                 grid: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
        """
        Raises:
            NotIsentropic: If the profile carries buoyancy
        """
        grid = self.operator_grid(profile) if grid is None else grid
        return kernel_family_isentropic(profile, spec.l, upsilon, grid)

    # resolvent

    def resolvent(self, profile: EquilibriumProfile, spec: ModeSpec, lam: float,
                  roots: Sequence[float] = (), points: Optional[int] = None) -> Resolvent:
        """
        Fundamental solutions phi_O and phi_S sampled on a depth grid from s0 to z_plus.

        Raises:
            ZeroLambda: If lambda == 0
            NearEigenvalue: If lambda is within the tolerance of a known root,
                or the fundamental matrix is numerically singular
        """
        if lam == 0.0:
            raise ZeroLambda(details={'l': spec.l})
        near = self.option('NEAR_ROOT_RTOL', 1e-8)
        for root in roots:
            if abs(lam - root) <= near * max(1.0, abs(root)):
                raise NearEigenvalue(details={'lambda': lam, 'root': float(root), 'distance': abs(lam - root)})

        system = self.assemble_system(profile, spec, lam)
        series = self.frobenius_series(profile, spec, lam, require_second=False)
        tolerances = self.tolerances()
        depth = self.depth_grid(profile, points or self.option('OPERATOR_GRID_POINTS', 4001), s_min=series.s0)
        start = system.to_scaled(profile.z_plus, (0.0, 1.0))
        regular = system.integrate_scaled(profile.z_plus, series.s0, start, s_eval=depth, **tolerances)[1]
        vacuum = system.integrate_scaled(series.s0, profile.z_plus, series.first(series.s0)[0],
                                         s_eval=depth, **tolerances)[1]

        middle = depth.size // 2
        weight = depth[middle] ** profile.nu
        phi_o = np.array([regular[0, middle], weight * regular[1, middle]])
        phi_s = np.array([vacuum[0, middle], weight * vacuum[1, middle]])
        determinant = float(phi_o[0] * phi_s[1] - phi_o[1] * phi_s[0])
        condition = abs(determinant) / (np.linalg.norm(phi_o) * np.linalg.norm(phi_s))
        if condition < self.option('NEAR_EIGENVALUE_TOLERANCE', 1e-10):
            raise NearEigenvalue(details={'lambda': lam, 'condition': float(condition)})
        return Resolvent(profile=profile, l=spec.l, lam=lam, depth=depth, regular=regular, vacuum=vacuum,
                         determinant=determinant, condition=float(condition))

    def resolvent_solve(self, profile: EquilibriumProfile, spec: ModeSpec, lam: float, forcing_u: Forcing,
                        forcing_w: Forcing, roots: Sequence[float] = ()) -> ResolventProblem:
        """
        Solve (L - lambda)(u, w) = (f^u, f^w).

        Raises:
            NearEigenvalue: If lambda is too close to the spectrum
        """
        problem = self.resolvent(profile, spec, lam, roots).solve(forcing_u, forcing_w)
        self.log_operation('resolvent_solve', profile.fingerprint[:12], {
            'l': spec.l, 'lambda': lam, 'bound': problem.bound, 'residual': problem.residual,
        })
        return problem

    def captured_norm_fractions(self, grid, weight, field: Tuple[np.ndarray, np.ndarray],
                                modes: Iterable[Tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
        return captured_norm_fractions(grid, weight, field, list(modes))

    # export

    def export_scan(self, scan: DispersionScan, stem: str = 'dispersion') -> Dict[str, str]:
        self.repository.write_scan(f'{stem}.csv', scan)
        return dict(self.repository.written)

    def export_mode(self, mode: ModeFunction, stem: str = 'mode') -> Dict[str, str]:
        self.modes.write_mode(f'{stem}.csv', mode)
        return dict(self.modes.written)
