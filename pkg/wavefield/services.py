from dataclasses import replace
from typing import Dict, Optional, Sequence
import logging
import math

import numpy as np

from common.exceptions import InversionFailure, NonInvertibleMap, OutOfDomain, ParameterOutOfRange
from common.services import SpectralService
from dispersion.operator import apply_operator, background_on, trapezoid_weights
from equilibrium.profile import EquilibriumProfile
from modes_fixedpoint.problems import check_quantized
from .fields import BoundarySurface, FieldKind, ModeTerm, PerturbationField, snapshot_columns
from .repositories import SnapshotRepository, SurfaceRepository

logger = logging.getLogger(__name__)


class WavefieldService(SpectralService):
    """
    Service class for linear displacement fields: standing and progressive
    superpositions, motion of the vacuum boundary and the residual of the
    linear wave equation.
    """

    def __init__(self, repository: Optional[SurfaceRepository] = None):
        super().__init__(repository or SurfaceRepository())
        self.snapshots = SnapshotRepository(self.repository.output_dir)

    def default_epsilon(self) -> float:
        return self.option('DEFAULT_EPSILON', 1e-2)

    # construction

    def build_field(self, terms: Sequence[ModeTerm], kind: FieldKind, epsilon: Optional[float] = None,
                    x_plus: float = 1.0, y_plus: float = 1.0) -> PerturbationField:
        """
        Raises:
            PeriodMismatch: If a wavenumber is not quantized by its period
            ParameterOutOfRange: If there are no terms, a term amplitude exceeds
                MAX_AMPLITUDE, or a progressive term has l == 0
            OutOfDomain: If the terms disagree on z_plus
        """
        epsilon = self.default_epsilon() if epsilon is None else epsilon
        terms = tuple(terms)
        if not terms:
            raise ParameterOutOfRange("A field needs at least one mode term")
        self.validate_positive(x_plus=x_plus, y_plus=y_plus)

        limit = self.option('MAX_AMPLITUDE', 0.05)
        z_plus = terms[0].z_plus
        for term in terms:
            if term.direction == 'x':
                check_quantized(term.l, x_plus, 'x_plus')
            else:
                check_quantized(term.l, y_plus, 'y_plus')
            if abs(epsilon * term.amplitude) > limit:
                raise ParameterOutOfRange("Term amplitude above the linear regime",
                                          details={'amplitude': epsilon * term.amplitude, 'limit': limit})
            if kind == FieldKind.PROGRESSIVE and term.l == 0.0:
                raise ParameterOutOfRange("Progressive terms need l > 0", details={'lambda': term.lam})
            if abs(term.z_plus - z_plus) > 1e-12 * z_plus:
                raise OutOfDomain("Mode terms sampled on different slabs",
                                  details={'z_plus': z_plus, 'other': term.z_plus})
        return PerturbationField(terms=terms, kind=kind, epsilon=epsilon, x_plus=x_plus, y_plus=y_plus)

    def standing_field(self, terms: Sequence[ModeTerm], epsilon: Optional[float] = None,
                       x_plus: float = 1.0, y_plus: float = 1.0) -> PerturbationField:
        return self.build_field(terms, FieldKind.STANDING, epsilon, x_plus, y_plus)

    def progressive_field(self, terms: Sequence[ModeTerm], epsilon: Optional[float] = None,
                          x_plus: float = 1.0, y_plus: float = 1.0) -> PerturbationField:
        return self.build_field(terms, FieldKind.PROGRESSIVE, epsilon, x_plus, y_plus)

    # boundary

    def boundary_motion(self, field: PerturbationField, times, xbar, epsilon: Optional[float] = None) -> BoundarySurface:
        """
        Track the vacuum boundary on y = 0 by inverting xbar = x + xi1(t, x, 0, z_plus).

        The map x -> x + xi1 is a contraction perturbation of the identity
        while the summed boundary strains stay below 1/2.

        Raises:
            NonInvertibleMap: If sum eps |a| l |u(z_plus)| >= 1/2
            InversionFailure: If the fixed-point iteration stalls
        """
        if epsilon is not None:
            field = field.scaled(epsilon)
        margin = field.invertibility_margin()
        if margin >= 0.5:
            raise NonInvertibleMap(details={'margin': margin, 'epsilon': field.epsilon})

        times = np.atleast_1d(np.asarray(times, dtype=float))
        xbar = np.atleast_1d(np.asarray(xbar, dtype=float))
        t, target = np.meshgrid(times, xbar, indexing='ij')
        z_plus = field.z_plus
        tolerance = self.option('SURFACE_TOLERANCE', 1e-12) * max(1.0, field.x_plus)

        x = target.copy()
        for iteration in range(1, 201):
            updated = target - field.displacement(t, x, 0.0, z_plus)[0]
            change = float(np.max(np.abs(updated - x)))
            x = updated
            if change <= tolerance:
                break
        else:
            raise InversionFailure("Boundary label iteration did not converge", details={'change': change})

        zbar = z_plus + field.displacement(t, x, 0.0, z_plus)[2]
        jacobian = 1.0 / (1.0 + field.strain(t, x, z_plus))
        surface = BoundarySurface(times=times, xbar=xbar, x=x, zbar=zbar, jacobian=jacobian,
                                  epsilon=field.epsilon, z_plus=z_plus, iterations=iteration)
        self.log_operation('boundary_motion', None, {
            'epsilon': field.epsilon, 'iterations': iteration, 'margin': round(margin, 6),
        })
        return surface

    # wave equation

    def with_operator(self, field: PerturbationField, profile: EquilibriumProfile) -> PerturbationField:
        """Attach (L^u, L^w) of every term, computed on the term grid."""
        if abs(field.z_plus - profile.z_plus) > 1e-12 * profile.z_plus:
            raise OutOfDomain("Field and profile disagree on z_plus",
                              details={'field': field.z_plus, 'profile': profile.z_plus})
        degree = self.option('OPERATOR_SPLINE_DEGREE', 5)
        images = tuple(apply_operator(profile, term.l, term.grid, term.u, term.w, degree=degree)
                       for term in field.terms)
        return replace(field, operator_images=images)

    def wave_residual(self, field: PerturbationField, profile: EquilibriumProfile, times,
                      points: int = 16, normalize: bool = True) -> float:
        """
        Residual of d^2 xi/dt^2 + L xi = 0 for a field, in the rho-weighted norm.

        Time derivatives are central second differences with step
        1e-3 / sqrt(lambda_max). With normalize the result is
        max_t ||xi_tt + L xi|| / max_t ||L xi||, otherwise the numerator alone.
        """
        self.validate_count('points', points, minimum=1)
        if field.epsilon == 0.0:
            return 0.0
        if not field.operator_images:
            field = self.with_operator(field, profile)

        grid = field.terms[0].grid
        rho = background_on(profile, grid)[1]
        weights = trapezoid_weights(grid) * rho
        xs = np.linspace(0.0, field.x_plus, points, endpoint=False)
        ys = (np.linspace(0.0, field.y_plus, points, endpoint=False)
              if any(term.direction == 'y' for term in field.terms) else np.zeros(1))
        y, x, z = ys[:, None, None], xs[None, :, None], grid[None, None, :]
        step = 1e-3 / max(term.frequency for term in field.terms)

        def norm(components) -> float:
            density = sum(np.asarray(component) ** 2 for component in components)
            return math.sqrt(float(np.mean(np.sum(density * weights, axis=-1))))

        residuals, images = [], []
        for t in np.atleast_1d(np.asarray(times, dtype=float)):
            before, now, after = (field.displacement(t + shift, x, y, z) for shift in (-step, 0.0, step))
            image = field.operator_image(t, x, y, z)
            acceleration = [(a - 2.0 * b + c) / step ** 2 for a, b, c in zip(after, now, before)]
            residuals.append(norm([a + b for a, b in zip(acceleration, image)]))
            images.append(norm(image))

        numerator, scale = max(residuals), max(images)
        result = numerator if not normalize else (numerator / scale if scale > 0.0 else 0.0)
        self.log_operation('wave_residual', profile.fingerprint[:12], {
            'terms': len(field.terms), 'residual': result, 'normalized': normalize,
        })
        return result

    # export

    def snapshots_of(self, field: PerturbationField, times, xs, zs) -> Dict[str, np.ndarray]:
        return snapshot_columns(field, np.asarray(times, dtype=float), np.asarray(xs, dtype=float),
                                np.asarray(zs, dtype=float))

    def export_surface(self, surface: BoundarySurface, stem: str = 'wavefield') -> Dict[str, str]:
        self.repository.write_surface(f'{stem}_surface.csv', surface)
        return dict(self.repository.written)

    def export_snapshots(self, columns: Dict[str, np.ndarray], stem: str = 'wavefield') -> Dict[str, str]:
        self.snapshots.write_snapshots(f'{stem}_snapshots.csv', columns)
        return dict(self.snapshots.written)
