from typing import Dict, Optional
import logging

import numpy as np

from common.exceptions import IndexOutOfRange
from common.services import SpectralService
from equilibrium.profile import EquilibriumProfile
from slcore.finite_difference import Discretization, discretize, weighted_residual
from slcore.problems import MeshSpec
from slcore.repositories import EigenpairRepository
from slcore.services import SturmLiouvilleService, max_relative_disagreement
from .repositories import ClosedFormRepository
from .spectrum import (
    VerticalModeFunction, VerticalSpectrum, bessel_vertical_eigenvalues, vertical_problem,
)

logger = logging.getLogger(__name__)


class VerticalModeService(SpectralService):
    """
    Service class for the l = 0 spectrum.
    """

    def __init__(self, repository: Optional[EigenpairRepository] = None,
                 solver: Optional[SturmLiouvilleService] = None):
        super().__init__(repository or EigenpairRepository())
        self.solver = solver or SturmLiouvilleService(self.repository)
        self.closed_forms = ClosedFormRepository(self.repository.output_dir)

    def vertical_spectrum(self, profile: EquilibriumProfile, n_max: int, mesh: Optional[MeshSpec] = None,
                          shooting: bool = True) -> VerticalSpectrum:
        """
        Vertical eigenvalues by the finite-difference oracle, cross-validated by shooting.

        Args:
            profile: Admissible profile
            n_max: Number of modes
            mesh: Finite-difference mesh (defaults from settings)
            shooting: Also solve the Liouville form by shooting

        Returns:
            VerticalSpectrum with the maximum relative disagreement of the two methods
        """
        self.validate_count('n_max', n_max, minimum=1)
        problem = vertical_problem(profile)
        mesh = mesh or self.solver.mesh_spec()
        if shooting:
            pairs, shot, disagreement = self.solver.solve_both(problem, n_max, mesh)
        else:
            pairs, shot, disagreement = self.solver.fd_eigensolve(problem, n_max, mesh), [], None

        values = np.array([pair.value for pair in pairs])
        if values[0] <= 0.0 or np.any(np.diff(values) <= 0.0):
            logger.warning(f"vertical spectrum of {profile.fingerprint[:12]} is not positive and increasing: {values}")
        spectrum = VerticalSpectrum(
            profile_id=profile.fingerprint, pairs=pairs, problem=problem, mesh=mesh,
            shooting=shot, disagreement=disagreement,
        )
        self.log_operation('vertical_spectrum', profile.fingerprint[:12], {
            'n_max': n_max, 'lambda_1': float(values[0]), 'disagreement': disagreement,
        })
        return spectrum

    def vertical_mode_function(self, spectrum: VerticalSpectrum, n: int) -> VerticalModeFunction:
        """
        Eigenfunction w_n and its transformed version W_n = (a kappa)**(1/4) w_n.

        The residual is that of the discrete l = 0 equation applied to w_n on its
        mesh, at the Rayleigh quotient of w_n, in the rho-weighted norm.

        Raises:
            IndexOutOfRange: If n is not among the computed modes
        """
        if not 1 <= n <= len(spectrum.pairs):
            raise IndexOutOfRange(details={'n': n, 'available': len(spectrum.pairs)})
        pair = spectrum.pairs[n - 1]
        grid = pair.grid
        a, _, kappa = spectrum.problem.coefficients(grid[:-1])
        transformed = np.zeros_like(pair.values)
        transformed[:-1] = (a * kappa) ** 0.25 * pair.values[:-1]
        return VerticalModeFunction(
            n=n, value=pair.value, grid=grid, w=pair.values, transformed=transformed,
            residual=self.ode_residual(spectrum, pair.values),
        )

    def finest_discretization(self, spectrum: VerticalSpectrum) -> Discretization:
        mesh = spectrum.mesh
        cells = mesh.cells * 2 ** (max(mesh.refinements, 1) - 1)
        return discretize(spectrum.problem, cells, mesh.grading(spectrum.problem))

    def ode_residual(self, spectrum: VerticalSpectrum, w: np.ndarray, value: Optional[float] = None) -> float:
        """Weighted residual of -(c2 rho w')' - value rho w for w sampled on the finest mesh."""
        return weighted_residual(self.finest_discretization(spectrum), w, value)

    def gram_matrix(self, spectrum: VerticalSpectrum) -> np.ndarray:
        """Lumped-mass inner products of the computed eigenfunctions."""
        disc = self.finest_discretization(spectrum)
        vectors = np.array([pair.values[disc.unknowns] for pair in spectrum.pairs])
        return (vectors * disc.mass) @ vectors.T

    def bessel_vertical_eigenvalues(self, profile: EquilibriumProfile, count: int) -> np.ndarray:
        """
        Closed-form isentropic eigenvalues.

        Raises:
            NotIsentropic: If the profile is not isentropic
        """
        return bessel_vertical_eigenvalues(profile, count)

    def closed_form_disagreement(self, spectrum: VerticalSpectrum, profile: EquilibriumProfile) -> float:
        exact = self.bessel_vertical_eigenvalues(profile, len(spectrum.pairs))
        return max_relative_disagreement(list(spectrum.values), list(exact))

    def export(self, spectrum: VerticalSpectrum, stem: str = 'spectrum_l0', closed_form: Optional[np.ndarray] = None) -> Dict[str, str]:
        """Write the eigenpair table, one eigenfunction file per mode, and the closed form if given."""
        written = self.solver.export(stem, spectrum.pairs)
        if closed_form is not None:
            self.closed_forms.write_values(f'{stem}_closed_form.csv', closed_form)
        return {**written, **self.closed_forms.written}
