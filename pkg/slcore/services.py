from typing import Dict, List, Optional, Tuple
import logging

import numpy as np

from .finite_difference import fd_eigensolve
from .liouville import liouville_transform
from .problems import Eigenpair, MeshSpec, SchrodingerForm, SLProblem
from .repositories import EigenfunctionRepository, EigenpairRepository
from .shooting import shoot_eigensolve
from .variational import rayleigh_quotient
from common.services import SpectralService

logger = logging.getLogger(__name__)


class SturmLiouvilleService(SpectralService):
    """
    Service class for the weighted Sturm-Liouville solvers.

    Reads mesh sizes and tolerances from the SPECTRAL_LAB settings and logs
    every solve.
    """

    def __init__(self, repository: Optional[EigenpairRepository] = None,
                 functions: Optional[EigenfunctionRepository] = None):
        super().__init__(repository or EigenpairRepository())
        self.functions = functions or EigenfunctionRepository(self.repository.output_dir)

    def mesh_spec(self, **overrides) -> MeshSpec:
        """Default mesh from settings with keyword overrides."""
        spec = {
            'cells': self.option('FD_CELLS', 400),
            'refinements': self.option('FD_REFINEMENTS', 2),
            'tolerance': self.option('FD_TOLERANCE', 1e-2),
        }
        spec.update(overrides)
        return MeshSpec(**spec)

    def liouville_transform(self, problem: SLProblem) -> SchrodingerForm:
        return liouville_transform(
            problem,
            table_points=self.option('LIOUVILLE_TABLE_POINTS', 1200),
            derivative_step=self.option('LIOUVILLE_DERIVATIVE_STEP', 1e-2),
        )

    def fd_eigensolve(self, problem: SLProblem, n_max: int, mesh: Optional[MeshSpec] = None) -> List[Eigenpair]:
        """
        Finite-difference oracle eigenpairs.

        Args:
            problem: Sturm-Liouville problem
            n_max: Number of eigenpairs
            mesh: Mesh settings (defaults from settings)

        Returns:
            List of Eigenpair

        Raises:
            MeshTooCoarse: If refinements disagree
        """
        self.validate_count('n_max', n_max)
        pairs = fd_eigensolve(problem, n_max, mesh or self.mesh_spec())
        self.log_operation('fd_eigensolve', problem.name, {
            'n_max': n_max, 'lambda_1': pairs[0].value if pairs else None,
        })
        return pairs

    def shoot_eigensolve(self, form: SchrodingerForm, n_max: int, tol: Optional[float] = None,
                         match_fraction: float = 0.5) -> List[Eigenpair]:
        """
        Shooting eigenpairs of a Schrodinger form.

        Raises:
            LimitCircleEndpoint: If cq <= 3/4
            BracketFailure: If a mode cannot be bracketed
        """
        self.validate_count('n_max', n_max)
        pairs = shoot_eigensolve(
            form, n_max,
            tol=tol or self.option('SHOOTING_RTOL', 1e-10),
            offset=self.option('SHOOTING_OFFSET', 1e-6),
            match_fraction=match_fraction,
            expansions=self.option('BRACKET_EXPANSIONS', 60),
        )
        name = form.problem.name if form.problem is not None else 'form'
        self.log_operation('shoot_eigensolve', name, {
            'n_max': n_max, 'lambda_1': pairs[0].value if pairs else None,
        })
        return pairs

    def solve_both(self, problem: SLProblem, n_max: int, mesh: Optional[MeshSpec] = None
                   ) -> Tuple[List[Eigenpair], List[Eigenpair], float]:
        """
        Solve by the oracle and by transformed shooting.

        Returns:
            (fd pairs, shooting pairs, maximum relative disagreement)
        """
        oracle = self.fd_eigensolve(problem, n_max, mesh)
        shooting = self.shoot_eigensolve(self.liouville_transform(problem), n_max)
        disagreement = max_relative_disagreement(
            [pair.value for pair in oracle], [pair.value for pair in shooting])
        self.log_operation('solve_both', problem.name, {'disagreement': disagreement})
        return oracle, shooting, disagreement

    def rayleigh_quotient(self, form: SchrodingerForm, zeta: np.ndarray, v: np.ndarray) -> float:
        return rayleigh_quotient(form, zeta, v)

    def export(self, stem: str, pairs: List[Eigenpair], functions: bool = True) -> Dict[str, str]:
        """Write the eigenpair table and, optionally, one eigenfunction file per mode."""
        self.repository.write_pairs(f'{stem}.csv', pairs)
        if functions:
            for pair in pairs:
                self.functions.write_function(stem, pair)
        return {**self.repository.written, **self.functions.written}


def max_relative_disagreement(first: List[float], second: List[float]) -> float:
    """Largest |x - y| / max(|x|, |y|) over paired values; 0 for empty input."""
    first, second = np.asarray(first, dtype=float), np.asarray(second, dtype=float)
    count = min(first.size, second.size)
    if count == 0:
        return 0.0
    first, second = first[:count], second[:count]
    scale = np.maximum(np.maximum(np.abs(first), np.abs(second)), 1e-300)
    return float(np.max(np.abs(first - second) / scale))
