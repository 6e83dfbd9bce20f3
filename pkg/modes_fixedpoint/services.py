from typing import Dict, Iterable, List, Optional, Tuple
import logging

import numpy as np
from scipy.optimize import brentq

from common.exceptions import MeshTooCoarse, NoSignChange, ParameterOutOfRange, StabilityViolated
from common.services import SpectralService
from equilibrium.profile import EquilibriumProfile
from slcore.finite_difference import richardson, solve_level
from slcore.problems import MeshSpec, SLProblem
from slcore.services import SturmLiouvilleService
from .problems import (
    Branch, FixedPointResult, GroundCondition, ModeSpec, ParameterSweep, WeightedSpectrum,
    g_problem, p_problem,
)
from .repositories import FixedPointRepository, SweepRepository

logger = logging.getLogger(__name__)

CERTIFICATE_TOLERANCE = 1e-8
CERTIFICATE_SAFETY = 10.0


def positive_spectrum(problem: SLProblem, n_max: int, mesh: MeshSpec, spare: int = 2) -> Tuple[np.ndarray, np.ndarray, int]:
    """
    Smallest n_max positive eigenvalues, Richardson-extrapolated over the mesh levels.

    Returns:
        (values, error estimates, number of non-positive eigenvalues skipped)
    """
    power = mesh.grading(problem)
    while True:
        levels, dropped = [], 0
        for level in range(max(mesh.refinements, 1)):
            values = solve_level(problem, n_max + spare, mesh.cells * 2 ** level, power)[0]
            dropped = int(np.count_nonzero(values <= 0.0))
            if dropped > spare:
                break
            levels.append(values[dropped:dropped + n_max])
        else:
            extrapolated, estimate = richardson(levels, mesh.tolerance, problem.name)
            return extrapolated, estimate, dropped
        spare = 2 * dropped


class FixedPointService(SpectralService):
    """
    Service class for g-modes and p-modes found as fixed points of weighted spectra.
    """

    def __init__(self, repository: Optional[FixedPointRepository] = None,
                 solver: Optional[SturmLiouvilleService] = None):
        super().__init__(repository or FixedPointRepository())
        self.solver = solver or SturmLiouvilleService()
        self.sweeps = SweepRepository(self.repository.output_dir)

    # background checks

    def sample_grid(self, profile: EquilibriumProfile, points: int = 1001) -> np.ndarray:
        return np.linspace(0.0, profile.z_plus, points)[:-1]

    def check_stability(self, profile: EquilibriumProfile) -> None:
        """
        Raises:
            StabilityViolated: If N**2 drops to the stability floor anywhere below z_plus
        """
        min_n2 = self.cached(f"min_n2:{profile.fingerprint}", lambda: float(np.min(profile.fields(self.sample_grid(profile)).n2)))
        floor = self.option('STABILITY_FLOOR', 1e-10)
        if min_n2 <= floor:
            raise StabilityViolated(details={'min_n2': min_n2, 'floor': floor})

    def lipschitz_bound(self, profile: EquilibriumProfile, spec: ModeSpec) -> float:
        """M = max(l**2 c2 N2), the bound on |dLambda_n/dmu| of the p-branch."""
        sample = profile.fields(self.sample_grid(profile))
        return float(np.max(spec.l ** 2 * np.asarray(sample.c2) * np.asarray(sample.n2)))

    def default_lambda0(self, profile: EquilibriumProfile, spec: ModeSpec) -> float:
        return self.option('LAMBDA0_FRACTION', 0.9) * spec.l * profile.g

    def default_mu0(self, profile: EquilibriumProfile, spec: ModeSpec) -> float:
        """0.9/(l g), halved until 1/mu0 - M mu0 > 0."""
        mu0 = self.option('LAMBDA0_FRACTION', 0.9) / (spec.l * profile.g)
        bound = self.lipschitz_bound(profile, spec)
        while 1.0 / mu0 - bound * mu0 <= 0.0:
            mu0 *= 0.5
        return mu0

    # weighted spectra

    def _spectrum(self, branch: str, profile: EquilibriumProfile, spec: ModeSpec, parameter: float,
                  n_max: int, ground: GroundCondition, mesh: Optional[MeshSpec]) -> WeightedSpectrum:
        self.validate_count('n_max', n_max, minimum=1)
        ground = GroundCondition(ground)
        mesh = mesh or self.solver.mesh_spec()
        build = g_problem if branch == Branch.G.value else p_problem
        problem = build(profile, spec, parameter, ground)
        key = f'{branch}:{profile.fingerprint}:{spec.l!r}:{ground.value}:{parameter!r}:{n_max}:{mesh}'

        def compute():
            values, estimate, dropped = positive_spectrum(problem, n_max, mesh)
            if dropped:
                logger.debug(f"{problem.name}: skipped {dropped} non-positive eigenvalues")
            return WeightedSpectrum(branch=branch, parameter=parameter, values=values,
                                    nonpositive=dropped, error_estimate=estimate)

        return self.cached(key, compute)

    def g_weighted_spectrum(self, profile: EquilibriumProfile, spec: ModeSpec, lam: float, n_max: int,
                            ground: GroundCondition = GroundCondition.ROBIN,
                            mesh: Optional[MeshSpec] = None) -> WeightedSpectrum:
        """
        Positive eigenvalues Lambda_n(lambda) of the g-branch problem.

        Raises:
            StabilityViolated: If N**2 is not positive everywhere
            ParameterOutOfRange: Unless 0 <= lambda < l g
        """
        self.check_stability(profile)
        return self._spectrum(Branch.G.value, profile, spec, lam, n_max, ground, mesh)

    def p_weighted_spectrum(self, profile: EquilibriumProfile, spec: ModeSpec, mu: float, n_max: int,
                            ground: GroundCondition = GroundCondition.ROBIN,
                            mesh: Optional[MeshSpec] = None) -> WeightedSpectrum:
        """
        Positive eigenvalues Lambda_n(mu) of the p-branch problem.

        Raises:
            ParameterOutOfRange: Unless 0 <= mu < 1/(l g)
        """
        return self._spectrum(Branch.P.value, profile, spec, mu, n_max, ground, mesh)

    # fixed points

    def fixed_point(self, branch: str, profile: EquilibriumProfile, spec: ModeSpec, n: int, upper: float,
                    n_max: Optional[int] = None, ground: GroundCondition = GroundCondition.ROBIN) -> FixedPointResult:
        """
        Certified roots of f(p) = p - 1/Lambda_n(p) on (0, upper].

        The scan runs over log-spaced parameter points; every sign change is
        refined by brentq and kept only if |p Lambda_n(p) - 1| stays below
        max(1e-8, 10 x the relative Richardson estimate of Lambda_n), which
        discards the jumps where a Robin eigenvalue changes sign.
        The smallest root is designated for the g-branch, the smallest mu
        (largest lambda) for the p-branch.

        Raises:
            NoSignChange: If no certified root lies on the scan
        """
        self.validate_count('n', n, minimum=1)
        n_max = max(n_max or n, n)
        spectrum = self.g_weighted_spectrum if branch == Branch.G.value else self.p_weighted_spectrum

        def capital(p: float) -> float:
            return float(spectrum(profile, spec, p, n_max, ground).values[n - 1])

        def certificate(p: float) -> Tuple[float, float]:
            sample = spectrum(profile, spec, p, n_max, ground)
            value = float(sample.values[n - 1])
            estimate = sample.error_estimate
            noise = float(estimate[n - 1]) / value if estimate is not None and np.isfinite(estimate[n - 1]) else 0.0
            return abs(p * value - 1.0), max(CERTIFICATE_TOLERANCE, CERTIFICATE_SAFETY * noise)

        def f(p: float) -> float:
            return p - 1.0 / capital(p)

        points = self.option('FIXED_POINT_SCAN_POINTS', 64)
        floor = self.option('FIXED_POINT_SCAN_FLOOR', 1e-4)
        xtol = self.option('FIXED_POINT_XTOL', 1e-12)
        grid = np.geomspace(upper * floor, upper, points)
        values = np.array([f(p) for p in grid])

        roots: List[Tuple[float, Tuple[float, float], float]] = []
        for i in np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0.0):
            left, right = float(grid[i]), float(grid[i + 1])
            try:
                root = brentq(f, left, right, xtol=xtol)
                residual, tolerance = certificate(root)
            except MeshTooCoarse as e:
                # mesh levels disagree on which Robin eigenvalues are positive
                logger.debug(f"{branch}-mode n={n}: discarded unresolved jump in [{left:.6g}, {right:.6g}] {e.details}")
                continue
            if residual < tolerance:
                roots.append((root, (left, right), tolerance))
            else:
                logger.debug(f"{branch}-mode n={n}: discarded jump at {root:.6g} (residual {residual:.2e})")

        if not roots:
            raise NoSignChange(details={
                'branch': branch, 'n': n, 'upper': upper, 'f_upper': float(values[-1]),
            })

        root, bracket, tolerance = roots[0]
        value = capital(root)
        lams = [r if branch == Branch.G.value else 1.0 / r for r, _, _ in roots]
        return FixedPointResult(
            branch=branch, n=n, lam=root if branch == Branch.G.value else 1.0 / root,
            capital_lambda=value, parameter=root, bracket=bracket,
            f_residual=abs(root * value - 1.0), roots_found=len(roots), roots=tuple(lams), tolerance=tolerance,
        )

    def _solve(self, branch: str, profile: EquilibriumProfile, spec: ModeSpec, n_range: Iterable[int],
               upper: float, ground: GroundCondition) -> List[FixedPointResult]:
        n_range = list(n_range)
        n_max = max(n_range)
        results = []
        for n in n_range:
            try:
                results.append(self.fixed_point(branch, profile, spec, n, upper, n_max, ground))
            except NoSignChange as e:
                logger.warning(f"{branch}-mode n={n}: {e.message} {e.details}")
                results.append(FixedPointResult(
                    branch=branch, n=n, lam=float('nan'), capital_lambda=float('nan'), parameter=float('nan'),
                    bracket=(float('nan'), float('nan')), f_residual=float('nan'), roots_found=0,
                    status=e.code,
                ))
        found = [result for result in results if result.ok]
        self.log_operation(f'solve_{branch}modes', profile.fingerprint[:12], {
            'l': spec.l, 'upper': upper, 'found': len(found), 'requested': len(results),
        })
        return results

    def solve_gmodes(self, profile: EquilibriumProfile, spec: ModeSpec, n_range: Iterable[int],
                     lambda0: Optional[float] = None,
                     ground: GroundCondition = GroundCondition.ROBIN) -> List[FixedPointResult]:
        """
        g-mode eigenvalues lambda_{-n} in (0, lambda0] for every n in n_range.

        Modes without a root are returned with status 'no_sign_change' and logged.

        Raises:
            ParameterOutOfRange: If lambda0 >= l g
            StabilityViolated: If N**2 is not positive everywhere
        """
        lambda0 = lambda0 or self.default_lambda0(profile, spec)
        if not 0.0 < lambda0 < spec.l * profile.g:
            raise ParameterOutOfRange(details={'lambda0': lambda0, 'l_g': spec.l * profile.g})
        self.check_stability(profile)
        return self._solve(Branch.G.value, profile, spec, n_range, lambda0, ground)

    def solve_pmodes(self, profile: EquilibriumProfile, spec: ModeSpec, n_range: Iterable[int],
                     mu0: Optional[float] = None,
                     ground: GroundCondition = GroundCondition.ROBIN) -> List[FixedPointResult]:
        """
        p-mode eigenvalues lambda_n = 1/mu_n with mu_n in (0, mu0].

        Raises:
            ParameterOutOfRange: If mu0 >= 1/(l g)
        """
        mu0 = mu0 or self.default_mu0(profile, spec)
        if not 0.0 < mu0 < 1.0 / (spec.l * profile.g):
            raise ParameterOutOfRange(details={'mu0': mu0, 'mu_max': 1.0 / (spec.l * profile.g)})
        bound = self.lipschitz_bound(profile, spec)
        if 1.0 / mu0 - bound * mu0 <= 0.0:
            logger.warning(f"mu0={mu0:.6g} does not satisfy 1/mu0 - M mu0 > 0 (M={bound:.6g})")
        return self._solve(Branch.P.value, profile, spec, n_range, mu0, ground)

    def parameter_sweep(self, profile: EquilibriumProfile, spec: ModeSpec, branch: str, grid: Iterable[float],
                        n_max: int = 3, ground: GroundCondition = GroundCondition.ROBIN) -> ParameterSweep:
        """
        Lambda_n sampled on a parameter grid.

        Args:
            profile: Equilibrium profile
            spec: Horizontal wavenumber
            branch: 'g' (grid of lambda) or 'p' (grid of mu)
            grid: Parameter values, sorted on return
            n_max: Number of eigenvalues per point
            ground: Ground condition

        Returns:
            ParameterSweep with the largest observed |Delta Lambda_n / Delta parameter|
        """
        grid = np.sort(np.asarray(list(grid), dtype=float))
        spectrum = self.g_weighted_spectrum if branch == Branch.G.value else self.p_weighted_spectrum
        samples = [spectrum(profile, spec, float(p), n_max, ground) for p in grid]
        spectra = np.array([sample.values for sample in samples])

        lipschitz = 0.0
        if grid.size > 1:
            slopes = np.abs(np.diff(spectra, axis=0)) / np.diff(grid)[:, None]
            lipschitz = float(np.max(slopes))
        sweep = ParameterSweep(
            branch=branch, parameter_grid=grid, spectra=spectra, lipschitz_estimate=lipschitz,
            nonpositive=np.array([sample.nonpositive for sample in samples], dtype=int),
        )
        if not sweep.ordered:
            logger.warning(f"{branch}-branch sweep lost the eigenvalue ordering")
        self.log_operation('parameter_sweep', profile.fingerprint[:12], {
            'branch': branch, 'points': int(grid.size), 'lipschitz': lipschitz,
        })
        return sweep

    def export(self, results: List[FixedPointResult], stem: str) -> Dict[str, str]:
        self.repository.write_results(f'{stem}.csv', results)
        return dict(self.repository.written)

    def export_sweep(self, sweep: ParameterSweep, stem: str) -> Dict[str, str]:
        self.sweeps.write_sweep(f'{stem}_sweep.csv', sweep)
        return dict(self.sweeps.written)

