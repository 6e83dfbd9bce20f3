from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple
import logging

import numpy as np

from common.exceptions import ConfigInvalid, ParameterOutOfRange, SpectralLabError
from common.serializers import flatten_errors
from common.services import SpectralService, overriding
from common.utils import config_hash
from dispersion.repositories import DispersionRepository
from dispersion.services import DispersionService
from equilibrium.repositories import ProfileRepository
from equilibrium.services import EquilibriumService
from modes_fixedpoint.problems import ModeSpec
from modes_fixedpoint.repositories import FixedPointRepository
from modes_fixedpoint.services import FixedPointService
from modes_l0.services import VerticalModeService
from slcore.repositories import EigenpairRepository
from wavefield.fields import FieldKind, ModeTerm
from wavefield.repositories import SurfaceRepository
from wavefield.services import WavefieldService
from .manifest import RunManifest, StageReport
from .repositories import RunRepository
from .serializers import STAGE_ORDER, RunConfigSerializer

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.json'


def relative_gap(value: float, others: Sequence[float]) -> float:
    """Smallest |value - other| / max(|value|, |other|), 1 when there is nothing to compare with."""
    if len(others) == 0:
        return 1.0
    others = np.asarray(others, dtype=float)
    scale = np.maximum(np.maximum(abs(value), np.abs(others)), 1e-300)
    return float(np.min(np.abs(others - value) / scale))


def cross_disagreement(first: Sequence[float], second: Sequence[float]) -> float:
    """Largest relative gap of either list to the other."""
    gaps = [relative_gap(value, second) for value in first] + [relative_gap(value, first) for value in second]
    return max(gaps, default=0.0)


class RunContext:
    """
    Values handed from one stage to the next within a run.
    """

    def __init__(self, attrs: Dict[str, Any], descriptor: Dict[str, Any], output_dir: Path):
        self.attrs = attrs
        self.descriptor = descriptor
        self.output_dir = output_dir
        self.stages: Dict[str, Dict[str, Any]] = attrs['stages']
        self.results: Dict[str, Any] = {}
        self.cross_validation: Dict[str, float] = {}

    @property
    def profile(self):
        return self.results['equilibrium']

    def spec(self, l: float, **kwargs) -> ModeSpec:
        return ModeSpec(l=l, x_plus=self.attrs['x_plus'], y_plus=self.attrs['y_plus'], **kwargs)

    def dependencies(self, name: str) -> List[str]:
        stage = self.stages[name]
        if name == 'equilibrium':
            return []
        if name == 'dispersion' and 'lambda_min' not in stage:
            return ['equilibrium'] + [branch for branch in ('g', 'p') if branch in self.stages]
        if name == 'synth' and not stage.get('modes'):
            return ['equilibrium', 'dispersion']
        return ['equilibrium']


class RunService(SpectralService):
    """
    Service class for batch runs: validates a configuration, executes the
    requested stages in dependency order and writes the run manifest.
    """

    def __init__(self, repository: Optional[RunRepository] = None):
        super().__init__(repository or RunRepository())

    # configuration

    def load(self, path: str) -> Dict[str, Any]:
        return self.repository.read_config(path)

    def validate(self, config: Dict[str, Any]) -> List[str]:
        """Field-level diagnostics of a configuration, empty when it is valid."""
        serializer = RunConfigSerializer(data=config)
        if serializer.is_valid():
            return []
        return flatten_errors(serializer.errors)

    # execution

    def run(self, config: Dict[str, Any]) -> RunManifest:
        """
        Execute the stages of a configuration and write the manifest.

        Stage errors are recorded in the manifest and skip the stages depending
        on them; the manifest exit status is nonzero iff a stage failed.

        Raises:
            ConfigInvalid: If the configuration does not validate
        """
        serializer = RunConfigSerializer(data=config)
        if not serializer.is_valid():
            raise ConfigInvalid(details={'errors': '; '.join(flatten_errors(serializer.errors))})
        attrs = serializer.validated_data
        output_dir = Path(attrs.get('output_dir') or self.repository.output_dir)
        context = RunContext(attrs, serializer.to_descriptor(), output_dir)
        manifest = RunManifest(config_hash=config_hash(config), output_dir=str(output_dir))

        with overriding(attrs.get('tolerances')):
            for name in STAGE_ORDER:
                if name not in context.stages:
                    continue
                failed = [dep for dep in context.dependencies(name)
                          if dep not in manifest.stages or manifest.stages[dep].status != 'ok']
                if failed:
                    manifest.stages[name] = StageReport(
                        name, status='skipped', code='dependency_failed', message=f"Needs {', '.join(failed)}",
                    )
                    continue
                manifest.stages[name] = self.run_stage(name, context, manifest)

        manifest.cross_validation = dict(context.cross_validation)
        RunRepository(output_dir).write_manifest(MANIFEST_NAME, manifest)
        self.log_operation('run', manifest.config_hash[:12], {
            'stages': len(manifest.stages), 'exit_status': manifest.exit_status,
            'cross_validation': manifest.max_disagreement,
        })
        return manifest

    def run_stage(self, name: str, context: RunContext, manifest: RunManifest) -> StageReport:
        stage: Callable[[RunContext, Dict[str, Any]], Tuple[Dict[str, Any], Dict[str, str]]] = getattr(self, f'stage_{name}')
        try:
            metrics, written = stage(context, context.stages[name])
        except SpectralLabError as e:
            self.log_error(f'stage_{name}', e, manifest.config_hash[:12])
            return StageReport(name, status='error', code=e.code, message=e.message, exit_status=e.exit_status)
        manifest.files.update(written)
        return StageReport(name, metrics=metrics, files=list(written))

    # stages

    def stage_equilibrium(self, context: RunContext, stage: Dict[str, Any]):
        service = EquilibriumService(ProfileRepository(context.output_dir))
        profile = service.profile_from_descriptor(context.descriptor)
        report = service.check_admissible(profile)
        written = service.export(profile, 'profile', stage.get('points'))
        context.results['equilibrium'] = profile
        metrics = {check.name: check.value for check in report.checks}
        metrics['admissible'] = report.passed
        return metrics, written

    def stage_l0(self, context: RunContext, stage: Dict[str, Any]):
        profile = context.profile
        service = VerticalModeService(EigenpairRepository(context.output_dir))
        spectrum = service.vertical_spectrum(profile, stage['n_max'], shooting=stage['shooting'])
        metrics: Dict[str, Any] = {'eigenvalues': [float(value) for value in spectrum.values]}
        closed_form = None
        if profile.law.kind == 'isentropic':
            closed_form = service.bessel_vertical_eigenvalues(profile, stage['n_max'])
            metrics['closed_form_disagreement'] = service.closed_form_disagreement(spectrum, profile)
        if spectrum.disagreement is not None:
            metrics['shooting_disagreement'] = spectrum.disagreement
            context.cross_validation['l0'] = spectrum.disagreement
        return metrics, service.export(spectrum, 'spectrum_l0', closed_form)

    def stage_branch(self, branch: str, context: RunContext, stage: Dict[str, Any]):
        profile = context.profile
        spec = context.spec(stage['l'], branch=branch)
        service = FixedPointService(FixedPointRepository(context.output_dir))
        solve = service.solve_gmodes if branch == 'g' else service.solve_pmodes
        results = solve(profile, spec, range(stage['n_min'], stage['n_max'] + 1), stage.get('upper'))
        found = [result for result in results if result.ok]
        context.results[branch] = (spec, found)
        metrics = {
            'requested': len(results), 'found': len(found),
            'eigenvalues': [result.lam for result in found],
            'max_f_residual': max((result.f_residual for result in found), default=0.0),
        }
        return metrics, service.export(results, f'{branch}modes')

    def stage_g(self, context: RunContext, stage: Dict[str, Any]):
        return self.stage_branch('g', context, stage)

    def stage_p(self, context: RunContext, stage: Dict[str, Any]):
        return self.stage_branch('p', context, stage)

    def scan_ranges(self, context: RunContext, stage: Dict[str, Any]) -> List[Tuple[str, Tuple[float, float]]]:
        """
        Explicit range, or 3% margins around the fixed-point eigenvalues of each branch.

        Raises:
            ParameterOutOfRange: If there is nothing to derive a range from
        """
        if 'lambda_min' in stage:
            return [('dispersion', (stage['lambda_min'], stage['lambda_max']))]
        ranges = []
        for branch in ('g', 'p'):
            spec, found = context.results.get(branch, (None, []))
            if not found or spec.l != stage['l']:
                continue
            values = [result.lam for result in found]
            upper = 1.03 * max(values)
            if branch == 'g':
                upper = min(upper, 0.999 * spec.l * context.profile.g)
            ranges.append((branch, (0.97 * min(values), upper)))
        if not ranges:
            raise ParameterOutOfRange("No lambda range: give lambda_min and lambda_max or run a g or p stage "
                                      "with the same l")
        return ranges

    def stage_dispersion(self, context: RunContext, stage: Dict[str, Any]):
        profile = context.profile
        spec = context.spec(stage['l'])
        service = DispersionService(DispersionRepository(context.output_dir))
        metrics: Dict[str, Any] = {}
        written: Dict[str, str] = {}
        roots: List[float] = []
        for label, bounds in self.scan_ranges(context, stage):
            scan = service.scan_and_refine(profile, spec, bounds, stage['grid'], stage.get('z_m'))
            values = [float(value) for value in scan.values]
            roots.extend(values)
            metrics[f'{label}_roots'] = values
            metrics[f'{label}_skipped'] = len(scan.skipped)
            written.update(service.export_scan(scan, f'dispersion_{label}' if label != 'dispersion' else label))
            if label in ('g', 'p'):
                fixed = [result.lam for result in context.results[label][1]]
                context.cross_validation[label] = cross_disagreement(fixed, values)
                metrics[f'{label}_disagreement'] = context.cross_validation[label]
        context.results['dispersion'] = (spec, sorted(roots))
        return metrics, written

    def stage_synth(self, context: RunContext, stage: Dict[str, Any]):
        profile = context.profile
        x_plus = context.attrs['x_plus']
        rows = stage.get('modes')
        if not rows:
            spec, roots = context.results['dispersion']
            if not roots:
                raise ParameterOutOfRange("The dispersion stage found no root to synthesize")
            rows = [{'direction': 'x', 'l': spec.l, 'lambda': roots[0], 'amplitude': 1.0}]

        modes = DispersionService()
        terms = []
        for row in rows:
            spec = context.spec(row['l'], direction=row['direction'])
            mode = modes.reconstruct_eigenfunction(profile, spec, row['lambda'], points=stage.get('points'))
            terms.append(ModeTerm.from_mode(mode, row['amplitude'], row['direction']))

        service = WavefieldService(SurfaceRepository(context.output_dir))
        field = service.build_field(terms, FieldKind(stage['kind']), stage.get('epsilon'), x_plus,
                                    context.attrs['y_plus'])
        times = np.linspace(0.0, max(term.period for term in terms), stage['nt'])
        xbar = np.linspace(0.0, x_plus, stage['nx'], endpoint=False)
        surface = service.boundary_motion(field, times, xbar)
        residual = service.wave_residual(field, profile, times[1:4])
        zs = np.linspace(0.0, profile.z_plus, stage['nz'])

        written = service.export_surface(surface, 'wavefield')
        written.update(service.export_snapshots(service.snapshots_of(field, times, xbar, zs), 'wavefield'))
        metrics = {
            'terms': len(terms), 'epsilon': field.epsilon, 'wave_residual': residual,
            'max_elevation': float(np.max(np.abs(surface.elevation))),
            'max_mean_elevation': float(np.max(np.abs(surface.mean_elevation()))),
        }
        return metrics, written
