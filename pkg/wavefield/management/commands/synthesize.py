from django.core.management.base import BaseCommand
import numpy as np

from common.exceptions import SpectralLabError, command_error_handler
from dispersion.services import DispersionService
from equilibrium.services import EquilibriumService
from modes_fixedpoint.problems import ModeSpec
from wavefield.fields import FieldKind, ModeTerm
from wavefield.repositories import ModeTableRepository, SurfaceRepository
from wavefield.services import WavefieldService


class Command(BaseCommand):
    help = 'Superpose dispersion modes into a displacement field and track the vacuum boundary'

    def add_arguments(self, parser):
        parser.add_argument('--modes', required=True, help='CSV with columns direction, l, lambda, amplitude')
        parser.add_argument('--profile', default=None, help='Profile descriptor JSON (defaults to the isentropic profile)')
        parser.add_argument('--kind', choices=[kind.value for kind in FieldKind], default=FieldKind.STANDING.value)
        parser.add_argument('--epsilon', type=float, default=None, help='Overall amplitude (defaults to DEFAULT_EPSILON)')
        parser.add_argument('--x-plus', type=float, default=1.0, help='Horizontal period along x')
        parser.add_argument('--y-plus', type=float, default=1.0, help='Horizontal period along y')
        parser.add_argument('--t0', type=float, default=0.0)
        parser.add_argument('--t1', type=float, default=None, help='Final time (defaults to the longest mode period)')
        parser.add_argument('--nt', type=int, default=17, help='Number of times')
        parser.add_argument('--nx', type=int, default=32, help='Number of boundary positions per period')
        parser.add_argument('--nz', type=int, default=33, help='Number of heights in the snapshots')
        parser.add_argument('--points', type=int, default=None, help='Heights of each reconstructed mode')
        parser.add_argument('--output-dir', default=None, help='Output directory (defaults to SPECTRA_OUTPUT_DIR)')
        parser.add_argument('--stem', default='wavefield', help='File stem of the exported tables')

    def handle(self, *args, **options):
        try:
            profile = EquilibriumService().load_profile(options['profile'])
            modes = DispersionService()
            service = WavefieldService(SurfaceRepository(options['output_dir']))
            x_plus, y_plus = options['x_plus'], options['y_plus']

            terms = []
            for row in ModeTableRepository().read_table(options['modes']):
                direction = str(row['direction']).strip()
                spec = ModeSpec(l=float(row['l']), x_plus=x_plus, y_plus=y_plus, direction=direction)
                mode = modes.reconstruct_eigenfunction(profile, spec, float(row['lambda']), points=options['points'])
                terms.append(ModeTerm.from_mode(mode, float(row['amplitude']), direction))

            field = service.build_field(terms, FieldKind(options['kind']), options['epsilon'], x_plus, y_plus)
            t1 = options['t1'] if options['t1'] is not None else max(term.period for term in terms)
            times = np.linspace(options['t0'], t1, options['nt'])
            xbar = np.linspace(0.0, x_plus, options['nx'], endpoint=False)
            surface = service.boundary_motion(field, times, xbar)
            residual = service.wave_residual(field, profile, times[:3])

            zs = np.linspace(0.0, profile.z_plus, options['nz'])
            written = service.export_surface(surface, options['stem'])
            written.update(service.export_snapshots(service.snapshots_of(field, times, xbar, zs), options['stem']))
        except SpectralLabError as e:
            raise command_error_handler(e, 'synthesize')

        self.stdout.write(f'terms={len(terms)} kind={field.kind.value} epsilon={field.epsilon:.3g} '
                          f'max_elevation={np.max(np.abs(surface.elevation)):.6g} residual={residual:.2e}')
        for path in written:
            self.stdout.write(self.style.SUCCESS(f'Wrote {path}'))
