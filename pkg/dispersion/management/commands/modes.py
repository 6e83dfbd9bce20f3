import math

from django.core.management.base import BaseCommand

from common.exceptions import SpectralLabError, command_error_handler
from dispersion.repositories import DispersionRepository
from dispersion.services import DispersionService
from equilibrium.services import EquilibriumService
from modes_fixedpoint.problems import ModeSpec


class Command(BaseCommand):
    help = 'Reconstruct the mode function (u, w, eta) of a dispersion root'

    def add_arguments(self, parser):
        parser.add_argument('--lambda', dest='lam', type=float, required=True, help='Eigenvalue (a dispersion root)')
        parser.add_argument('--profile', default=None, help='Profile descriptor JSON (defaults to the isentropic profile)')
        parser.add_argument('--l', type=float, default=None, help='Horizontal wavenumber (defaults to 2*pi/x_plus)')
        parser.add_argument('--x-plus', type=float, default=1.0, help='Horizontal period')
        parser.add_argument('--refine', type=float, default=0.0,
                            help='Relative half-width of a bracket around --lambda to refine first (0 to skip)')
        parser.add_argument('--z-m', type=float, default=None, help='Matching height (defaults to z_plus/2)')
        parser.add_argument('--points', type=int, default=None, help='Number of heights')
        parser.add_argument('--output-dir', default=None, help='Output directory (defaults to SPECTRA_OUTPUT_DIR)')
        parser.add_argument('--stem', default='mode', help='File stem of the exported table')

    def handle(self, *args, **options):
        try:
            profile = EquilibriumService().load_profile(options['profile'])
            x_plus = options['x_plus']
            spec = ModeSpec(l=options['l'] or 2.0 * math.pi / x_plus, x_plus=x_plus)
            service = DispersionService(DispersionRepository(options['output_dir']))
            lam, width = options['lam'], options['refine']
            if width > 0.0:
                lam = service.refine_root(profile, spec, (lam * (1.0 - width), lam * (1.0 + width)), options['z_m'])
            mode = service.reconstruct_eigenfunction(profile, spec, lam, options['z_m'], options['points'])
            residual = service.mode_residual(profile, mode)
            written = service.export_mode(mode, options['stem'])
        except SpectralLabError as e:
            raise command_error_handler(e, 'modes')

        self.stdout.write(f'lambda={mode.lam:.15g} zeros={mode.zeros} u_trace={mode.u_trace:.10g} '
                          f'mismatch={mode.mismatch:.2e} residual={residual:.2e}')
        for path in written:
            self.stdout.write(self.style.SUCCESS(f'Wrote {path}'))
