import math

from django.core.management.base import BaseCommand

from common.exceptions import SpectralLabError, command_error_handler
from dispersion.repositories import DispersionRepository
from dispersion.services import DispersionService
from equilibrium.services import EquilibriumService
from modes_fixedpoint.problems import ModeSpec


class Command(BaseCommand):
    help = 'Sample the dispersion function D(z_m, lambda) and refine its roots'

    def add_arguments(self, parser):
        parser.add_argument('--profile', default=None, help='Profile descriptor JSON (defaults to the isentropic profile)')
        parser.add_argument('--l', type=float, default=None, help='Horizontal wavenumber (defaults to 2*pi/x_plus)')
        parser.add_argument('--x-plus', type=float, default=1.0, help='Horizontal period')
        parser.add_argument('--lambda-min', type=float, default=None, help='Lower scan end (defaults to 0.01*l*g)')
        parser.add_argument('--lambda-max', type=float, default=None, help='Upper scan end (defaults to 0.9*l*g)')
        parser.add_argument('--grid', type=int, default=None, help='Number of log-spaced scan points, at least 16')
        parser.add_argument('--z-m', type=float, default=None, help='Matching height (defaults to z_plus/2)')
        parser.add_argument('--output-dir', default=None, help='Output directory (defaults to SPECTRA_OUTPUT_DIR)')
        parser.add_argument('--stem', default='dispersion', help='File stem of the exported table')

    def handle(self, *args, **options):
        try:
            profile = EquilibriumService().load_profile(options['profile'])
            x_plus = options['x_plus']
            spec = ModeSpec(l=options['l'] or 2.0 * math.pi / x_plus, x_plus=x_plus)
            l_g = spec.l * profile.g
            lambda_range = (options['lambda_min'] or 0.01 * l_g, options['lambda_max'] or 0.9 * l_g)
            service = DispersionService(DispersionRepository(options['output_dir']))
            scan = service.scan_and_refine(profile, spec, lambda_range, options['grid'], options['z_m'])
            written = service.export_scan(scan, options['stem'])
        except SpectralLabError as e:
            raise command_error_handler(e, 'dispersion')

        for root in scan.roots:
            flag = 'simple' if root.simple else 'not simple'
            self.stdout.write(f'root lambda={root.lam:.15g} dD/dlambda={root.derivative:.6e} ({flag})')
        for point in scan.skipped:
            self.stdout.write(self.style.WARNING(f'skipped lambda={point.lam:.12g}: {point.note}'))
        if not scan.roots:
            self.stdout.write(self.style.WARNING('No roots in the scanned range'))
        for path in written:
            self.stdout.write(self.style.SUCCESS(f'Wrote {path}'))
