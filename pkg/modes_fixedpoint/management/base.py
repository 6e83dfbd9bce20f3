import math

from django.core.management.base import BaseCommand

from common.exceptions import SpectralLabError, command_error_handler
from equilibrium.services import EquilibriumService
from modes_fixedpoint.problems import GroundCondition, ModeSpec
from modes_fixedpoint.repositories import FixedPointRepository
from modes_fixedpoint.services import FixedPointService


class FixedPointCommand(BaseCommand):
    """
    Shared arguments and output of the gmodes and pmodes commands.
    """
    branch = 'g'
    bound_option = 'lambda0'

    def add_arguments(self, parser):
        parser.add_argument('--profile', default=None, help='Profile descriptor JSON (defaults to the isentropic profile)')
        parser.add_argument('--l', type=float, default=None, help='Horizontal wavenumber (defaults to 2*pi/x_plus)')
        parser.add_argument('--x-plus', type=float, default=1.0, help='Horizontal period')
        parser.add_argument('--n-min', type=int, default=1)
        parser.add_argument('--n-max', type=int, default=8)
        parser.add_argument(f'--{self.bound_option.replace("_", "-")}', type=float, default=None,
                            help='Upper end of the parameter scan')
        parser.add_argument('--ground', choices=[c.value for c in GroundCondition], default='robin')
        parser.add_argument('--output-dir', default=None, help='Output directory (defaults to SPECTRA_OUTPUT_DIR)')
        parser.add_argument('--stem', default=f'{self.branch}modes', help='File stem of the exported table')

    def solve(self, service, profile, spec, n_range, bound, ground):
        raise NotImplementedError

    def handle(self, *args, **options):
        try:
            profile = EquilibriumService().load_profile(options['profile'])
            x_plus = options['x_plus']
            spec = ModeSpec(l=options['l'] or 2.0 * math.pi / x_plus, x_plus=x_plus, branch=self.branch)
            service = FixedPointService(FixedPointRepository(options['output_dir']))
            n_range = range(options['n_min'], options['n_max'] + 1)
            results = self.solve(service, profile, spec, n_range, options[self.bound_option],
                                 GroundCondition(options['ground']))
            written = service.export(results, options['stem'])
        except SpectralLabError as e:
            raise command_error_handler(e, f'{self.branch}modes')

        for result in results:
            if result.ok:
                self.stdout.write(f'n={result.n} lambda={result.lam:.12g} Lambda={result.capital_lambda:.10g} '
                                  f'residual={result.f_residual:.2e} roots={result.roots_found}')
            else:
                self.stdout.write(self.style.WARNING(f'n={result.n}: {result.status}'))
        for path in written:
            self.stdout.write(self.style.SUCCESS(f'Wrote {path}'))
