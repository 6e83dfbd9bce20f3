from django.core.management.base import BaseCommand

from common.exceptions import SpectralLabError, command_error_handler
from equilibrium.services import EquilibriumService
from modes_l0.services import VerticalModeService
from slcore.repositories import EigenpairRepository


class Command(BaseCommand):
    help = 'Compute the vertical (l = 0) spectrum of a profile and export the eigenpairs'

    def add_arguments(self, parser):
        parser.add_argument('--profile', default=None, help='Profile descriptor JSON (defaults to the isentropic profile)')
        parser.add_argument('--n', type=int, default=3, help='Number of modes')
        parser.add_argument('--closed-form', action='store_true', help='Also export the isentropic Bessel eigenvalues')
        parser.add_argument('--fd-only', action='store_true', help='Skip the shooting cross-check')
        parser.add_argument('--output-dir', default=None, help='Output directory (defaults to SPECTRA_OUTPUT_DIR)')
        parser.add_argument('--stem', default='spectrum_l0', help='File stem of the exported tables')

    def handle(self, *args, **options):
        try:
            profile = EquilibriumService().load_profile(options['profile'])
            service = VerticalModeService(EigenpairRepository(options['output_dir']))
            spectrum = service.vertical_spectrum(profile, options['n'], shooting=not options['fd_only'])
            closed_form = service.bessel_vertical_eigenvalues(profile, options['n']) if options['closed_form'] else None
            written = service.export(spectrum, options['stem'], closed_form)
        except SpectralLabError as e:
            raise command_error_handler(e, 'spectrum_l0')

        for pair in spectrum.pairs:
            self.stdout.write(f'n={pair.index} lambda={pair.value:.10g} zeros={pair.zeros}')
        if spectrum.disagreement is not None:
            self.stdout.write(f'max relative disagreement fd/shooting: {spectrum.disagreement:.3e}')
        for path in written:
            self.stdout.write(self.style.SUCCESS(f'Wrote {path}'))
