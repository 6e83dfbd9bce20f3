from django.core.management.base import BaseCommand

from common.exceptions import ConfigInvalid, SpectralLabError, command_error_handler
from common.serializers import flatten_errors
from equilibrium.repositories import ProfileRepository
from equilibrium.serializers import ProfileDescriptorSerializer
from equilibrium.services import EquilibriumService


class Command(BaseCommand):
    help = 'Build a stratified equilibrium and export its profile table and descriptor'

    def add_arguments(self, parser):
        parser.add_argument('--gamma', type=float, default=1.4, help='Adiabatic exponent, 1 < gamma < 2')
        parser.add_argument('--c-v', type=float, default=1.0, help='Specific heat at constant volume')
        parser.add_argument('--g', type=float, default=1.0, help='Gravitational acceleration')
        parser.add_argument('--z-plus', type=float, default=1.0, help='Vacuum height')
        parser.add_argument('--law', choices=['isentropic', 'linear', 'table'], default='isentropic')
        parser.add_argument('--beta', type=float, default=None, help='Slope of the linear law Sigma = -beta*eta')
        parser.add_argument('--table-file', default=None, help='Two-column (eta, sigma) CSV for the table law')
        parser.add_argument('--points', type=int, default=None, help='Number of exported heights')
        parser.add_argument('--output-dir', default=None, help='Output directory (defaults to SPECTRA_OUTPUT_DIR)')
        parser.add_argument('--stem', default='profile', help='File stem of the exported table and descriptor')
        parser.add_argument('--check-table', default=None,
                            help='Only certify an existing (z, rho, p) CSV table against gravity --g')

    def handle(self, *args, **options):
        if options['check_table']:
            return self.check_table(options)
        law = {'kind': options['law']}
        if options['beta'] is not None:
            law['beta'] = options['beta']
        if options['table_file']:
            law['table_file'] = options['table_file']
        serializer = ProfileDescriptorSerializer(data={
            'gas': {'gamma': options['gamma'], 'c_v': options['c_v'], 'g': options['g']},
            'law': law,
            'z_plus': options['z_plus'],
        })

        try:
            if not serializer.is_valid():
                raise ConfigInvalid(details={'errors': '; '.join(flatten_errors(serializer.errors))})
            descriptor = serializer.to_descriptor()
            service = EquilibriumService(ProfileRepository(options['output_dir']))
            profile = service.profile_from_descriptor(descriptor)
            report = service.check_admissible(profile)
            written = service.export(profile, options["stem"], options["points"])
        except SpectralLabError as e:
            raise command_error_handler(e, 'equilibrium')

        self.write_report(report)
        for path in written:
            self.stdout.write(self.style.SUCCESS(f'Wrote {path}'))

    def check_table(self, options):
        try:
            service = EquilibriumService(ProfileRepository(options['output_dir']))
            frame = service.repository.read_table(options['check_table'])
            report = service.check_tabulated(frame['z'], frame['rho'], frame['p'], options['g'])
        except SpectralLabError as e:
            raise command_error_handler(e, 'equilibrium')
        self.write_report(report)

    def write_report(self, report):
        for check in report.checks:
            style = self.style.SUCCESS if check.passed else self.style.WARNING
            self.stdout.write(style(f'{check.name}: {"pass" if check.passed else "fail"} ({check.value:.6g})'))
