from django.core.management.base import BaseCommand, CommandError

from common.exceptions import ConfigInvalid, SpectralLabError, command_error_handler
from runs.services import RunService


class Command(BaseCommand):
    help = 'Validate a run configuration without running it'

    def add_arguments(self, parser):
        parser.add_argument('config', help='Run configuration (JSON)')

    def handle(self, *args, **options):
        service = RunService()
        try:
            diagnostics = service.validate(service.load(options['config']))
        except SpectralLabError as e:
            raise command_error_handler(e, 'validate')

        if not diagnostics:
            self.stdout.write(self.style.SUCCESS('Configuration is valid'))
            return
        for line in diagnostics:
            self.stdout.write(self.style.WARNING(line))
        raise CommandError(f'{len(diagnostics)} configuration problem(s)', returncode=ConfigInvalid.exit_status)
