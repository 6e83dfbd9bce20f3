from django.core.management.base import BaseCommand, CommandError

from common.exceptions import SpectralLabError, command_error_handler
from runs.services import MANIFEST_NAME, RunService


class Command(BaseCommand):
    help = 'Run the stages of a JSON configuration and write the run manifest'

    def add_arguments(self, parser):
        parser.add_argument('config', help='Run configuration (JSON)')

    def handle(self, *args, **options):
        service = RunService()
        try:
            manifest = service.run(service.load(options['config']))
        except SpectralLabError as e:
            raise command_error_handler(e, 'run')

        for name, report in manifest.stages.items():
            if report.status == 'ok':
                self.stdout.write(self.style.SUCCESS(f'{name}: ok ({len(report.files)} files)'))
            else:
                self.stdout.write(self.style.WARNING(f'{name}: {report.status} [{report.code}] {report.message}'))
        self.stdout.write(f'config_hash={manifest.config_hash} cross_validation={manifest.max_disagreement:.3e}')
        self.stdout.write(self.style.SUCCESS(f'Wrote {manifest.output_dir}/{MANIFEST_NAME}'))

        if manifest.exit_status:
            failed = [name for name, report in manifest.stages.items() if report.status == 'error']
            raise CommandError(f"Stages failed: {', '.join(failed)}", returncode=manifest.exit_status)
