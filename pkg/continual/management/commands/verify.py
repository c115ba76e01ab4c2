from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from continual.exceptions import E2NetError
from continual.verification import SUITES, run_suites


class Command(BaseCommand):
    help = 'Run the oracle verification suites and print their measured statistics'

    def add_arguments(self, parser):
        parser.add_argument(
            '--suite',
            default='all',
            choices=[*SUITES, 'all'],
            help='Suite to run (default: all)'
        )
        parser.add_argument(
            '--seed',
            type=int,
            default=settings.E2NET_SETTINGS['VERIFY_SEED'],
            help='Seed for the randomised checks'
        )
        parser.add_argument(
            '--trials',
            type=int,
            default=settings.E2NET_SETTINGS['MONTE_CARLO_TRIALS'],
            help='Monte-Carlo trials for the replay-buffer suite'
        )

    def handle(self, *args, **options):
        try:
            results = run_suites(options['suite'], seed=options['seed'], trials=options['trials'])
        except E2NetError as exc:
            raise CommandError(str(exc))

        for result in results:
            for line in result.lines():
                self.stdout.write(line)

        failed = [result.name for result in results if not result.passed]
        if failed:
            raise CommandError(f'Failed suites: {", ".join(failed)}')
        self.stdout.write(self.style.SUCCESS(f'All {len(results)} suites passed'))
