from django.core.management.base import BaseCommand, CommandError

from continual.exceptions import E2NetError
from continual.harness import SCHEDULE_COLUMNS
from continual.schedule import build_schedule
from continual.utils import csv_text


class Command(BaseCommand):
    help = 'Print the search-space expansion schedule as CSV'

    def add_arguments(self, parser):
        parser.add_argument('--tasks', type=int, required=True, help='Number of tasks N')
        parser.add_argument('--groups', type=int, required=True, help='Groups per layer G')

    def handle(self, *args, **options):
        try:
            state = build_schedule(options['tasks'], options['groups'])
        except E2NetError as exc:
            raise CommandError(str(exc))
        self.stdout.write(csv_text(SCHEDULE_COLUMNS, state.table()), ending='')
