from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from continual.harness import comparison_table, load_report_rows
from continual.models import ExperimentRun
from continual.utils import format_mean_std


class Command(BaseCommand):
    help = 'Print a comparison table from report directories, or list recent runs'

    def add_arguments(self, parser):
        parser.add_argument('--dir', help='Directory searched recursively for report CSVs')
        parser.add_argument(
            '--limit',
            type=int,
            default=settings.E2NET_SETTINGS['RECENT_RUNS'],
            help='Number of recent runs to list when --dir is omitted'
        )

    def handle(self, *args, **options):
        if options['dir']:
            self.show_directory(Path(options['dir']))
        else:
            self.show_recent(options['limit'])

    def show_directory(self, directory):
        if not directory.is_dir():
            raise CommandError(f'{directory} is not a directory')
        rows = load_report_rows(directory)
        if not rows:
            raise CommandError(f'No {settings.E2NET_SETTINGS["REPORT_FILE"]} found under {directory}')

        table = comparison_table(rows)
        self.stdout.write(self.style.SUCCESS(f'Comparison ({len(table)} runs, final task, mean ± std over seeds)'))
        header = f'{"run":<24} {"method":<8} {"seeds":>5} {"Class-IL":>16} {"Task-IL":>16} {"Forgetting":>16} {"time(s)":>9}'
        self.stdout.write(header)
        self.stdout.write('=' * len(header))
        for row in table:
            self.stdout.write(
                f'{row["run"]:<24} {row["method"]:<8} {row["seeds"]:>5} {row["class_il"]:>16} '
                f'{row["task_il"]:>16} {row["forgetting"]:>16} {row["wall_s"]:>9}'
            )

    def show_recent(self, limit):
        runs = ExperimentRun.objects.prefetch_related('seed_results')[:limit]
        self.stdout.write(self.style.SUCCESS(f'Recent runs (last {limit})'))
        self.stdout.write('=' * 50)
        if not runs:
            self.stdout.write('No runs recorded yet')
            return
        for run in runs:
            self.stdout.write(
                f'#{run.id} {run.created_at:%Y-%m-%d %H:%M} {run.method}: '
                f'ACC {format_mean_std(run.acc_mean, run.acc_std)}, '
                f'F {format_mean_std(run.forgetting_mean, run.forgetting_std)} '
                f'[{run.status}] {run.output_dir}'
            )
            for result in run.seed_results.all():
                if result.failed:
                    self.stdout.write(self.style.WARNING(f'  seed {result.seed} failed: {result.error}'))
