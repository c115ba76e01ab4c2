import os

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError
from rest_framework import serializers

from continual.exceptions import E2NetError
from continual.harness import run
from continual.models import ExperimentRun
from continual.serializers import build_experiment_config, load_experiment_file
from continual.utils import format_mean_std
from continual.verification import run_suites


class Command(BaseCommand):
    help = 'Train a continual-learning method over one or more seeds and write the report files'

    def add_arguments(self, parser):
        parser.add_argument('--config', help='INI experiment file (defaults reproduce the reference experiment)')
        parser.add_argument('--method', help='e2net, derpp, er, sgd or joint')
        parser.add_argument('--buffer', help='Replay buffer capacity')
        parser.add_argument('--rf', help='Rehearsal frequency as 1/m, e.g. 1/4')
        parser.add_argument('--seeds', help='Comma-separated seed list, e.g. 0,1,2')
        parser.add_argument('--out', help='Output directory for report files')
        parser.add_argument('--workers', help='Seed-parallel worker processes')
        parser.add_argument('--checkpoint', action='store_true', help='Checkpoint every seed after each epoch')
        parser.add_argument('--resume', action='store_true', help='Continue each seed from its checkpoint')
        parser.add_argument('--no-timing', action='store_true', help='Write zero wall times so reports are byte-reproducible')
        parser.add_argument('--no-db', action='store_true', help='Do not record the run in the database')

    def handle(self, *args, **options):
        try:
            values = load_experiment_file(options['config']) if options['config'] else {}
        except E2NetError as exc:
            raise CommandError(str(exc))

        for key, option in (('method', 'method'), ('capacity', 'buffer'), ('rf', 'rf'),
                            ('seeds', 'seeds'), ('out', 'out'), ('workers', 'workers')):
            if options[option] is not None:
                values[key] = options[option]
        if options['checkpoint']:
            values['checkpoint'] = True
        if options['resume']:
            values['resume'] = True
            values['checkpoint'] = True
        if options['no_timing']:
            values['timing'] = False
        if not values.get('out'):
            values['out'] = os.path.join(settings.E2NET_SETTINGS['OUTPUT_DIR'], values.get('method', 'e2net'))

        try:
            config = build_experiment_config(values)
        except serializers.ValidationError as exc:
            errors = '; '.join(
                f'{field}: {" ".join(str(m) for m in messages) if isinstance(messages, list) else messages}'
                for field, messages in exc.detail.items()
            )
            raise CommandError(f'Invalid experiment configuration: {errors}')

        if config.verify:
            names = ['all'] if 'all' in config.verify else config.verify
            results = []
            for name in names:
                results.extend(run_suites(name, seed=settings.E2NET_SETTINGS['VERIFY_SEED'],
                                          trials=settings.E2NET_SETTINGS['MONTE_CARLO_TRIALS']))
            failed = [result.name for result in results if not result.passed]
            if failed:
                raise CommandError(f'Verification failed before training: {", ".join(failed)}')

        try:
            report = run(config)
        except E2NetError as exc:
            raise CommandError(str(exc))

        if not options['no_db']:
            ExperimentRun.record(report, config)

        train = config.train
        self.stdout.write(self.style.SUCCESS(f'{train.method}: {len(report.succeeded)}/{len(report.results)} seeds finished'))
        self.stdout.write('=' * 50)
        self.stdout.write(f'Class-IL ACC: {format_mean_std(*report.acc)}')
        self.stdout.write(f'Task-IL ACC: {format_mean_std(*report.acc_task_il)}')
        self.stdout.write(f'Forgetting: {format_mean_std(*report.forgetting)}')
        self.stdout.write(f'Wall time: {report.wall_ms / 1000.0:.1f}s')
        self.stdout.write(f'Reports: {config.output_dir}')

        if report.failures:
            seeds = ', '.join(str(result.seed) for result in report.failures)
            raise CommandError(f'Seeds {seeds} failed; see logs/e2net.log')
