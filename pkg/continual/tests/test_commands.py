import tempfile
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import TestCase

from continual.models import ExperimentRun, SeedResult

SMALL_EXPERIMENT = """\
[experiment]
seeds = 0,1
timing = false

[network]
hidden = 8

[schedule]
num_tasks = 2
groups = 4

[cns]
candidates = 4
selection_size = 16

[scer]
buffer = 8

[trainer]
epochs = 1
batch_size = 8

[data]
num_classes = 4
samples_per_class = 16
test_samples_per_class = 8
input_dim = 6
sigma = 0.3
"""


class CommandTestCase(TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)
        self.config = self.dir / 'small.ini'
        self.config.write_text(SMALL_EXPERIMENT)

    def call(self, *args):
        out = StringIO()
        call_command(*args, stdout=out)
        return out.getvalue()


class ScheduleCommandTests(CommandTestCase):
    def test_prints_csv(self):
        lines = self.call('schedule', '--tasks', '5', '--groups', '10').splitlines()
        self.assertEqual(lines[0], 't,s_raw,g_real,g_groups')
        self.assertEqual(len(lines), 6)
        self.assertTrue(lines[-1].endswith(',10'))

    def test_invalid_arguments(self):
        with self.assertRaises(CommandError):
            self.call('schedule', '--tasks', '0', '--groups', '10')


class VerifyCommandTests(CommandTestCase):
    def test_metrics_suite_passes(self):
        output = self.call('verify', '--suite', 'metrics')
        self.assertIn('[PASS] metrics', output)


class RunCommandTests(CommandTestCase):
    def test_run_writes_reports_and_history(self):
        out = self.dir / 'sgd'
        output = self.call('run', '--config', str(self.config), '--method', 'sgd', '--out', str(out))
        self.assertIn('2/2 seeds finished', output)
        self.assertTrue((out / 'report.csv').exists())

        run = ExperimentRun.objects.get()
        self.assertEqual(run.method, 'sgd')
        self.assertEqual(run.status, 'completed')
        self.assertEqual(SeedResult.objects.filter(run=run).count(), 2)

    def test_flags_override_the_file(self):
        out = self.dir / 'er'
        self.call('run', '--config', str(self.config), '--method', 'er', '--buffer', '4', '--rf', '1/2',
                  '--seeds', '3', '--out', str(out))
        run = ExperimentRun.objects.get()
        self.assertEqual(run.seeds, [3])
        self.assertEqual(run.config['train']['capacity'], 4)
        self.assertEqual(run.config['train']['rehearsal_every'], 2)

    def test_invalid_configuration_is_a_usage_error(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('run', '--config', str(self.config), '--method', 'ewc', '--out', str(self.dir / 'x'))
        self.assertIn('method', str(ctx.exception))
        self.assertFalse(ExperimentRun.objects.exists())

    def test_missing_config_file(self):
        with self.assertRaises(CommandError):
            self.call('run', '--config', str(self.dir / 'missing.ini'))

    def test_no_db_flag(self):
        self.call('run', '--config', str(self.config), '--method', 'sgd', '--out', str(self.dir / 'nodb'), '--no-db')
        self.assertFalse(ExperimentRun.objects.exists())


class ReportCommandTests(CommandTestCase):
    def test_comparison_from_directory(self):
        for method in ('sgd', 'e2net'):
            self.call('run', '--config', str(self.config), '--method', method,
                      '--out', str(self.dir / 'runs' / method), '--no-db')
        output = self.call('report', '--dir', str(self.dir / 'runs'))
        self.assertIn('Comparison (2 runs', output)
        self.assertIn('e2net', output)
        self.assertIn('sgd', output)

    def test_missing_directory(self):
        with self.assertRaises(CommandError):
            self.call('report', '--dir', str(self.dir / 'nowhere'))

    def test_recent_runs_from_database(self):
        self.assertIn('No runs recorded yet', self.call('report'))
        self.call('run', '--config', str(self.config), '--method', 'sgd', '--out', str(self.dir / 'sgd'))
        output = self.call('report')
        self.assertIn('sgd: ACC', output)
        self.assertIn('[completed]', output)
