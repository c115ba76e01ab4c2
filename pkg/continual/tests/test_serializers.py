import tempfile
from pathlib import Path

from django.test import SimpleTestCase
from rest_framework import serializers

from continual.exceptions import ParameterError
from continual.serializers import ExperimentConfigSerializer, build_experiment_config, load_experiment_file
from continual.trainer import TrainConfig


class ExperimentConfigSerializerTests(SimpleTestCase):
    def test_empty_settings_reproduce_reference_experiment(self):
        config = build_experiment_config({})
        self.assertEqual(config.train, TrainConfig())
        self.assertEqual(config.seeds, tuple(range(10)))
        self.assertIsNone(config.output_dir)

    def test_string_values_are_coerced(self):
        config = build_experiment_config({
            'method': 'derpp', 'capacity': '500', 'rf': '1/4', 'seeds': '1,2,3',
            'hidden': '32,32', 'groups': '4', 'masking': 'false', 'timing': 'false',
        })
        self.assertEqual(config.train.method, 'derpp')
        self.assertEqual(config.train.capacity, 500)
        self.assertEqual(config.train.rehearsal_every, 4)
        self.assertEqual(config.train.hidden, (32, 32))
        self.assertFalse(config.train.masking)
        self.assertFalse(config.timing)
        self.assertEqual(config.seeds, (1, 2, 3))

    def test_every_invalid_field_is_reported(self):
        serializer = ExperimentConfigSerializer(data={'method': 'ewc', 'lr': '-1', 'rf': '2/3', 'bogus': '1'})
        self.assertFalse(serializer.is_valid())
        self.assertEqual(set(serializer.errors), {'bogus'})

        serializer = ExperimentConfigSerializer(data={'method': 'ewc', 'lr': '-1', 'rf': '2/3'})
        self.assertFalse(serializer.is_valid())
        self.assertTrue({'method', 'lr', 'rf'} <= set(serializer.errors))

    def test_cross_field_checks(self):
        cases = (
            {'hidden': '30', 'groups': '8'},
            {'num_classes': '10', 'num_tasks': '3'},
            {'source': 'idx'},
            {'resume': 'true'},
            {'checkpoint': 'true'},
            {'batch_size': '1'},
        )
        for values in cases:
            with self.subTest(values=values), self.assertRaises(serializers.ValidationError):
                build_experiment_config(values)

    def test_duplicate_seeds(self):
        with self.assertRaises(serializers.ValidationError):
            build_experiment_config({'seeds': '1,1'})

    def test_verify_suites(self):
        self.assertEqual(build_experiment_config({'verify': 'schedule, metrics'}).verify, ('schedule', 'metrics'))
        with self.assertRaises(serializers.ValidationError):
            build_experiment_config({'verify': 'nonsense'})


class ExperimentFileTests(SimpleTestCase):
    def write(self, text):
        tmp = tempfile.NamedTemporaryFile('w', suffix='.ini', delete=False)
        tmp.write(text)
        tmp.close()
        self.addCleanup(Path(tmp.name).unlink)
        return tmp.name

    def test_sections_are_flattened_with_aliases(self):
        path = self.write('[experiment]\nmethod = er\n[rnd]\nlambda = 0.1\n[scer]\nbuffer = 50\n')
        self.assertEqual(load_experiment_file(path), {'method': 'er', 'lam': '0.1', 'capacity': '50'})

    def test_unknown_section(self):
        with self.assertRaises(ParameterError):
            load_experiment_file(self.write('[optimizer]\nlr = 0.1\n'))

    def test_missing_file(self):
        with self.assertRaises(ParameterError):
            load_experiment_file('/nonexistent/experiment.ini')

    def test_empty_file(self):
        self.assertEqual(load_experiment_file(self.write('')), {})
