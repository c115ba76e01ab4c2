from django.test import SimpleTestCase, tag

from continual.exceptions import ParameterError
from continual.verification import SUITES, run_suites


class VerificationSuiteTests(SimpleTestCase):
    def test_fast_suites_pass(self):
        for name in ('schedule', 'metrics', 'slicing', 'cns', 'equivalence', 'checkpoint'):
            with self.subTest(suite=name):
                result, = run_suites(name, seed=2024)
                self.assertTrue(result.passed, '\n'.join(result.lines()))

    @tag('slow')
    def test_scer_with_fewer_trials(self):
        result = SUITES['scer'](seed=2024, trials=40_000)
        self.assertIn('eviction_chi2', result.stats)
        self.assertEqual(result.stats['offer_trials'], 20_000)
        self.assertIn('offer_eviction_chi2', result.stats)

    def test_unknown_suite(self):
        with self.assertRaises(ParameterError):
            run_suites('everything')

    @tag('slow')
    def test_gradient_suite(self):
        result, = run_suites('gradients', seed=2024)
        self.assertTrue(result.passed, '\n'.join(result.lines()))

    @tag('slow')
    def test_scer_oracle(self):
        result, = run_suites('scer', seed=2024, trials=200_000)
        self.assertTrue(result.passed, '\n'.join(result.lines()))
