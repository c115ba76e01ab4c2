"""Desk-scale replications of the method ranking; run with ``--tag slow``."""
from dataclasses import replace

from django.test import SimpleTestCase, tag

from continual.harness import REFERENCE_SEEDS, DataConfig, ExperimentConfig, run
from continual.trainer import DERPP, E2NET, ER, SGD, TrainConfig

SEEDS = REFERENCE_SEEDS
# data seed pinned so every method sees the same ten-class stream
DESK_DATA = DataConfig(num_classes=10, samples_per_class=320, input_dim=16, sigma=0.1, seed=0)


def run_method(method, **overrides):
    train = replace(TrainConfig(), method=method, **overrides)
    return run(ExperimentConfig(train=train, data=DESK_DATA, seeds=SEEDS, timing=False))


@tag('slow')
class MethodRankingTests(SimpleTestCase):
    def test_e2net_beats_naive_fine_tuning_and_replay(self):
        """Measured on this stream over seeds 0-9: e2net ACC 1.0, er 1.0, derpp 1.0, sgd 0.8459.

        The ACC gap to sgd is 15.4 points against the 15-point bar, and e2net >= er
        holds as a tie at 1.0. A failure here most likely means one of those two
        margins moved, not that the ranking flipped.
        """
        e2net = run_method(E2NET)
        sgd = run_method(SGD)
        er = run_method(ER)
        derpp = run_method(DERPP)

        for report in (e2net, sgd, er, derpp):
            self.assertFalse(report.failures)
        self.assertGreaterEqual(e2net.acc[0] - sgd.acc[0], 0.15)
        self.assertGreaterEqual(sgd.forgetting[0] - e2net.forgetting[0], 0.15)
        self.assertGreaterEqual(e2net.acc[0], er.acc[0])


@tag('slow')
class RehearsalFrequencyTests(SimpleTestCase):
    def test_sparse_rehearsal_costs_e2net_less_than_derpp(self):
        drops = {}
        for method in (E2NET, DERPP):
            acc = {every: run_method(method, rehearsal_every=every).acc[0] for every in (1, 2, 4)}
            drops[method] = acc[1] - acc[4]
        self.assertLessEqual(drops[E2NET], 0.10)
        self.assertLessEqual(drops[E2NET], drops[DERPP])
