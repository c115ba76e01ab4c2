"""Oracle checks runnable outside the test runner (``manage.py verify``)."""
import itertools
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .autodiff import Tape, cross_entropy
from .checkpoint import dumps, loads
from .cns import CandidatePool, SelectionSet, select_representative
from .data import SyntheticSpec, make_synthetic_split, split_tasks, standardize
from .exceptions import ParameterError
from .metrics import AccuracyMatrix, average_accuracy, forgetting
from .network import backward, bind, build_network, forward, forward_on, sgd_step
from .rnd import distillation_term
from .scer import (
    ReplayBuffer, ReplayConfig, RetentionEstimate, replay_loss, retention_probability, simulate_retention,
)
from .schedule import build_schedule
from .subnet import ArchConfig, slice_forward, trainable_mask
from .trainer import DERPP, E2NET, ER, SGD, ContinualLearner, TrainConfig

logger = logging.getLogger(__name__)

SCHEDULE_CASES = ((1, 8), (2, 8), (5, 10), (10, 64), (20, 64))
RETENTION_TOLERANCE = 0.01
OFFER_TOLERANCE = 0.02
MIN_OFFER_TRIALS = 20_000
GRADIENT_TOLERANCE = 1e-4
FD_STEP = 1e-5


@dataclass
class SuiteResult:
    name: str
    passed: bool
    stats: dict = field(default_factory=dict)

    def lines(self):
        status = 'PASS' if self.passed else 'FAIL'
        yield f'[{status}] {self.name}'
        for key, value in self.stats.items():
            yield f'    {key}: {value}'


def check_schedule(seed=0, trials=None):
    stats = {}
    passed = True
    for num_tasks, groups in SCHEDULE_CASES:
        state = build_schedule(num_tasks, groups)
        raw_sum = math.fsum(state.s_raw)
        ok = (
            state.g_groups[-1] == groups
            and all(a <= b for a, b in zip(state.g_groups, state.g_groups[1:]))
            and abs(raw_sum - groups) <= 1e-9
        )
        passed &= ok
        stats[f'N={num_tasks},G={groups}'] = f'g_N={state.g_groups[-1]} raw_sum={raw_sum!r} ok={ok}'
    return SuiteResult('schedule', passed, stats)


def chi_square(counts):
    """Statistic against a uniform spread, with the 4-sigma acceptance limit."""
    counts = np.asarray(counts, dtype=np.float64)
    mean = counts.mean()
    dof = len(counts) - 1
    return float(((counts - mean) ** 2 / mean).sum()), dof + 4.0 * math.sqrt(2.0 * dof), dof


def offer_retention(capacity, stream_length, ratio, alpha, trials, rng):
    """Monte-Carlo over independent `ReplayBuffer`s fed one example at a time.

    Example i carries the value i, so survivors of the initial fill are the
    slots still holding their own index. `evictions` counts overwrites per slot.
    """
    survivors = np.zeros(capacity)
    evictions = np.zeros(capacity, dtype=np.int64)
    initial = np.arange(capacity)
    for _ in range(trials):
        buf = ReplayBuffer(capacity, 1, 1, alpha)
        for i in range(stream_length):
            slot = buf.offer(i, 0, 0.0, ratio, rng)
            if slot is not None and i >= capacity:
                evictions[slot] += 1
        survivors += buf.inputs[:, 0] == initial
    return RetentionEstimate(survivors / trials, evictions, trials)


def check_scer(seed=0, trials=200_000, capacity=20, stream_length=200):
    rng = np.random.default_rng(seed)

    plain = simulate_retention(capacity, stream_length, 0.0, 0.75, trials, rng)
    plain_error = float(np.abs(plain.retention - capacity / stream_length).max())

    ratio, alpha = 0.5, 0.75
    damped = simulate_retention(capacity, stream_length, ratio, alpha, trials, rng)
    expected = retention_probability(capacity, stream_length, ratio, alpha)
    damped_error = float(np.abs(damped.retention - expected).max())

    # eviction slots should be uniform over the buffer
    chi2, chi2_limit, dof = chi_square(plain.evictions)

    # the same checks against the buffer training uses, on a shorter stream
    offer_trials = max(trials // 10, MIN_OFFER_TRIALS)
    offered = offer_retention(5, 30, ratio, alpha, offer_trials, rng)
    offer_expected = retention_probability(5, 30, ratio, alpha)
    offer_error = float(np.abs(offered.retention - offer_expected).max())
    offer_chi2, offer_limit, offer_dof = chi_square(offered.evictions)

    passed = (
        plain_error <= RETENTION_TOLERANCE
        and damped_error <= RETENTION_TOLERANCE
        and chi2 <= chi2_limit
        and offer_error <= OFFER_TOLERANCE
        and offer_chi2 <= offer_limit
    )
    return SuiteResult('scer', passed, {
        'trials': trials,
        'plain_retention_max_error': f'{plain_error:.5f}',
        'damped_expected': f'{expected:.5f}',
        'damped_retention_max_error': f'{damped_error:.5f}',
        'eviction_chi2': f'{chi2:.2f} (limit {chi2_limit:.2f}, {dof} dof)',
        'offer_trials': offer_trials,
        'offer_retention_max_error': f'{offer_error:.5f}',
        'offer_eviction_chi2': f'{offer_chi2:.2f} (limit {offer_limit:.2f}, {offer_dof} dof)',
    })

def relative_error(analytic, numeric):
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-3)


def gradient_error(net, loss_fn, h=FD_STEP):
    """Largest relative error between tape gradients and central differences over every parameter."""
    tape = Tape()
    params = bind(tape, net)
    grads = backward(tape, loss_fn(tape, net, params), params)

    worst = 0.0
    for array, grad in zip(net.arrays(), grads.arrays()):
        for index in np.ndindex(array.shape):
            original = array[index]
            array[index] = original + h
            plus = _loss_value(net, loss_fn)
            array[index] = original - h
            minus = _loss_value(net, loss_fn)
            array[index] = original
            worst = max(worst, relative_error(grad[index], (plus - minus) / (2.0 * h)))
    return worst


def _loss_value(net, loss_fn):
    tape = Tape()
    return float(loss_fn(tape, net, bind(tape, net)).value)


def check_gradients(seed=0, trials=None):
    rng = np.random.default_rng(seed)
    net = build_network(8, (16, 16), 4, 4, seed=seed)
    teacher = build_network(8, (16, 16), 4, 4, seed=seed + 1)
    batch = rng.standard_normal((6, 8))
    labels = rng.integers(0, 4, size=6)

    buffer = ReplayBuffer(12, 8, 4)
    buffer.offer_batch(rng.standard_normal((12, 8)), rng.integers(0, 4, size=12),
                       rng.standard_normal((12, 4)), 0.0, rng)
    arch = ArchConfig((2, 3))

    def ce(tape, net, params):
        return cross_entropy(forward_on(tape, net, params, batch), labels)

    def rnd(tape, net, params):
        return distillation_term(tape, net, params, teacher, arch, batch)

    def replay(tape, net, params):
        return replay_loss(buffer, net, 6, ReplayConfig(), np.random.default_rng(seed), tape, params)

    errors = {name: gradient_error(net, fn) for name, fn in (('ce', ce), ('rnd', rnd), ('replay', replay))}
    return SuiteResult(
        'gradients',
        all(err < GRADIENT_TOLERANCE for err in errors.values()),
        {f'{name}_max_relative_error': f'{err:.3e}' for name, err in errors.items()},
    )


def zero_outside(net, arch):
    """Copy of `net` whose hidden units outside `arch` are forced to output zero."""
    zeroed = net.copy()
    for layer, groups in zip(zeroed.layers, arch.groups):
        keep = math.ceil(groups * layer.out_features / net.groups_per_layer)
        layer.weights[keep:] = 0.0
        layer.bias[keep:] = 0.0
    return zeroed


def check_slicing(seed=0, trials=None, steps=100):
    rng = np.random.default_rng(seed)
    net = build_network(8, (16, 16), 4, 4, seed=seed)
    batch = rng.standard_normal((32, 8))

    identity = bool(np.array_equal(slice_forward(net, ArchConfig.full(net), batch), forward(net, batch)))

    narrow = ArchConfig.uniform(net, 1)
    masking_gap = float(np.abs(slice_forward(net, narrow, batch) - forward(zero_outside(net, narrow), batch)).max())

    mask = trainable_mask(net, 2)
    before = net.copy()
    for _ in range(steps):
        inputs = rng.standard_normal((16, 8))
        labels = rng.integers(0, 4, size=16)
        tape = Tape()
        params = bind(tape, net)
        loss = cross_entropy(forward_on(tape, net, params, inputs), labels)
        sgd_step(net, backward(tape, loss, params), 0.05, mask)
    frozen = all(
        np.array_equal(layer.weights[~rows], old.weights[~rows]) and np.array_equal(layer.bias[~rows], old.bias[~rows])
        for layer, old, rows in zip(net.layers, before.layers, mask.rows)
    )
    moved = not np.array_equal(net.layers[0].weights, before.layers[0].weights)

    return SuiteResult('slicing', identity and masking_gap <= 1e-12 and frozen and moved, {
        'full_width_bitwise': identity,
        'masking_equivalence_gap': f'{masking_gap:.3e}',
        'frozen_bitwise_after_steps': f'{frozen} ({steps} steps)',
        'in_mask_updated': moved,
    })


def brute_force_representative(net, g_t, inputs):
    """Independent argmin of exp(|psi|/|theta|) * mean squared logit gap, ties on size then groups."""
    full = forward(net, inputs)
    total = net.parameter_count
    best = None
    for groups in itertools.product(range(1, g_t + 1), repeat=len(net.hidden_widths)):
        widths = [math.ceil(g * w / net.groups_per_layer) for g, w in zip(groups, net.hidden_widths)]
        widths.append(net.num_classes)
        if widths == [layer.out_features for layer in net.layers]:
            continue
        size, fan_in = 0, net.input_dim
        for width in widths:
            size += width * fan_in + width
            fan_in = width
        gap = full - forward(net, inputs, widths)
        score = math.exp(size / total) * np.mean(np.sum(gap ** 2, axis=1))
        key = (score, size, groups)
        if best is None or key < best:
            best = key
    return ArchConfig(best[2])


def check_cns(seed=0, trials=None, nets=20):
    rng = np.random.default_rng(seed)
    mismatches = []
    for index in range(nets):
        net = build_network(6, (8, 12), 3, 4, seed=seed + index)
        sel = SelectionSet(rng.standard_normal((24, 6)))
        chosen = select_representative(net, 4, sel, 64, np.random.default_rng(index))
        expected = brute_force_representative(net, 4, sel.inputs)
        if chosen != expected:
            mismatches.append(f'net {index}: {chosen} != {expected}')
    return SuiteResult('cns', not mismatches, {
        'nets': nets,
        'mismatches': '; '.join(mismatches) or 'none',
    })


def small_stream(seed=0, num_tasks=2):
    train, test = make_synthetic_split(SyntheticSpec(
        num_classes=4, samples_per_class=24, input_dim=6, sigma=0.3, seed=seed, test_samples_per_class=10,
    ))
    train, test = standardize(train, test)
    return split_tasks(train, num_tasks, test)


def train_learner(config, stream, seed=0):
    return ContinualLearner(config, stream.input_dim, stream.total_classes, seed).fit(stream)


def check_equivalence(seed=0, trials=None):
    stream = small_stream(seed)
    base = TrainConfig(num_tasks=2, groups=4, hidden=(8, 8), epochs=2, batch_size=8,
                       capacity=16, candidates=8, selection_size=32)
    pairs = (
        ('e2net(lam=0, alpha=0, no mask) == derpp',
         replace(base, method=E2NET, lam=0.0, alpha=0.0, masking=False), replace(base, method=DERPP)),
        ('derpp(beta1=1, beta2=0) == er',
         replace(base, method=DERPP, beta1=1.0, beta2=0.0), replace(base, method=ER)),
        ('er(capacity=0) == sgd',
         replace(base, method=ER, capacity=0), replace(base, method=SGD)),
    )
    stats = {}
    passed = True
    for label, left, right in pairs:
        a = train_learner(left, stream, seed)
        b = train_learner(right, stream, seed)
        same = a.net.equals(b.net) and a.class_il.to_list() == b.class_il.to_list()
        passed &= same
        stats[label] = same
    return SuiteResult('equivalence', passed, stats)


def check_metrics(seed=0, trials=None):
    matrix = AccuracyMatrix(2)
    matrix.record(1, [0.9])
    matrix.record(2, [0.7, 0.8])
    acc = average_accuracy(matrix, 2)
    f = forgetting(matrix, 2)
    return SuiteResult('metrics', math.isclose(acc, 0.75) and math.isclose(f, 0.2) and forgetting(matrix, 1) == 0.0, {
        'acc_2': acc,
        'forgetting_2': f,
    })


def check_checkpoint(seed=0, trials=None):
    stream = small_stream(seed)
    config = TrainConfig(num_tasks=2, groups=4, hidden=(8, 8), epochs=2, batch_size=8,
                         capacity=16, candidates=8, selection_size=32)
    uninterrupted = train_learner(config, stream, seed)

    partial = ContinualLearner(config, stream.input_dim, stream.total_classes, seed)
    partial.begin_task(1)
    partial.train_epoch(stream.tasks[0].train)
    restored = loads(dumps(partial)).fit(stream)

    same_net = uninterrupted.net.equals(restored.net)
    same_rows = uninterrupted.class_il.to_list() == restored.class_il.to_list()
    empty = loads(dumps(ContinualLearner(config, stream.input_dim, stream.total_classes, seed)))
    return SuiteResult('checkpoint', same_net and same_rows and len(empty.pool) == 0, {
        'network_bitwise': same_net,
        'accuracy_rows_equal': same_rows,
        'empty_pool_round_trip': len(empty.pool) == 0,
    })


SUITES = {
    'schedule': check_schedule,
    'scer': check_scer,
    'gradients': check_gradients,
    'slicing': check_slicing,
    'cns': check_cns,
    'equivalence': check_equivalence,
    'metrics': check_metrics,
    'checkpoint': check_checkpoint,
}


def run_suites(name, seed=0, trials=200_000):
    if name == 'all':
        names = list(SUITES)
    elif name in SUITES:
        names = [name]
    else:
        raise ParameterError(f'Unknown suite {name!r}; choose from {", ".join([*SUITES, "all"])}')

    results = []
    for suite in names:
        result = SUITES[suite](seed=seed, trials=trials)
        log = logger.info if result.passed else logger.error
        log(f'Suite {suite}: {"passed" if result.passed else "FAILED"}')
        results.append(result)
    return results
