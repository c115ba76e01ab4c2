"""Continual training loop: loss assembly, masked updates and task-boundary hooks."""
import json
import logging
import time
from dataclasses import dataclass

import numpy as np

from .autodiff import Tape, add, cross_entropy, scale
from .cns import SEARCH, STRATEGIES, CandidatePool, SelectionReservoir, boundary_update
from .data import iterate_batches, merge_tasks
from .exceptions import ParameterError, StateError
from .metrics import AccuracyMatrix, average_accuracy, forgetting
from .network import backward, bind, build_network, forward, forward_on, sgd_step
from .rnd import RndConfig, distillation_term, sample_arch
from .scer import ReplayBuffer, ReplayConfig, rehearsal_gate, replay_loss
from .schedule import build_schedule
from .subnet import parameter_ratio, trainable_mask

logger = logging.getLogger(__name__)
metrics_logger = logging.getLogger('continual.metrics')

E2NET = 'e2net'
SGD = 'sgd'
ER = 'er'
DERPP = 'derpp'
JOINT = 'joint'
METHODS = (E2NET, SGD, ER, DERPP, JOINT)

CLASS_IL = 'class_il'
TASK_IL = 'task_il'
EVAL_MODES = (CLASS_IL, TASK_IL)


@dataclass(frozen=True)
class MethodProfile:
    distill: bool = False
    buffer: bool = False
    subnet_ratio: bool = False
    mask: bool = False
    cumulative: bool = False
    betas: tuple = None


PROFILES = {
    E2NET: MethodProfile(distill=True, buffer=True, subnet_ratio=True, mask=True),
    DERPP: MethodProfile(buffer=True),
    ER: MethodProfile(buffer=True, betas=(1.0, 0.0)),
    SGD: MethodProfile(),
    JOINT: MethodProfile(cumulative=True),
}


@dataclass(frozen=True)
class TrainConfig:
    method: str = E2NET
    num_tasks: int = 5
    groups: int = 8
    hidden: tuple = (64, 64)
    epochs: int = 5
    batch_size: int = 32
    lr: float = 0.03
    lam: float = 0.05
    alpha: float = 0.75
    beta1: float = 0.5
    beta2: float = 0.1
    capacity: int = 200
    rehearsal_every: int = 1
    candidates: int = 64
    selection_size: int = 256
    cns_strategy: str = SEARCH
    masking: bool = True
    eval_mode: str = CLASS_IL

    def __post_init__(self):
        object.__setattr__(self, 'hidden', tuple(int(h) for h in self.hidden))
        if self.method not in METHODS:
            raise ParameterError(f'Unknown method {self.method!r}; choose from {", ".join(METHODS)}')
        if self.cns_strategy not in STRATEGIES:
            raise ParameterError(f'Unknown selection strategy {self.cns_strategy!r}')
        if self.eval_mode not in EVAL_MODES:
            raise ParameterError(f'Unknown evaluation mode {self.eval_mode!r}')
        if self.num_tasks < 1 or self.groups < 1 or self.epochs < 1 or self.batch_size < 1:
            raise ParameterError('num_tasks, groups, epochs and batch_size must be positive')
        if self.lr < 0 or self.capacity < 0:
            raise ParameterError('Learning rate and buffer capacity must be non-negative')
        if self.effective_capacity > 0 and self.batch_size < 2:
            raise ParameterError('Replay needs a batch size of at least 2')
        for width in self.hidden:
            if width % self.groups:
                raise ParameterError(f'Hidden width {width} is not divisible by {self.groups} groups')

    @property
    def profile(self):
        return PROFILES[self.method]

    @property
    def effective_capacity(self):
        return self.capacity if self.profile.buffer else 0

    @property
    def uses_mask(self):
        return self.profile.mask and self.masking

    def rnd_config(self):
        return RndConfig(self.lam, enabled=self.profile.distill)

    def replay_config(self):
        beta1, beta2 = self.profile.betas or (self.beta1, self.beta2)
        return ReplayConfig(beta1, beta2, self.rehearsal_every)


def evaluate(net, tasks, mode=CLASS_IL):
    """Accuracy on each task's test split; task_il restricts the argmax to the task's classes."""
    if mode not in EVAL_MODES:
        raise ParameterError(f'Unknown evaluation mode {mode!r}')
    row = []
    for task in tasks:
        if len(task.test) == 0:
            row.append(0.0)
            continue
        logits = forward(net, task.test.inputs)
        if mode == CLASS_IL:
            predicted = logits.argmax(axis=1)
        else:
            classes = np.asarray(task.classes)
            predicted = classes[logits[:, classes].argmax(axis=1)]
        row.append(float((predicted == task.test.labels).mean()))
    return row


def emit(record):
    metrics_logger.info(json.dumps(record, sort_keys=True))


class ContinualLearner:
    """Owns every piece of mutable training state for one seed."""

    STREAMS = ('shuffle', 'selection', 'cns', 'rnd', 'buffer', 'replay')

    def __init__(self, config, input_dim, num_classes, seed=0):
        self.config = config
        self.seed = seed
        self.net = build_network(input_dim, config.hidden, num_classes, config.groups, seed)
        self.schedule = build_schedule(config.num_tasks, config.groups)
        self.pool = CandidatePool()
        self.buffer = ReplayBuffer(config.effective_capacity, input_dim, num_classes, config.alpha)
        self.selection = SelectionReservoir(config.selection_size, input_dim)
        self.rnd_config = config.rnd_config()
        self.replay_config = config.replay_config()
        children = np.random.SeedSequence(seed).spawn(len(self.STREAMS))
        self.rngs = {name: np.random.default_rng(child) for name, child in zip(self.STREAMS, children)}

        self.task = 0
        self.epoch = 0
        self.step = 0
        self.elapsed_ms = 0.0
        self.mask = None
        self.class_il = AccuracyMatrix(config.num_tasks)
        self.task_il = AccuracyMatrix(config.num_tasks)
        self.wall_ms = []
        self.records = []

    @property
    def finished_tasks(self):
        return len(self.class_il)

    def _record(self, record):
        self.records.append(record)
        emit({**record, 'seed': self.seed, 'method': self.config.method})

    def refresh_mask(self):
        if self.task and self.config.uses_mask:
            self.mask = trainable_mask(self.net, self.schedule.groups_for_task(self.task))
        else:
            self.mask = None

    def begin_task(self, t):
        """Boundary hook: CNS and teacher refresh for the finished task, then advance g."""
        if t != self.task + 1 or self.finished_tasks != self.task:
            raise StateError(f'Cannot begin task {t} while at task {self.task}')
        if t > self.config.num_tasks:
            raise StateError(f'Task {t} exceeds the configured {self.config.num_tasks} tasks')

        if t > 1 and self.config.profile.distill:
            g_prev = self.schedule.groups_for_task(t - 1)
            boundary_update(
                self.pool, self.net, g_prev, self.selection.selection_set(),
                self.config.candidates, self.rngs['cns'],
                boundary=t - 1, strategy=self.config.cns_strategy,
            )
            self._record(self.pool.choices[-1].as_record())

        self.selection.reset()
        self.task = t
        self.epoch = 0
        self.elapsed_ms = 0.0
        self.refresh_mask()
        logger.info(
            f'Task {t}/{self.config.num_tasks} ({self.config.method}, seed {self.seed}): '
            f'search space {self.schedule.groups_for_task(t)}/{self.config.groups} groups, '
            f'{len(self.pool)} pooled archs, {len(self.buffer)} buffered examples'
        )

    def train_batch(self, inputs, labels):
        tape = Tape()
        params = bind(tape, self.net)
        logits = forward_on(tape, self.net, params, inputs)
        ce = cross_entropy(logits, labels)
        loss = ce

        arch = sample_arch(self.pool, self.rngs['rnd']) if self.config.profile.distill else None
        rnd_value = 0.0
        if arch is not None and self.rnd_config.active:
            term = distillation_term(tape, self.net, params, self.pool.teacher, arch, inputs)
            rnd_value = float(term.value)
            loss = add(loss, scale(term, self.rnd_config.lam))
            logger.debug(f'step {self.step}: arch {arch}, rnd {rnd_value:.6g}')

        replay_value = 0.0
        if len(self.buffer) and rehearsal_gate(self.step, self.replay_config.every):
            term = replay_loss(
                self.buffer, self.net, self.config.batch_size, self.replay_config,
                self.rngs['replay'], tape, params,
            )
            if term is not None:
                replay_value = float(term.value)
                loss = add(loss, term)

        sgd_step(self.net, backward(tape, loss, params), self.config.lr, self.mask)

        if self.config.profile.buffer:
            ratio = parameter_ratio(self.net, arch) if arch is not None and self.config.profile.subnet_ratio else 0.0
            self.buffer.offer_batch(inputs, labels, logits.value, ratio, self.rngs['buffer'])
        if self.config.profile.distill:
            self.selection.add_batch(inputs, self.rngs['selection'])
        self.step += 1
        return float(ce.value), rnd_value, replay_value

    def train_epoch(self, dataset):
        started = time.perf_counter()
        totals = np.zeros(3)
        batches = 0
        for inputs, labels in iterate_batches(dataset, self.config.batch_size, self.rngs['shuffle']):
            totals += self.train_batch(inputs, labels)
            batches += 1
        self.epoch += 1
        self.elapsed_ms += (time.perf_counter() - started) * 1000.0

        ce, rnd, replay = totals / max(batches, 1)
        self._record({
            'kind': 'epoch', 'task': self.task, 'epoch': self.epoch,
            'ce': ce, 'rnd': rnd, 'replay': replay,
        })

    def train_task(self, task, on_epoch=None):
        """Run the remaining epochs of the current task."""
        if task.index != self.task:
            raise StateError(f'Task {task.index} given while task {self.task} is active')
        remainder = len(task.train) % self.config.batch_size
        if remainder and self.epoch == 0:
            logger.warning(
                f'Task {task.index}: {len(task.train)} examples leave a truncated final batch '
                f'of {remainder} each epoch'
            )
        while self.epoch < self.config.epochs:
            self.train_epoch(task.train)
            if on_epoch is not None:
                on_epoch(self)

    def end_task(self, tasks):
        """Evaluate on every task seen so far and append the accuracy rows."""
        seen = tasks[:self.task]
        self.class_il.record(self.task, evaluate(self.net, seen, CLASS_IL))
        self.task_il.record(self.task, evaluate(self.net, seen, TASK_IL))
        self.wall_ms.append(self.elapsed_ms)

        record = {
            'kind': 'task', 'task': self.task,
            'acc_class_il': average_accuracy(self.class_il, self.task),
            'acc_task_il': average_accuracy(self.task_il, self.task),
            'forgetting': forgetting(self.class_il, self.task),
            'wall_ms': self.elapsed_ms,
        }
        self._record(record)
        logger.info(
            f'Finished task {self.task}: ACC {record["acc_class_il"]:.4f} class-IL / '
            f'{record["acc_task_il"]:.4f} task-IL, forgetting {record["forgetting"]:.4f}'
        )

    def fit(self, stream, on_epoch=None):
        """Train through the whole stream, resuming wherever the state left off."""
        if len(stream) != self.config.num_tasks:
            raise ParameterError(
                f'Stream has {len(stream)} tasks but the schedule was built for {self.config.num_tasks}'
            )
        tasks = stream.tasks
        for task in tasks[self.finished_tasks:]:
            if self.task < task.index:
                self.begin_task(task.index)
            if self.config.profile.cumulative:
                task = merge_tasks(tasks[:task.index], task.index)
            self.train_task(task, on_epoch)
            self.end_task(tasks)
        return self

    def accuracy(self, mode=CLASS_IL):
        return self.class_il if mode == CLASS_IL else self.task_il
