"""Subnet-constrained experience replay.

Reservoir sampling whose replacement step only fires with probability
exp(-alpha * rho), rho being the parameter ratio of the representative network
active for the current batch. With rho = 0 (or alpha = 0) this is the classic
reservoir, keeping every stream element with probability capacity / seen.
"""
import io
import logging
import math
import struct
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .autodiff import add, cross_entropy, mse_logits, scale
from .exceptions import ConsistencyError, FormatError, IncompatibleCheckpointError, ParameterError
from .network import forward_on

logger = logging.getLogger(__name__)

BUFFER_MAGIC = b'E2NBUF1'
_HEADER = struct.Struct('<IQdIII')


def draw_replacement(k, rng, size=None):
    """Candidate slot in 0..k-1, then a uniform threshold, in that order."""
    return rng.integers(0, k, size=size), rng.random(size)


def replaces(slot, u, keep, capacity):
    """Whether an offer past capacity overwrites `slot`; scalars or arrays."""
    return (u < keep) & (slot < capacity)


class ReplayBuffer:
    def __init__(self, capacity, input_dim, num_classes, alpha=0.75):
        if capacity < 0:
            raise ParameterError(f'Buffer capacity must be non-negative, got {capacity}')
        if alpha < 0:
            raise ParameterError(f'alpha must be non-negative, got {alpha}')
        self.capacity = capacity
        self.alpha = alpha
        self.input_dim = input_dim
        self.num_classes = num_classes
        self.inputs = np.zeros((capacity, input_dim))
        self.labels = np.zeros(capacity, dtype=np.int64)
        self.logits = np.zeros((capacity, num_classes))
        self.size = 0
        self.seen = 0

    def __len__(self):
        return self.size

    def keep_probability(self, ratio):
        return math.exp(-self.alpha * ratio)

    def offer(self, x, y, z, ratio, rng):
        """Offer one stream example; returns the slot written, or None."""
        if not 0.0 <= ratio <= 1.0:
            raise ParameterError(f'Parameter ratio must lie in [0, 1], got {ratio}')
        self.seen += 1
        if self.seen <= self.capacity:
            slot = self.seen - 1
            self.size = self.seen
        else:
            slot, u = draw_replacement(self.seen, rng)
            if not replaces(slot, u, self.keep_probability(ratio), self.capacity):
                return None
            slot = int(slot)
        self.inputs[slot] = x
        self.labels[slot] = y
        self.logits[slot] = z
        return slot

    def offer_batch(self, inputs, labels, logits, ratio, rng):
        for x, y, z in zip(inputs, labels, logits):
            self.offer(x, y, z, ratio, rng)

    def sample(self, count, rng):
        """Uniform minibatch; without replacement whenever the buffer holds enough entries."""
        index = rng.choice(self.size, size=count, replace=self.size < count)
        return self.inputs[index], self.labels[index], self.logits[index]

    def to_bytes(self):
        out = io.BytesIO()
        out.write(BUFFER_MAGIC)
        out.write(_HEADER.pack(self.capacity, self.seen, self.alpha, self.size,
                               self.input_dim, self.num_classes))
        for i in range(self.size):
            out.write(struct.pack('<I', self.input_dim))
            out.write(self.inputs[i].astype('<f8').tobytes())
            out.write(struct.pack('<i', int(self.labels[i])))
            out.write(self.logits[i].astype('<f8').tobytes())
        return out.getvalue()

    @classmethod
    def from_bytes(cls, data):
        magic = bytes(data[:len(BUFFER_MAGIC)])
        if magic != BUFFER_MAGIC:
            raise IncompatibleCheckpointError(magic, BUFFER_MAGIC)
        offset = len(BUFFER_MAGIC)
        if len(data) < offset + _HEADER.size:
            raise FormatError('Truncated buffer header', offset)
        capacity, seen, alpha, size, input_dim, num_classes = _HEADER.unpack_from(data, offset)
        offset += _HEADER.size
        if size > capacity or size != min(seen, capacity):
            raise ConsistencyError(f'Buffer holds {size} entries for capacity {capacity} after {seen} offers')

        buf = cls(capacity, input_dim, num_classes, alpha)
        entry = 4 + 8 * input_dim + 4 + 8 * num_classes
        for i in range(size):
            if len(data) < offset + entry:
                raise FormatError(f'Truncated buffer entry {i}', offset)
            dim, = struct.unpack_from('<I', data, offset)
            if dim != input_dim:
                raise ConsistencyError(f'Entry {i} has input dimension {dim}, expected {input_dim}')
            offset += 4
            buf.inputs[i] = np.frombuffer(data, dtype='<f8', count=input_dim, offset=offset)
            offset += 8 * input_dim
            buf.labels[i], = struct.unpack_from('<i', data, offset)
            offset += 4
            buf.logits[i] = np.frombuffer(data, dtype='<f8', count=num_classes, offset=offset)
            offset += 8 * num_classes
        buf.size = size
        buf.seen = seen
        return buf


@dataclass(frozen=True)
class ReplayConfig:
    beta1: float = 0.5
    beta2: float = 0.1
    every: int = 1

    def __post_init__(self):
        if self.beta1 < 0 or self.beta2 < 0:
            raise ParameterError('Replay weights beta1 and beta2 must be non-negative')
        if self.every < 1:
            raise ParameterError(f'Rehearsal period must be at least 1, got {self.every}')

    @property
    def rehearsal_frequency(self):
        return Fraction(1, self.every)


def parse_rehearsal_frequency(text):
    """'1/4' -> 4, '1' -> 1; only unit fractions are accepted."""
    try:
        value = Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ParameterError(f'Invalid rehearsal frequency {text!r}') from exc
    if not 0 < value <= 1 or value.numerator != 1:
        raise ParameterError(f'Rehearsal frequency must be 1/m for an integer m >= 1, got {text!r}')
    return value.denominator


def rehearsal_gate(step, every):
    if every < 1:
        raise ParameterError(f'Rehearsal period must be at least 1, got {every}')
    return step % every == 0


def retention_probability(capacity, k, ratios, alpha):
    """Probability that one of the first `capacity` examples survives `k` offers.

    `ratios` holds rho for offers capacity+1..k, or a single float used for all.
    """
    if k < capacity:
        raise ParameterError(f'Stream length {k} is shorter than capacity {capacity}')
    steps = k - capacity
    if np.isscalar(ratios):
        ratios = np.full(steps, float(ratios))
    ratios = np.asarray(ratios, dtype=np.float64)
    if ratios.shape != (steps,):
        raise ParameterError(f'Expected {steps} ratios, got {ratios.shape[0]}')
    n = np.arange(capacity + 1, k + 1, dtype=np.float64)
    return float(np.prod(1.0 - np.exp(-alpha * ratios) / n))


def replay_loss(buf, net, minibatch_size, cfg, rng, tape, params):
    """beta1 * CE on a memory minibatch plus beta2 * squared gap to the stored logits.

    Returns None when the buffer is empty or both weights are zero, so callers
    skip the term entirely.
    """
    if len(buf) == 0 or (cfg.beta1 == 0 and cfg.beta2 == 0):
        return None
    inputs, labels, logits = buf.sample(minibatch_size, rng)
    current = forward_on(tape, net, params, inputs)

    loss = None
    if cfg.beta1:
        loss = scale(cross_entropy(current, labels), cfg.beta1)
    if cfg.beta2:
        term = scale(mse_logits(current, logits), cfg.beta2)
        loss = term if loss is None else add(loss, term)
    return loss


@dataclass
class RetentionEstimate:
    retention: np.ndarray
    evictions: np.ndarray
    trials: int


def simulate_retention(capacity, stream_length, ratio, alpha, trials, rng):
    """Vectorised Monte-Carlo replay of `offer` over many independent buffers.

    Each trial uses the same draw and replacement rule as `ReplayBuffer.offer`.
    Returns the survival frequency of each initial example and the per-slot
    eviction counts.
    """
    slots = np.tile(np.arange(capacity), (trials, 1))
    evictions = np.zeros(capacity, dtype=np.int64)
    keep = math.exp(-alpha * ratio)
    rows = np.arange(trials)
    for k in range(capacity + 1, stream_length + 1):
        slot, u = draw_replacement(k, rng, size=trials)
        hit = replaces(slot, u, keep, capacity)
        slots[rows[hit], slot[hit]] = k - 1
        evictions += np.bincount(slot[hit], minlength=capacity)
    retention = (slots == np.arange(capacity)).mean(axis=0)
    return RetentionEstimate(retention, evictions, trials)
