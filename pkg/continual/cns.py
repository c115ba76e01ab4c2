"""Candidate network selection at task boundaries and the frozen teacher snapshot."""
import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ParameterError, StateError
from .network import forward
from .subnet import ArchConfig, param_count, slice_forward

logger = logging.getLogger(__name__)

SEARCH = 'search'
LARGEST = 'largest'
STRATEGIES = (SEARCH, LARGEST)


@dataclass
class SelectionSet:
    inputs: np.ndarray

    def __len__(self):
        return len(self.inputs)


class SelectionReservoir:
    """Uniform reservoir of inputs from the task in progress, used to score candidates."""

    def __init__(self, size, input_dim):
        if size < 1:
            raise ParameterError(f'Selection set size must be at least 1, got {size}')
        self.size = size
        self.inputs = np.empty((size, input_dim))
        self.filled = 0
        self.seen = 0

    def __len__(self):
        return self.filled

    def add_batch(self, batch, rng):
        for x in batch:
            self.seen += 1
            if self.filled < self.size:
                self.inputs[self.filled] = x
                self.filled += 1
            else:
                slot = rng.integers(0, self.seen)
                if slot < self.size:
                    self.inputs[slot] = x

    def selection_set(self):
        return SelectionSet(self.inputs[:self.filled].copy())

    def reset(self):
        self.filled = 0
        self.seen = 0


@dataclass
class BoundaryChoice:
    boundary: int
    arch: ArchConfig
    score: float
    param_ratio: float

    def as_record(self):
        return {
            'kind': 'boundary',
            'boundary': self.boundary,
            'arch': str(self.arch),
            'score': self.score,
            'param_ratio': self.param_ratio,
        }


@dataclass
class CandidatePool:
    archs: list = field(default_factory=list)
    teacher: object = None
    boundary_index: int = 0
    choices: list = field(default_factory=list)

    def __len__(self):
        return len(self.archs)


def _distance_score(net, arch, inputs, full_logits):
    gap = full_logits - slice_forward(net, arch, inputs)
    distance = (gap * gap).sum(axis=1).mean()
    return math.exp(param_count(net, arch) / net.parameter_count) * distance


def cns_score(net, arch, sel):
    """exp(|psi|/|theta|) times the mean squared logit gap to the working network."""
    if len(sel) == 0:
        raise ParameterError('Cannot score a candidate on an empty selection set')
    return _distance_score(net, arch, sel.inputs, forward(net, sel.inputs))


def admissible_configs(net, g_t):
    """Every configuration with all layers in 1..g_t, minus the identity."""
    depth = len(net.hidden_widths)
    configs = [ArchConfig(groups) for groups in itertools.product(range(1, g_t + 1), repeat=depth)]
    return [arch for arch in configs if not arch.is_full(net)]


def candidate_configs(net, g_t, budget, rng):
    if g_t < 1:
        raise ParameterError(f'Search-space size must be at least 1, got {g_t}')
    if budget < 1:
        raise ParameterError(f'Candidate budget must be at least 1, got {budget}')
    g_t = min(g_t, net.groups_per_layer)
    depth = len(net.hidden_widths)

    if budget >= g_t ** depth:
        candidates = admissible_configs(net, g_t)
    else:
        found = {ArchConfig.uniform(net, c) for c in range(1, g_t + 1)}
        for _ in range(budget):
            found.add(ArchConfig(tuple(rng.integers(1, g_t + 1, size=depth))))
        candidates = [arch for arch in found if not arch.is_full(net)]

    if not candidates:
        # only the identity fits the search space (one group per layer, or no hidden layers)
        candidates = [ArchConfig.full(net)]
    return sorted(candidates, key=lambda arch: arch.groups)


def rank_candidates(net, candidates, sel):
    if len(sel) == 0:
        raise ParameterError('Cannot score candidates on an empty selection set')
    full_logits = forward(net, sel.inputs)
    scored = [(_distance_score(net, arch, sel.inputs, full_logits), param_count(net, arch), arch)
              for arch in candidates]
    scored.sort(key=lambda item: (item[0], item[1], item[2].groups))
    return [(arch, score) for score, _, arch in scored]


def select_representative(net, g_t, sel, budget, rng, strategy=SEARCH):
    return _choose(net, g_t, sel, budget, rng, strategy)[0]


def _choose(net, g_t, sel, budget, rng, strategy):
    if strategy == LARGEST:
        arch = ArchConfig.uniform(net, min(g_t, net.groups_per_layer))
        return arch, cns_score(net, arch, sel)
    if strategy != SEARCH:
        raise ParameterError(f'Unknown selection strategy {strategy!r}')
    return rank_candidates(net, candidate_configs(net, g_t, budget, rng), sel)[0]


def boundary_update(pool, net, g_t, sel, budget, rng, boundary=None, strategy=SEARCH):
    """Append the representative network for the finished task and refresh the teacher."""
    expected = pool.boundary_index + 1
    if boundary is not None and boundary != expected:
        raise StateError(f'Boundary {boundary} already applied or out of order (pool expects {expected})')

    arch, score = _choose(net, g_t, sel, budget, rng, strategy)
    choice = BoundaryChoice(expected, arch, score, param_count(net, arch) / net.parameter_count)

    pool.archs.append(arch)
    pool.choices.append(choice)
    pool.teacher = net.copy()
    pool.boundary_index = expected

    logger.info(
        f'Boundary {expected}: representative {arch} (score {score:.6g}, '
        f'param ratio {choice.param_ratio:.3f}) from {len(sel)} selection inputs'
    )
    return pool
