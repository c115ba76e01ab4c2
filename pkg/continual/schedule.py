"""Cosine-annealed growth of the subnet search space across task boundaries."""
import logging
import math
from dataclasses import dataclass

from .exceptions import ParameterError

logger = logging.getLogger(__name__)


def expansion_constant(num_tasks, groups):
    """r chosen so the unclamped expansion sizes sum to exactly `groups`."""
    if num_tasks < 1:
        raise ParameterError(f'Task count must be at least 1, got {num_tasks}')
    if groups < 1:
        raise ParameterError(f'Group count must be at least 1, got {groups}')
    denominator = math.fsum(1.0 + math.cos(t * math.pi / num_tasks) for t in range(num_tasks))
    return 2.0 * groups / denominator


def expansion_size(t, r, num_tasks):
    if not 1 <= t <= num_tasks:
        raise ParameterError(f'Task index {t} outside 1..{num_tasks}')
    return 0.5 * r * (1.0 + math.cos((t - 1) * math.pi / num_tasks))


def round_half_up(value):
    return math.floor(value + 0.5)


@dataclass(frozen=True)
class ScheduleState:
    num_tasks: int
    groups: int
    r: float
    s_raw: tuple
    g_real: tuple
    g_groups: tuple

    def groups_for_task(self, t):
        """Search-space size g_t for 1-based task `t`."""
        if not 1 <= t <= self.num_tasks:
            raise ParameterError(f'Task index {t} outside 1..{self.num_tasks}')
        return self.g_groups[t - 1]

    def table(self):
        return [
            {'t': t, 's_raw': s, 'g_real': g, 'g_groups': k}
            for t, (s, g, k) in enumerate(zip(self.s_raw, self.g_real, self.g_groups), start=1)
        ]


def build_schedule(num_tasks, groups):
    r = expansion_constant(num_tasks, groups)
    if num_tasks > groups:
        logger.warning(
            f'{num_tasks} tasks over {groups} groups: the s_t >= 1 clamp dominates the cosine schedule'
        )

    s_raw = tuple(expansion_size(t, r, num_tasks) for t in range(1, num_tasks + 1))
    g_real = []
    total = 0.0
    for s in s_raw:
        total += max(s, 1.0)
        g_real.append(min(total, float(groups)))

    g_groups = [min(max(round_half_up(g), 1), groups) for g in g_real]
    g_groups[-1] = groups
    return ScheduleState(num_tasks, groups, r, s_raw, tuple(g_real), tuple(g_groups))
