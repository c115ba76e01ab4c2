"""Representative network distillation: student slice vs. frozen teacher slice."""
import logging
from dataclasses import dataclass

from .autodiff import Tape, mse_logits
from .exceptions import ParameterError
from .network import bind
from .subnet import ArchConfig, slice_forward, slice_forward_on

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RndConfig:
    lam: float = 0.05
    enabled: bool = True

    def __post_init__(self):
        if self.lam < 0:
            raise ParameterError(f'Distillation weight must be non-negative, got {self.lam}')

    @property
    def active(self):
        return self.enabled and self.lam > 0


def sample_arch(pool, rng):
    """One architecture drawn uniformly from the pool, or None before the first boundary."""
    if not pool.archs:
        return None
    return pool.archs[int(rng.integers(len(pool.archs)))]


def distillation_term(tape, net, params, teacher, arch, batch):
    teacher_logits = slice_forward(teacher, arch, batch)
    student_logits = slice_forward_on(tape, net, params, arch, batch)
    return mse_logits(student_logits, teacher_logits)


def rnd_loss(net, pool, batch, rng, tape=None, params=None, arch=None):
    """Squared logit gap between the student and teacher views of a pooled arch.

    Returns (loss, arch). With an empty pool the loss is a recorded zero and
    the arch is the full-width sentinel. Pass `arch` to reuse a draw already
    made for this batch.
    """
    if tape is None:
        tape = Tape()
        params = bind(tape, net)

    if arch is None:
        arch = sample_arch(pool, rng)
    if arch is None:
        return tape.constant(0.0), ArchConfig.full(net)

    loss = distillation_term(tape, net, params, pool.teacher, arch, batch)
    logger.debug(f'RND arch {arch}: loss {float(loss.value):.6g}')
    return loss, arch
