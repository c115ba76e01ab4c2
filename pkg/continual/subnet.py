"""Weight-shared subnets: group configurations, prefix slicing and freeze masks.

A subnet keeps the first k groups of units in every hidden layer. Slices are
views of the working network's arrays, so subnets share weights with it and
with each other, and smaller configurations are nested inside larger ones.
"""
from dataclasses import dataclass

import numpy as np

from .autodiff import Tape
from .exceptions import ParameterError, ShapeError
from .network import bind, forward_on


def unit_count(groups, width, total_groups):
    """ceil(groups * width / total_groups)."""
    return -(-groups * width // total_groups)


@dataclass(frozen=True)
class ArchConfig:
    groups: tuple

    def __post_init__(self):
        object.__setattr__(self, 'groups', tuple(int(g) for g in self.groups))

    def __str__(self):
        return ','.join(str(g) for g in self.groups)

    @classmethod
    def parse(cls, text):
        text = text.strip()
        if not text:
            return cls(())
        try:
            return cls(tuple(int(part) for part in text.split(',')))
        except ValueError as exc:
            raise ParameterError(f'Invalid architecture {text!r}') from exc

    @classmethod
    def full(cls, net):
        return cls((net.groups_per_layer,) * len(net.hidden_widths))

    @classmethod
    def uniform(cls, net, groups):
        return cls((groups,) * len(net.hidden_widths))

    def is_full(self, net):
        return all(g == net.groups_per_layer for g in self.groups)

    def within(self, other):
        """Elementwise <=: every unit read by self is also read by `other`."""
        return all(a <= b for a, b in zip(self.groups, other.groups))

    def validate(self, net):
        if len(self.groups) != len(net.hidden_widths):
            raise ShapeError(
                f'Architecture {self} has {len(self.groups)} entries for '
                f'{len(net.hidden_widths)} hidden layers'
            )
        for index, g in enumerate(self.groups):
            if not 1 <= g <= net.groups_per_layer:
                raise ShapeError(f'Layer {index} group count {g} outside 1..{net.groups_per_layer}')
        return self


def active_widths(net, arch):
    arch.validate(net)
    hidden = [
        unit_count(g, width, net.groups_per_layer)
        for g, width in zip(arch.groups, net.hidden_widths)
    ]
    return [*hidden, net.num_classes]


def slice_forward_on(tape, net, params, arch, batch):
    return forward_on(tape, net, params, batch, active_widths(net, arch))


def slice_forward(net, arch, batch):
    tape = Tape()
    return slice_forward_on(tape, net, bind(tape, net, trainable=False), arch, batch).value


def param_count(net, arch):
    """Weights and biases read by `slice_forward` for `arch`."""
    count = 0
    in_width = net.input_dim
    for out_width in active_widths(net, arch):
        count += out_width * in_width + out_width
        in_width = out_width
    return count


def parameter_ratio(net, arch):
    return param_count(net, arch) / net.parameter_count


@dataclass(frozen=True)
class TrainableMask:
    """Per-layer boolean masks over output units (weight rows and bias entries)."""
    rows: tuple

    def trainable_count(self, net):
        return sum(
            int(rows.sum()) * (layer.in_features + 1)
            for rows, layer in zip(self.rows, net.layers)
        )


def trainable_mask(net, g_t):
    if not 1 <= g_t <= net.groups_per_layer:
        raise ParameterError(f'Search-space size {g_t} outside 1..{net.groups_per_layer}')
    rows = []
    for layer in net.layers[:-1]:
        active = np.zeros(layer.out_features, dtype=bool)
        active[:unit_count(g_t, layer.out_features, net.groups_per_layer)] = True
        rows.append(active)
    rows.append(np.ones(net.num_classes, dtype=bool))
    return TrainableMask(tuple(rows))
