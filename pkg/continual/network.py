"""Dense working network, its tape bindings and the masked SGD update."""
import logging
from dataclasses import dataclass, field

import numpy as np

from .autodiff import Linear, PrefixSlice, ReLU, Tape
from .exceptions import NumericError, ParameterError, ShapeError

logger = logging.getLogger(__name__)

RELU = 'relu'
IDENTITY = 'identity'
ACTIVATIONS = (RELU, IDENTITY)


@dataclass
class DenseLayer:
    weights: np.ndarray
    bias: np.ndarray
    activation: str = RELU

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2:
            raise ShapeError(f'Layer weights must be 2-D, got shape {self.weights.shape}')
        if self.bias.shape != (self.weights.shape[0],):
            raise ShapeError(
                f'Bias length {self.bias.shape} does not match {self.weights.shape[0]} output units'
            )
        if self.activation not in ACTIVATIONS:
            raise ParameterError(f'Unknown activation {self.activation!r}')

    @property
    def in_features(self):
        return self.weights.shape[1]

    @property
    def out_features(self):
        return self.weights.shape[0]

    def copy(self):
        return DenseLayer(self.weights.copy(), self.bias.copy(), self.activation)


@dataclass
class Network:
    layers: list
    num_classes: int
    groups_per_layer: int
    seed: int = 0

    def __post_init__(self):
        if not self.layers:
            raise ShapeError('A network needs at least one layer')
        if self.groups_per_layer < 1:
            raise ParameterError('groups_per_layer must be at least 1')
        for index, (prev, layer) in enumerate(zip(self.layers, self.layers[1:]), start=1):
            if layer.in_features != prev.out_features:
                raise ShapeError(
                    f'Layer {index} expects {layer.in_features} inputs, previous layer emits {prev.out_features}'
                )
        for index, layer in enumerate(self.layers[:-1]):
            if layer.out_features % self.groups_per_layer:
                raise ShapeError(
                    f'Hidden layer {index} width {layer.out_features} is not divisible '
                    f'by {self.groups_per_layer} groups'
                )
        if self.layers[-1].out_features != self.num_classes:
            raise ShapeError(
                f'Output layer has {self.layers[-1].out_features} units for {self.num_classes} classes'
            )

    @property
    def input_dim(self):
        return self.layers[0].in_features

    @property
    def hidden_widths(self):
        return tuple(layer.out_features for layer in self.layers[:-1])

    @property
    def parameter_count(self):
        return sum(layer.weights.size + layer.bias.size for layer in self.layers)

    def copy(self):
        return Network(
            [layer.copy() for layer in self.layers],
            self.num_classes, self.groups_per_layer, self.seed,
        )

    def arrays(self):
        for layer in self.layers:
            yield layer.weights
            yield layer.bias

    def equals(self, other):
        """Bitwise parameter equality."""
        if len(self.layers) != len(other.layers):
            return False
        return all(
            a.shape == b.shape and np.array_equal(a, b)
            for a, b in zip(self.arrays(), other.arrays())
        )


def build_network(input_dim, hidden, num_classes, groups, seed=0):
    """Glorot-uniform weights, zero biases, ReLU hidden layers and a linear head."""
    rng = np.random.default_rng(seed)
    widths = [input_dim, *hidden, num_classes]
    layers = []
    for index, (fan_in, fan_out) in enumerate(zip(widths, widths[1:])):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        layers.append(DenseLayer(
            rng.uniform(-bound, bound, size=(fan_out, fan_in)),
            np.zeros(fan_out),
            IDENTITY if index == len(widths) - 2 else RELU,
        ))
    return Network(layers, num_classes, groups, seed)


@dataclass
class Gradients:
    weights: list
    biases: list

    def arrays(self):
        for w, b in zip(self.weights, self.biases):
            yield w
            yield b

    @classmethod
    def zeros_like(cls, net):
        return cls(
            [np.zeros_like(layer.weights) for layer in net.layers],
            [np.zeros_like(layer.bias) for layer in net.layers],
        )


@dataclass
class BoundParameters:
    """Tape variables standing for a network's parameters."""
    weights: list = field(default_factory=list)
    biases: list = field(default_factory=list)

    def variables(self):
        return [*self.weights, *self.biases]


def bind(tape, net, trainable=True):
    make = tape.watch if trainable else tape.constant
    return BoundParameters(
        [make(layer.weights) for layer in net.layers],
        [make(layer.bias) for layer in net.layers],
    )


def _check_batch(net, batch):
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != net.input_dim:
        raise ShapeError(f'Batch shape {batch.shape} does not match input dimension {net.input_dim}')
    return batch


def forward_on(tape, net, params, batch, widths=None):
    """Record a forward pass; `widths` gives each layer's active output prefix."""
    batch = _check_batch(net, batch)
    if widths is None:
        widths = [layer.out_features for layer in net.layers]

    h = tape.constant(batch)
    in_width = net.input_dim
    for layer, w, b, out_width in zip(net.layers, params.weights, params.biases, widths):
        w_active = tape.apply(PrefixSlice, w, rows=out_width, cols=in_width)
        b_active = tape.apply(PrefixSlice, b, rows=out_width)
        h = tape.apply(Linear, h, w_active, b_active)
        if layer.activation == RELU:
            h = tape.apply(ReLU, h)
        in_width = out_width
    return h


def forward(net, batch, widths=None):
    tape = Tape()
    return forward_on(tape, net, bind(tape, net, trainable=False), batch, widths).value


def backward(tape, loss, params):
    """Gradients of `loss` for every parameter bound on `tape`."""
    n = len(params.weights)
    grads = tape.gradient(loss, params.variables())
    return Gradients(grads[:n], grads[n:])


def sgd_step(net, grads, lr, mask=None):
    """In-place theta <- theta - lr * (mask * grad); masked-out rows keep their bits."""
    for index, grad in enumerate(grads.arrays()):
        if not np.all(np.isfinite(grad)):
            raise NumericError(f'Non-finite gradient in layer {index // 2}', layer_index=index // 2)

    for index, (layer, g_w, g_b) in enumerate(zip(net.layers, grads.weights, grads.biases)):
        if mask is None:
            layer.weights -= lr * g_w
            layer.bias -= lr * g_b
            continue
        rows = mask.rows[index]
        if rows.shape != (layer.out_features,):
            raise ShapeError(f'Mask for layer {index} has shape {rows.shape}, expected ({layer.out_features},)')
        layer.weights[rows] -= lr * g_w[rows]
        layer.bias[rows] -= lr * g_b[rows]
    return net
