"""Minimal reverse-mode differentiation over numpy arrays.

A `Tape` records every `Function` applied to variables that depend on a
watched parameter. `Tape.gradient` walks the records backwards once; the
recording order is already a topological order, so no graph sort is needed.
"""
import numpy as np

from .exceptions import ShapeError


class Variable:
    __slots__ = ('value', 'tape', 'requires_grad')

    def __init__(self, value, tape, requires_grad=False):
        self.value = value
        self.tape = tape
        self.requires_grad = requires_grad

    @property
    def shape(self):
        return np.shape(self.value)

    def __repr__(self):
        return f'Variable(shape={self.shape}, requires_grad={self.requires_grad})'


class Context:
    def __init__(self):
        self.saved = ()

    def save_for_backward(self, *values):
        self.saved = values


class Function:
    """An op with a forward on raw arrays and a vector-Jacobian backward."""

    @staticmethod
    def forward(ctx, *inputs, **attrs):
        raise NotImplementedError

    @staticmethod
    def backward(ctx, grad):
        raise NotImplementedError


class Tape:
    def __init__(self):
        self._records = []

    def __len__(self):
        return len(self._records)

    def watch(self, array):
        return Variable(np.asarray(array, dtype=np.float64), self, requires_grad=True)

    def constant(self, array):
        return Variable(np.asarray(array, dtype=np.float64), self)

    def apply(self, fn, *inputs, **attrs):
        ctx = Context()
        value = fn.forward(ctx, *(v.value for v in inputs), **attrs)
        out = Variable(value, self, requires_grad=any(v.requires_grad for v in inputs))
        if out.requires_grad:
            self._records.append((out, fn, ctx, inputs))
        return out

    def gradient(self, loss, wrt):
        """Gradients of scalar `loss` with respect to each variable in `wrt`."""
        if np.ndim(loss.value) != 0:
            raise ShapeError(f'Gradient requires a scalar loss, got shape {loss.shape}')

        grads = {id(loss): np.ones_like(loss.value)}
        for out, fn, ctx, inputs in reversed(self._records):
            grad = grads.pop(id(out), None)
            if grad is None:
                continue
            for inp, inp_grad in zip(inputs, fn.backward(ctx, grad)):
                if inp_grad is None or not inp.requires_grad:
                    continue
                key = id(inp)
                grads[key] = grads[key] + inp_grad if key in grads else inp_grad

        return [grads.get(id(w), np.zeros_like(w.value)) for w in wrt]


class Linear(Function):
    @staticmethod
    def forward(ctx, x, weights, bias):
        ctx.save_for_backward(x, weights)
        return x @ weights.T + bias

    @staticmethod
    def backward(ctx, grad):
        x, weights = ctx.saved
        return grad @ weights, grad.T @ x, grad.sum(axis=0)


class PrefixSlice(Function):
    """Leading `rows` (and `cols`) of a parameter, sharing storage with it."""

    @staticmethod
    def forward(ctx, param, rows, cols=None):
        ctx.save_for_backward(param.shape, rows, cols)
        if param.ndim == 1:
            return param[:rows]
        return param[:rows, :cols]

    @staticmethod
    def backward(ctx, grad):
        shape, rows, cols = ctx.saved
        full = np.zeros(shape)
        if len(shape) == 1:
            full[:rows] = grad
        else:
            full[:rows, :cols] = grad
        return (full,)


class ReLU(Function):
    @staticmethod
    def forward(ctx, x):
        ctx.save_for_backward(x)
        return np.maximum(x, 0.0)

    @staticmethod
    def backward(ctx, grad):
        x, = ctx.saved
        return (grad * (x > 0.0),)


class Add(Function):
    @staticmethod
    def forward(ctx, a, b):
        return a + b

    @staticmethod
    def backward(ctx, grad):
        return grad, grad


class Scale(Function):
    @staticmethod
    def forward(ctx, x, factor):
        ctx.save_for_backward(factor)
        return x * factor

    @staticmethod
    def backward(ctx, grad):
        factor, = ctx.saved
        return (grad * factor,)


class CrossEntropy(Function):
    @staticmethod
    def forward(ctx, logits, labels):
        n = logits.shape[0]
        if n == 0:
            ctx.save_for_backward(None, labels)
            return np.float64(0.0)
        shifted = logits - logits.max(axis=1, keepdims=True)
        log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        log_probs = shifted - log_norm
        ctx.save_for_backward(np.exp(log_probs), labels)
        return -log_probs[np.arange(n), labels].mean()

    @staticmethod
    def backward(ctx, grad):
        probs, labels = ctx.saved
        if probs is None:
            return (None,)
        n = probs.shape[0]
        delta = probs.copy()
        delta[np.arange(n), labels] -= 1.0
        return (delta * (grad / n),)


class SquaredDistance(Function):
    """Batch mean of the squared Euclidean distance between matching rows."""

    @staticmethod
    def forward(ctx, a, b):
        diff = a - b
        n = a.shape[0]
        ctx.save_for_backward(diff, n)
        if n == 0:
            return np.float64(0.0)
        return (diff * diff).sum(axis=1).mean()

    @staticmethod
    def backward(ctx, grad):
        diff, n = ctx.saved
        if n == 0:
            return None, None
        g = diff * (2.0 * grad / n)
        return g, -g


def _raw(x):
    return x.value if isinstance(x, Variable) else x


def _labels_for(labels, num_classes):
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise IndexError(f'Label out of range [0, {num_classes}): {labels.min()}..{labels.max()}')
    return labels


def cross_entropy(logits, labels):
    """Mean of -log softmax(logits)[label] over the rows of `logits`.

    Recorded variables give a recorded scalar; plain arrays give a float.
    """
    if isinstance(logits, Variable):
        labels = _labels_for(labels, logits.shape[1])
        if logits.shape[0] != labels.size:
            raise ShapeError(f'{logits.shape[0]} logit rows for {labels.size} labels')
        return logits.tape.apply(CrossEntropy, logits, labels=labels)

    logits = np.asarray(logits, dtype=np.float64)
    labels = _labels_for(labels, logits.shape[1])
    if logits.shape[0] != labels.size:
        raise ShapeError(f'{logits.shape[0]} logit rows for {labels.size} labels')
    return float(CrossEntropy.forward(Context(), logits, labels))


def mse_logits(a, b):
    """Batch mean of ||a_i - b_i||^2."""
    a_shape, b_shape = np.shape(_raw(a)), np.shape(_raw(b))
    if a_shape != b_shape:
        raise ShapeError(f'Shape mismatch: {a_shape} vs {b_shape}')

    if isinstance(a, Variable) or isinstance(b, Variable):
        tape = a.tape if isinstance(a, Variable) else b.tape
        a = a if isinstance(a, Variable) else tape.constant(a)
        b = b if isinstance(b, Variable) else tape.constant(b)
        return tape.apply(SquaredDistance, a, b)

    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float(SquaredDistance.forward(Context(), a, b))


def add(a, b):
    return a.tape.apply(Add, a, b)


def scale(x, factor):
    return x.tape.apply(Scale, x, factor=float(factor))
