"""Versioned checkpoints of a learner's complete training state.

Layout: magic ``E2NCKPT1``, a little-endian u32 length, a JSON metadata block,
then an ``np.savez`` archive holding the network, the teacher snapshot, the
replay buffer (in its own ``E2NBUF1`` encoding) and the selection reservoir.
"""
import io
import json
import logging
import struct
from dataclasses import asdict

import numpy as np

from .cns import BoundaryChoice
from .exceptions import FormatError, IncompatibleCheckpointError
from .metrics import AccuracyMatrix
from .scer import ReplayBuffer
from .subnet import ArchConfig
from .trainer import ContinualLearner, TrainConfig
from .utils import atomic_write

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b'E2NCKPT1'
_LENGTH = struct.Struct('<I')


def _network_arrays(prefix, net):
    arrays = {}
    for i, layer in enumerate(net.layers):
        arrays[f'{prefix}_w{i}'] = layer.weights
        arrays[f'{prefix}_b{i}'] = layer.bias
    return arrays


def _restore_network(net, prefix, archive):
    for i, layer in enumerate(net.layers):
        layer.weights[...] = archive[f'{prefix}_w{i}']
        layer.bias[...] = archive[f'{prefix}_b{i}']


def dumps(learner):
    meta = {
        'config': asdict(learner.config),
        'seed': learner.seed,
        'input_dim': learner.net.input_dim,
        'num_classes': learner.net.num_classes,
        'task': learner.task,
        'epoch': learner.epoch,
        'step': learner.step,
        'elapsed_ms': learner.elapsed_ms,
        'archs': [str(arch) for arch in learner.pool.archs],
        'boundary_index': learner.pool.boundary_index,
        'choices': [choice.as_record() for choice in learner.pool.choices],
        'has_teacher': learner.pool.teacher is not None,
        'rngs': {name: rng.bit_generator.state for name, rng in learner.rngs.items()},
        'class_il': learner.class_il.to_list(),
        'task_il': learner.task_il.to_list(),
        'wall_ms': learner.wall_ms,
        'records': learner.records,
        'selection': {'filled': learner.selection.filled, 'seen': learner.selection.seen},
    }
    arrays = _network_arrays('net', learner.net)
    if learner.pool.teacher is not None:
        arrays.update(_network_arrays('teacher', learner.pool.teacher))
    arrays['buffer'] = np.frombuffer(learner.buffer.to_bytes(), dtype=np.uint8)
    arrays['selection'] = learner.selection.inputs

    archive = io.BytesIO()
    np.savez(archive, **arrays)
    header = json.dumps(meta, sort_keys=True).encode('utf-8')
    return CHECKPOINT_MAGIC + _LENGTH.pack(len(header)) + header + archive.getvalue()


def loads(data):
    magic = data[:len(CHECKPOINT_MAGIC)]
    if magic != CHECKPOINT_MAGIC:
        raise IncompatibleCheckpointError(magic, CHECKPOINT_MAGIC)
    offset = len(CHECKPOINT_MAGIC)
    if len(data) < offset + _LENGTH.size:
        raise FormatError('Truncated checkpoint header', offset)
    length, = _LENGTH.unpack_from(data, offset)
    offset += _LENGTH.size
    if len(data) < offset + length:
        raise FormatError('Truncated checkpoint metadata', len(data))
    meta = json.loads(data[offset:offset + length].decode('utf-8'))
    archive = np.load(io.BytesIO(data[offset + length:]))

    config = TrainConfig(**meta['config'])
    learner = ContinualLearner(config, meta['input_dim'], meta['num_classes'], meta['seed'])
    _restore_network(learner.net, 'net', archive)

    pool = learner.pool
    pool.archs = [ArchConfig.parse(text) for text in meta['archs']]
    pool.boundary_index = meta['boundary_index']
    pool.choices = [
        BoundaryChoice(c['boundary'], ArchConfig.parse(c['arch']), c['score'], c['param_ratio'])
        for c in meta['choices']
    ]
    if meta['has_teacher']:
        pool.teacher = learner.net.copy()
        _restore_network(pool.teacher, 'teacher', archive)

    learner.buffer = ReplayBuffer.from_bytes(archive['buffer'].tobytes())
    learner.selection.inputs[...] = archive['selection']
    learner.selection.filled = meta['selection']['filled']
    learner.selection.seen = meta['selection']['seen']
    for name, state in meta['rngs'].items():
        learner.rngs[name].bit_generator.state = state

    learner.task = meta['task']
    learner.epoch = meta['epoch']
    learner.step = meta['step']
    learner.elapsed_ms = meta['elapsed_ms']
    learner.class_il = AccuracyMatrix.from_list(config.num_tasks, meta['class_il'])
    learner.task_il = AccuracyMatrix.from_list(config.num_tasks, meta['task_il'])
    learner.wall_ms = meta['wall_ms']
    learner.records = meta['records']
    learner.refresh_mask()
    return learner


def checkpoint_save(learner, path):
    atomic_write(path, dumps(learner))
    logger.info(f'Checkpoint saved to {path} (task {learner.task}, epoch {learner.epoch})')
    return path


def checkpoint_load(path):
    with open(path, 'rb') as f:
        learner = loads(f.read())
    logger.info(f'Checkpoint loaded from {path} (task {learner.task}, epoch {learner.epoch})')
    return learner
