"""Datasets and class-split task streams: synthetic Gaussian blobs and IDX files."""
import gzip
import logging
import struct
from dataclasses import dataclass

import numpy as np

from .exceptions import ConsistencyError, FormatError, ParameterError

logger = logging.getLogger(__name__)

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


@dataclass
class Dataset:
    inputs: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __len__(self):
        return len(self.labels)

    @property
    def input_dim(self):
        return self.inputs.shape[1]

    def subset(self, mask):
        return Dataset(self.inputs[mask], self.labels[mask], self.num_classes)


@dataclass
class Task:
    index: int
    classes: tuple
    train: Dataset
    test: Dataset


@dataclass
class TaskStream:
    tasks: list
    classes_per_task: int
    input_dim: int
    total_classes: int

    def __len__(self):
        return len(self.tasks)

    def __iter__(self):
        return iter(self.tasks)


@dataclass(frozen=True)
class SyntheticSpec:
    num_classes: int = 10
    samples_per_class: int = 320
    input_dim: int = 16
    sigma: float = 0.1
    seed: int = 0
    test_samples_per_class: int = 100

    def __post_init__(self):
        if self.num_classes < 2:
            raise ParameterError(f'Need at least 2 classes, got {self.num_classes}')
        if self.sigma <= 0:
            raise ParameterError(f'Cluster spread must be positive, got {self.sigma}')
        if self.samples_per_class < 1 or self.input_dim < 1:
            raise ParameterError('samples_per_class and input_dim must be positive')


def _cluster_means(spec, rng):
    directions = rng.standard_normal((spec.num_classes, spec.input_dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    return 2.0 * directions


def _draw(spec, means, per_class, rng):
    labels = np.repeat(np.arange(spec.num_classes), per_class)
    inputs = means[labels] + spec.sigma * rng.standard_normal((len(labels), spec.input_dim))
    return Dataset(inputs, labels, spec.num_classes)


def make_synthetic(spec):
    """Isotropic Gaussian blob per class around a seeded mean on the radius-2 sphere."""
    rng = np.random.default_rng(spec.seed)
    return _draw(spec, _cluster_means(spec, rng), spec.samples_per_class, rng)


def make_synthetic_split(spec):
    """Train and held-out test sets drawn around the same class means."""
    rng = np.random.default_rng(spec.seed)
    means = _cluster_means(spec, rng)
    train = _draw(spec, means, spec.samples_per_class, rng)
    test = _draw(spec, means, spec.test_samples_per_class, rng)
    return train, test


def standardize(train, *others):
    """Zero-mean, unit-variance features using the training split's statistics."""
    mean = train.inputs.mean(axis=0)
    std = train.inputs.std(axis=0)
    std[std == 0] = 1.0
    scaled = [Dataset((d.inputs - mean) / std, d.labels, d.num_classes) for d in (train, *others)]
    return scaled if others else scaled[0]


def split_tasks(train, num_tasks, test=None):
    """Task t receives classes [t*C/T, (t+1)*C/T)."""
    total = train.num_classes
    if num_tasks < 1 or total % num_tasks:
        raise ParameterError(f'{total} classes cannot be split evenly into {num_tasks} tasks')
    per_task = total // num_tasks
    test = train if test is None else test

    tasks = []
    for t in range(num_tasks):
        classes = tuple(range(t * per_task, (t + 1) * per_task))
        tasks.append(Task(
            t + 1,
            classes,
            train.subset(np.isin(train.labels, classes)),
            test.subset(np.isin(test.labels, classes)),
        ))
    return TaskStream(tasks, per_task, train.input_dim, total)


def merge_tasks(tasks, index):
    """Union of several tasks' data, used for joint training."""
    def union(parts):
        return Dataset(
            np.concatenate([p.inputs for p in parts]),
            np.concatenate([p.labels for p in parts]),
            parts[0].num_classes,
        )
    classes = tuple(c for task in tasks for c in task.classes)
    return Task(index, classes, union([t.train for t in tasks]), union([t.test for t in tasks]))


def iterate_batches(dataset, batch_size, rng):
    """One seeded shuffle of the dataset, cut into consecutive batches."""
    order = rng.permutation(len(dataset))
    for start in range(0, len(order), batch_size):
        index = order[start:start + batch_size]
        yield dataset.inputs[index], dataset.labels[index]


def _open(path):
    path = str(path)
    return gzip.open(path, 'rb') if path.endswith('.gz') else open(path, 'rb')


def _read_header(raw, magic, dims, path):
    size = 4 * (1 + dims)
    if len(raw) < size:
        raise FormatError(f'Truncated IDX header in {path}', len(raw))
    found, *shape = struct.unpack_from(f'>{1 + dims}I', raw, 0)
    if found != magic:
        raise FormatError(f'Bad IDX magic 0x{found:08x} in {path}, expected 0x{magic:08x}', 0)
    return shape, size


def read_idx(images_path, labels_path, num_classes=10):
    """Image tensor + label vector in IDX format; pixels scaled to [0, 1]."""
    with _open(images_path) as f:
        raw_images = f.read()
    with _open(labels_path) as f:
        raw_labels = f.read()

    (count, rows, cols), offset = _read_header(raw_images, IDX_IMAGE_MAGIC, 3, images_path)
    expected = offset + count * rows * cols
    if len(raw_images) < expected:
        raise FormatError(f'Image data ends early in {images_path}', len(raw_images))
    pixels = np.frombuffer(raw_images, dtype=np.uint8, count=count * rows * cols, offset=offset)

    (label_count,), offset = _read_header(raw_labels, IDX_LABEL_MAGIC, 1, labels_path)
    if len(raw_labels) < offset + label_count:
        raise FormatError(f'Label data ends early in {labels_path}', len(raw_labels))
    labels = np.frombuffer(raw_labels, dtype=np.uint8, count=label_count, offset=offset).astype(np.int64)

    if label_count != count:
        raise ConsistencyError(f'{count} images but {label_count} labels')
    if label_count and labels.max() >= num_classes:
        raise ConsistencyError(f'Label {labels.max()} outside the {num_classes} declared classes')

    logger.info(f'Read {count} IDX examples of dimension {rows * cols} from {images_path}')
    inputs = pixels.reshape(count, rows * cols).astype(np.float64) / 255.0
    return Dataset(inputs, labels, num_classes)
