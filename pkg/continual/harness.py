"""Multi-seed experiment runs, report files and the comparison table."""
import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from django.conf import settings

from .checkpoint import checkpoint_load, checkpoint_save
from .data import SyntheticSpec, make_synthetic_split, read_idx, split_tasks, standardize
from .exceptions import ConsistencyError, E2NetError, ParameterError
from .metrics import AccuracyMatrix, average_accuracy, forgetting
from .schedule import build_schedule
from .trainer import JOINT, ContinualLearner, TrainConfig
from .utils import atomic_write, csv_text, format_mean_std, mean_std

logger = logging.getLogger(__name__)

SYNTHETIC = 'synthetic'
IDX = 'idx'

# seeds an empty experiment file runs, matching the ten-run reporting protocol
REFERENCE_SEEDS = tuple(range(10))

REPORT_FILE = 'report.csv'
REPORT_COLUMNS = ['method', 'seed', 'task', 'acc_class_il', 'acc_task_il', 'forgetting', 'wall_ms']
EPOCH_COLUMNS = ['method', 'seed', 'task', 'epoch', 'ce', 'rnd', 'replay']
BOUNDARY_COLUMNS = ['method', 'seed', 'boundary', 'arch', 'score', 'param_ratio']
SCHEDULE_COLUMNS = ['t', 's_raw', 'g_real', 'g_groups']


@dataclass(frozen=True)
class DataConfig:
    source: str = SYNTHETIC
    num_classes: int = 10
    samples_per_class: int = 320
    test_samples_per_class: int = 100
    input_dim: int = 16
    sigma: float = 0.1
    seed: int = 0
    train_images: str = ''
    train_labels: str = ''
    test_images: str = ''
    test_labels: str = ''
    standardize: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    train: TrainConfig = field(default_factory=TrainConfig)
    data: DataConfig = field(default_factory=DataConfig)
    seeds: tuple = (0,)
    output_dir: str = None
    workers: int = 1
    timing: bool = True
    checkpoint: bool = False
    resume: bool = False
    verify: tuple = ()

    def as_dict(self):
        return asdict(self)


def build_stream(data, num_tasks):
    if data.source == SYNTHETIC:
        train, test = make_synthetic_split(SyntheticSpec(
            num_classes=data.num_classes,
            samples_per_class=data.samples_per_class,
            input_dim=data.input_dim,
            sigma=data.sigma,
            seed=data.seed,
            test_samples_per_class=data.test_samples_per_class,
        ))
    elif data.source == IDX:
        train = read_idx(data.train_images, data.train_labels, data.num_classes)
        if data.test_images:
            test = read_idx(data.test_images, data.test_labels, data.num_classes)
        else:
            test = train
    else:
        raise ParameterError(f'Unknown data source {data.source!r}')

    if data.standardize:
        train, test = standardize(train, test)
    return split_tasks(train, num_tasks, test)


@dataclass
class SeedResult:
    method: str
    seed: int
    class_il: list = field(default_factory=list)
    task_il: list = field(default_factory=list)
    wall_ms: list = field(default_factory=list)
    records: list = field(default_factory=list)
    error: str = None

    @property
    def failed(self):
        return self.error is not None

    def per_task(self):
        """(t, ACC class-IL, ACC task-IL, forgetting) for every finished task."""
        rows = []
        for t in range(1, len(self.class_il) + 1):
            rows.append((
                t,
                average_accuracy(_matrix(self.class_il), t),
                average_accuracy(_matrix(self.task_il), t),
                forgetting(_matrix(self.class_il), t),
            ))
        return rows

    @property
    def final(self):
        return self.per_task()[-1] if self.class_il else None


def _matrix(rows):
    return AccuracyMatrix.from_list(len(rows), rows)


@dataclass
class RunReport:
    method: str
    results: list
    schedule: list
    acc: tuple = (None, None)
    acc_task_il: tuple = (None, None)
    forgetting: tuple = (None, None)
    wall_ms: float = 0.0

    @property
    def failures(self):
        return [r for r in self.results if r.failed]

    @property
    def succeeded(self):
        return [r for r in self.results if not r.failed]

    def summary(self):
        return {
            'method': self.method,
            'seeds': [r.seed for r in self.succeeded],
            'failed_seeds': [r.seed for r in self.failures],
            'acc_class_il': {'mean': self.acc[0], 'std': self.acc[1]},
            'acc_task_il': {'mean': self.acc_task_il[0], 'std': self.acc_task_il[1]},
            'forgetting': {'mean': self.forgetting[0], 'std': self.forgetting[1]},
            'wall_ms': self.wall_ms,
        }


def run_seed(config, seed, stream=None):
    """Train one seed end to end; errors are captured on the result."""
    train = config.train
    result = SeedResult(train.method, seed)
    try:
        stream = stream or build_stream(config.data, train.num_tasks)
        learner, on_epoch = _learner_for(config, seed, stream)
        learner.fit(stream, on_epoch)
    except E2NetError as exc:
        logger.error(f'Seed {seed} ({train.method}) failed: {exc}')
        result.error = str(exc)
        return result

    result.class_il = learner.class_il.to_list()
    result.task_il = learner.task_il.to_list()
    result.wall_ms = learner.wall_ms if config.timing else [0.0] * len(learner.wall_ms)
    result.records = learner.records
    return result


def _learner_for(config, seed, stream):
    if not (config.checkpoint and config.output_dir):
        return ContinualLearner(config.train, stream.input_dim, stream.total_classes, seed), None

    path = Path(config.output_dir) / 'checkpoints' / f'seed-{seed}.ckpt'
    if config.resume and path.exists():
        learner = checkpoint_load(path)
        if learner.config != config.train:
            raise ConsistencyError(f'Checkpoint {path} was written with a different training config')
    else:
        learner = ContinualLearner(config.train, stream.input_dim, stream.total_classes, seed)
    return learner, lambda state: checkpoint_save(state, path)


def run(config):
    """Execute every seed, aggregate, and write report files when an output directory is set."""
    train = config.train
    stream = build_stream(config.data, train.num_tasks)
    logger.info(
        f'Running {train.method} over seeds {list(config.seeds)}: {len(stream)} tasks, '
        f'{stream.classes_per_task} classes each, input dimension {stream.input_dim}'
    )

    if config.workers > 1 and len(config.seeds) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = [pool.submit(run_seed, config, seed, stream) for seed in config.seeds]
            results = [future.result() for future in futures]
    else:
        results = [run_seed(config, seed, stream) for seed in config.seeds]

    report = aggregate(train, results)
    if config.output_dir:
        write_report(report, config)
    check_joint_floor(report)
    for failure in report.failures:
        logger.warning(f'Seed {failure.seed} did not finish: {failure.error}')
    return report


def aggregate(train, results):
    finals = [r.final for r in results if not r.failed and r.final]
    return RunReport(
        method=train.method,
        results=results,
        schedule=build_schedule(train.num_tasks, train.groups).table(),
        acc=mean_std([f[1] for f in finals]),
        acc_task_il=mean_std([f[2] for f in finals]),
        forgetting=mean_std([f[3] for f in finals]),
        wall_ms=sum(sum(r.wall_ms) for r in results if not r.failed),
    )


def check_joint_floor(report, floor=None):
    """False, with a warning, when a joint run's mean ACC falls under the configured floor."""
    if report.method != JOINT or report.acc[0] is None:
        return True
    if floor is None:
        floor = settings.E2NET_SETTINGS['JOINT_ACCURACY_FLOOR']
    if report.acc[0] < floor:
        logger.warning(f'Joint training reached ACC {report.acc[0]:.4f}, below the {floor:.2f} floor')
        return False
    return True


def report_rows(report):
    rows = []
    for result in report.succeeded:
        for (t, acc, acc_til, f), wall in zip(result.per_task(), result.wall_ms):
            rows.append({
                'method': result.method, 'seed': result.seed, 'task': t,
                'acc_class_il': acc, 'acc_task_il': acc_til, 'forgetting': f, 'wall_ms': wall,
            })
    return rows


def write_report(report, config):
    names = settings.E2NET_SETTINGS
    out = Path(config.output_dir)
    atomic_write(out / names['REPORT_FILE'], csv_text(REPORT_COLUMNS, report_rows(report)))

    epochs, boundaries = [], []
    for result in report.succeeded:
        for record in result.records:
            base = {'method': result.method, 'seed': result.seed}
            if record['kind'] == 'epoch':
                epochs.append({**base, **{k: record[k] for k in EPOCH_COLUMNS[2:]}})
            elif record['kind'] == 'boundary':
                boundaries.append({**base, **{k: record[k] for k in BOUNDARY_COLUMNS[2:]}})
    atomic_write(out / names['EPOCHS_FILE'], csv_text(EPOCH_COLUMNS, epochs))
    atomic_write(out / names['BOUNDARIES_FILE'], csv_text(BOUNDARY_COLUMNS, boundaries))
    atomic_write(out / names['SCHEDULE_FILE'], csv_text(SCHEDULE_COLUMNS, report.schedule))

    summary = {**report.summary(), 'config': config.as_dict()}
    if not config.timing:
        summary['wall_ms'] = 0.0
    atomic_write(out / names['SUMMARY_FILE'], json.dumps(summary, indent=2, sort_keys=True) + '\n')
    logger.info(f'Report for {report.method} written to {out}')


def load_report_rows(directory):
    """Every report CSV under `directory`, tagged with its run label."""
    directory = Path(directory)
    rows = []
    for path in sorted(directory.rglob(REPORT_FILE)):
        label = str(path.parent.relative_to(directory)) if path.parent != directory else ''
        with open(path, newline='') as f:
            for row in csv.DictReader(f):
                rows.append({**row, 'run': label})
    return rows


def comparison_table(rows):
    """Final-task ACC and forgetting per run, mean ± std over seeds."""
    finals = {}
    for row in rows:
        key = (row['run'], row['method'], row['seed'])
        if key not in finals or int(row['task']) > int(finals[key]['task']):
            finals[key] = row

    grouped = {}
    for (run_label, method, _), row in finals.items():
        grouped.setdefault((run_label, method), []).append(row)

    table = []
    for (run_label, method), group in sorted(grouped.items()):
        table.append({
            'run': run_label or '.',
            'method': method,
            'seeds': len(group),
            'class_il': format_mean_std(*mean_std([float(r['acc_class_il']) for r in group])),
            'task_il': format_mean_std(*mean_std([float(r['acc_task_il']) for r in group])),
            'forgetting': format_mean_std(*mean_std([float(r['forgetting']) for r in group])),
            'wall_s': f'{sum(float(r["wall_ms"]) for r in group) / 1000.0:.1f}',
        })
    return table
