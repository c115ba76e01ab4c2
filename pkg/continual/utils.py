import csv
import io
import logging
import os
import tempfile
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)


def atomic_write(path, data):
    """Write bytes or text to `path` through a temp file in the same directory + rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode('utf-8')
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f'.{path.name}.', suffix='.tmp')
    try:
        with os.fdopen(fd, 'wb') as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    logger.debug(f'Wrote {len(data)} bytes to {path}')
    return path


def csv_text(fieldnames, rows):
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=fieldnames, lineterminator='\n')
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return out.getvalue()


def mean_std(values):
    """Mean and sample standard deviation; std is None with fewer than two values."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return None, None
    std = float(values.std(ddof=1)) if values.size >= 2 else None
    return float(values.mean()), std


def parse_seed_list(text):
    seeds = [int(part) for part in str(text).replace(' ', '').split(',') if part]
    if not seeds:
        raise ValueError('At least one seed is required')
    return seeds


def format_mean_std(mean, std, scale=100.0):
    if mean is None:
        return '-'
    if std is None:
        return f'{mean * scale:.2f}'
    return f'{mean * scale:.2f} ± {std * scale:.2f}'
