import numpy as np

from .exceptions import ParameterError, StateError


class AccuracyMatrix:
    """Lower-triangular R[t][tau]: accuracy on task tau after training task t (1-based)."""

    def __init__(self, num_tasks):
        self.num_tasks = num_tasks
        self.rows = []

    def __len__(self):
        return len(self.rows)

    def record(self, t, row):
        if t != len(self.rows) + 1:
            raise StateError(f'Row {t} recorded out of order ({len(self.rows)} rows present)')
        if len(row) != t:
            raise StateError(f'Row {t} needs {t} accuracies, got {len(row)}')
        if any(not 0.0 <= acc <= 1.0 for acc in row):
            raise ParameterError(f'Accuracies must lie in [0, 1]: {row}')
        self.rows.append([float(acc) for acc in row])

    def row(self, t):
        if not 1 <= t <= len(self.rows):
            raise StateError(f'Row {t} is not complete ({len(self.rows)} rows recorded)')
        return self.rows[t - 1]

    def to_list(self):
        return [list(row) for row in self.rows]

    @classmethod
    def from_list(cls, num_tasks, rows):
        matrix = cls(num_tasks)
        for t, row in enumerate(rows, start=1):
            matrix.record(t, row)
        return matrix


def average_accuracy(matrix, t):
    return float(np.mean(matrix.row(t)))


def forgetting(matrix, t):
    """Mean over past tasks of best-so-far accuracy minus current accuracy; 0 for t = 1.

    The best-so-far maximum for task j runs over rows j..t, the current row
    included. Keeping row t in the max is what bounds every drop, and so F_t,
    below by zero; a max over rows before t alone could go negative when a
    task improves later.
    """
    current = matrix.row(t)
    if t == 1:
        return 0.0
    drops = []
    for j in range(1, t):
        best = max(matrix.row(i)[j - 1] for i in range(j, t + 1))
        drops.append(best - current[j - 1])
    return float(np.mean(drops))
