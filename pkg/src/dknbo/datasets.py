"""In-memory task data: an ordered sequence of (r, J) evaluations."""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch


@dataclass
class TaskDataset:
    """Evaluations collected on one source or target task.

    ``r`` has shape ``(n, n_r)`` and ``J`` shape ``(n,)``. ``theta`` records
    the generating system parameters for bookkeeping only; nothing in the
    learning code reads it.
    """

    task_id: str
    r: np.ndarray = field(default_factory=lambda: np.zeros((0, 1)))
    J: np.ndarray = field(default_factory=lambda: np.zeros(0))
    theta: tuple = None

    def __post_init__(self):
        self.r = np.array(self.r, dtype=np.float64, ndmin=1)
        if self.r.ndim == 1:
            self.r = self.r[:, None]
        self.J = np.array(self.J, dtype=np.float64).reshape(-1)
        if self.r.shape[0] != self.J.shape[0]:
            raise DimensionMismatch(
                f"{self.r.shape[0]} inputs but {self.J.shape[0]} labels")
        if self.theta is not None:
            self.theta = tuple(float(t) for t in self.theta)

    def __len__(self):
        return self.J.shape[0]

    @property
    def n_r(self):
        return self.r.shape[1]

    def append(self, r, J):
        r = np.asarray(r, dtype=np.float64).reshape(1, -1)
        if len(self) and r.shape[1] != self.n_r:
            raise DimensionMismatch(f"expected r of width {self.n_r}, got {r.shape[1]}")
        base = self.r if len(self) else np.zeros((0, r.shape[1]))
        return TaskDataset(self.task_id, np.vstack([base, r]),
                           np.append(self.J, float(J)), self.theta)

    def points(self):
        return [(ri.copy(), float(ji)) for ri, ji in zip(self.r, self.J)]

    def __eq__(self, other):
        if not isinstance(other, TaskDataset):
            return NotImplemented
        return (self.task_id == other.task_id and self.theta == other.theta
                and self.r.shape == other.r.shape
                and np.array_equal(self.r, other.r) and np.array_equal(self.J, other.J))
