__all__ = ['AccuracyTrace', 'evaluate', 'train', 'TrainConfig']

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import pandas as pd

from .._typing import FloatMatrix, FloatVector
from ..errors import NumericalDivergence
from .model import MLP
from .optim import Adam, init_state, SGD, step

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    optimizer: SGD | Adam = field(default_factory=Adam)
    epochs: int = 30
    batch_size: int = 64
    shuffle_seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError(
                f"expected epochs >= 1 and batch_size >= 1, "
                f"got {self.epochs} and {self.batch_size} instead"
            )


@dataclass
class AccuracyTrace:
    """Test accuracy per repetition (rows) and epoch (columns).

    Rows of failed repetitions keep the epochs they finished and NaN after that;
    the failure reason is kept in ``failures``.
    """

    values: FloatMatrix
    meta: dict = field(default_factory=dict)
    failures: dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError(
                f"expected a (repetitions, epochs) matrix, got shape {self.values.shape}"
            )
        finite = self.values[np.isfinite(self.values)]
        if finite.size and (finite.min() < 0 or finite.max() > 1):
            raise ValueError("accuracies must lie in [0, 1]")

    @property
    def repetitions(self) -> int:
        return self.values.shape[0]

    @property
    def epochs(self) -> int:
        return self.values.shape[1]

    @property
    def complete(self) -> FloatMatrix:
        """Rows of repetitions that ran every epoch."""
        return self.values[np.all(np.isfinite(self.values), axis=1)]

    def at_epoch(self, epoch: int) -> FloatVector:
        """Accuracies of complete repetitions at 1-based ``epoch``."""
        return self.complete[:, epoch - 1]

    def to_frame(self) -> pd.DataFrame:
        reps, epochs = np.meshgrid(
            np.arange(self.repetitions), np.arange(1, self.epochs + 1), indexing='ij'
        )
        return pd.DataFrame(
            {
                'repetition': reps.ravel(),
                'epoch': epochs.ravel(),
                'accuracy': self.values.ravel(),
            }
        )

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, meta: dict = None, failures=None):
        missing = {'repetition', 'epoch', 'accuracy'} - set(frame.columns)
        if missing:
            raise ValueError(f"trace table is missing columns {sorted(missing)}")
        wide = frame.pivot(index='repetition', columns='epoch', values='accuracy')
        wide = wide.sort_index().reindex(sorted(wide.columns), axis=1)
        return cls(wide.to_numpy(dtype=np.float64), dict(meta or {}), dict(failures or {}))

    @classmethod
    def from_rows(cls, rows: Sequence[FloatVector], epochs: int, meta: dict = None):
        values = np.full((len(rows), epochs), np.nan)
        for i, row in enumerate(rows):
            values[i, : len(row)] = row
        return cls(values, dict(meta or {}))


def evaluate(model: MLP, data) -> float:
    x, y = data
    return model.accuracy(x, y)


def train(model: MLP, train_data, test_data, cfg: TrainConfig, *, state=None) -> FloatVector:
    """Mini-batch training with a reshuffle before every epoch.

    The shuffle stream is ``RandomState(cfg.shuffle_seed)`` and nothing else
    draws from it. Returns the test accuracy recorded after each epoch.

    Raises
    ------
    NumericalDivergence
        If a batch loss is not finite. ``accuracies`` on the exception holds the
        epochs completed before it.
    """
    x_train, y_train = train_data
    n = len(x_train)
    rng = np.random.RandomState(cfg.shuffle_seed)
    params = model.params
    if state is None:
        state = init_state(cfg.optimizer, params)
    accuracies = []
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        for b, lo in enumerate(range(0, n, cfg.batch_size)):
            idx = order[lo : lo + cfg.batch_size]
            loss, grads = model.loss_and_grads(x_train[idx], y_train[idx])
            if not np.isfinite(loss):
                logger.warning("loss diverged at epoch %d batch %d", epoch, b)
                raise NumericalDivergence(epoch, b, accuracies)
            step(params, grads, state, cfg.optimizer)
        accuracies.append(evaluate(model, test_data))
        logger.debug("epoch %d/%d accuracy %.4f", epoch, cfg.epochs, accuracies[-1])
    return np.asarray(accuracies, dtype=np.float64)
