__all__ = ['epoch_summary', 'EpochSummary', 'median_iqr', 'MedianIQR']

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .._typing import FloatArray, FloatSequence, FloatVector
from ..errors import EmptyInput


class MedianIQR(NamedTuple):
    median: float
    iqr: float


def median_iqr(samples: FloatVector | FloatSequence) -> MedianIQR:
    """Median and interquartile range with linearly interpolated quartiles.

    Quartiles use ``h = (n - 1) p`` between order statistics (R's type 7).

    Examples
    --------
    >>> median_iqr([1, 2, 3, 4])
    MedianIQR(median=2.5, iqr=1.5)
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size == 0:
        raise EmptyInput("median/IQR of an empty sample")
    q1, med, q3 = np.percentile(x, [25, 50, 75], method='linear')
    return MedianIQR(float(med), float(q3 - q1))


@dataclass(frozen=True)
class EpochSummary:
    median: FloatVector
    iqr: FloatVector
    repetitions: int

    @property
    def epochs(self) -> int:
        return len(self.median)


def epoch_summary(values: FloatArray) -> EpochSummary:
    """Per-epoch median and IQR over the rows of a (repetitions, epochs) matrix.

    Only rows without NaN take part, so every epoch is summarized over the same
    repetition set.
    """
    values = np.asarray(values, dtype=np.float64)
    rows = values[np.all(np.isfinite(values), axis=1)]
    if rows.shape[0] == 0:
        raise EmptyInput("no complete repetitions to summarize")
    q1, med, q3 = np.percentile(rows, [25, 50, 75], axis=0, method='linear')
    return EpochSummary(med, q3 - q1, rows.shape[0])
