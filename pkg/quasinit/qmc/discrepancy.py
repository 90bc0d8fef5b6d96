__all__ = ['star_discrepancy']

import numpy as np

from .._typing import FloatSequence, FloatVector


def star_discrepancy(values: FloatVector | FloatSequence) -> float:
    """Exact one-dimensional star discrepancy of points in [0, 1).

    For sorted points ``x_(1) <= ... <= x_(n)`` this is
    ``max_i max(i/n - x_(i), x_(i) - (i-1)/n)``.
    """
    x = np.sort(np.asarray(values, dtype=np.float64).ravel())
    n = x.size
    if n == 0:
        raise ValueError("star discrepancy of an empty point set")
    i = np.arange(1, n + 1, dtype=np.float64)
    return float(max(np.max(i / n - x), np.max(x - (i - 1) / n)))
