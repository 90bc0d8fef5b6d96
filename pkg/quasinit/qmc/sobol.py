__all__ = ['build_cache', 'DEFAULT_CACHE_BUDGET', 'SobolEngine', 'sobol_draw']

import logging

import numpy as np

from .._typing import FloatVector, Uint32Matrix, Uint32Vector
from ..errors import CacheTooLarge, DimensionOutOfRange
from .directions import BIT_WIDTH, DirectionNumberTable, load_direction_table

logger = logging.getLogger(__name__)

DEFAULT_CACHE_BUDGET = 256 * 1024**2
_SCALE = 1.0 / (1 << BIT_WIDTH)


# dimensions walked together on the uncached path; bounds working memory to n x _BLOCK
_BLOCK = 64


def _transitions(start: int, n: int) -> np.ndarray:
    """Direction column flipped on the step into each of points ``start .. start+n-1``.

    Gray code changes bit ``ctz(i)`` between points ``i-1`` and ``i``.
    """
    idx = np.arange(start, start + n, dtype=np.uint64)
    low = idx & (~idx + np.uint64(1))
    return np.bitwise_count(low - np.uint64(1)).astype(np.intp)


def _walk(rows: Uint32Matrix, start: int, cols: np.ndarray) -> Uint32Matrix:
    """Integers of points ``start ..`` for each direction row, shape ``(len(rows), n)``.

    The stream before ``start`` is the XOR of the columns selected by the bits of
    ``gray(start - 1)``; every later point is one XOR away from its predecessor.
    """
    prev = start - 1
    gray = prev ^ (prev >> 1)
    steps = rows[:, cols]
    for b in range(gray.bit_length()):
        if (gray >> b) & 1:
            steps[:, 0] ^= rows[:, b]
    return np.bitwise_xor.accumulate(steps, axis=1)


def _gray_points(directions: Uint32Matrix, start: int, n: int) -> Uint32Matrix:
    """Integers of points ``start .. start+n-1``, one column per dimension."""
    return np.ascontiguousarray(_walk(directions, start, _transitions(start, n)).T)


def _gray_column(directions: Uint32Matrix, k: int, start: int, n: int) -> Uint32Vector:
    """Integers of dimension ``k`` for points ``start .. start+n-1``.

    Points are generated whole: coordinates ``1..k`` are walked in blocks of
    ``_BLOCK`` dimensions and only the last one is kept.
    """
    cols = _transitions(start, n)
    for lo in range(0, k, _BLOCK):
        block = _walk(directions[lo : min(lo + _BLOCK, k)], start, cols)
    return block[-1].copy()


class SobolEngine:
    """Per-dimension Sobol' streams over a direction table.

    Every dimension ``k`` is an independent stream whose first element (always 0)
    is skipped, so the n-th value handed out is point ``n`` of the sequence.
    Generation is point-wise: producing values of dimension ``k`` builds the first
    ``k`` coordinates of each point, which is what the optional cache amortizes.

    An engine is single-owner mutable state. A built cache is read-only and can be
    shared with other readers.
    """

    def __init__(
        self,
        dimensions: int = None,
        table: DirectionNumberTable = None,
        *,
        cache_budget: int = DEFAULT_CACHE_BUDGET,
    ):
        self.table = table if table is not None else load_direction_table()
        if dimensions is None:
            dimensions = self.table.max_dimension
        if not 1 <= dimensions <= self.table.max_dimension:
            raise DimensionOutOfRange(dimensions, self.table.max_dimension)
        self.dimensions = dimensions
        self.bit_width = BIT_WIDTH
        self.cache_budget = cache_budget
        self.counter = np.zeros(dimensions + 1, dtype=np.int64)
        self.state = np.zeros(dimensions + 1, dtype=np.uint32)
        self.cache: Uint32Matrix | None = None

    def __repr__(self):
        cached = None if self.cache is None else self.cache.shape
        return f"{type(self).__name__}(dimensions={self.dimensions}, cache={cached})"

    def _check(self, k: int):
        if not 1 <= k <= self.dimensions:
            raise DimensionOutOfRange(k, self.dimensions)

    def integers(self, k: int, start: int, n: int) -> Uint32Vector:
        """Fixed-point integers of points ``start .. start+n-1`` of dimension ``k``.

        Does not touch the stream position. ``start`` is 1 for the first value
        after the skipped zero.
        """
        self._check(k)
        if n <= 0:
            return np.empty(0, dtype=np.uint32)
        if start < 1 or start + n - 1 >= 1 << BIT_WIDTH:
            raise ValueError(
                f"expected points within [1, 2**{BIT_WIDTH}), "
                f"got [{start}, {start + n - 1}] instead"
            )
        out = np.empty(n, dtype=np.uint32)
        filled = 0
        if self.cache is not None and k <= self.cache.shape[1]:
            hi = min(start + n - 1, self.cache.shape[0])
            if hi >= start:
                filled = hi - start + 1
                out[:filled] = self.cache[start - 1 : hi, k - 1]
        if filled < n:
            directions = self.table.direction_matrix(k)
            out[filled:] = _gray_column(directions, k, start + filled, n - filled)
        return out

    def values(self, k: int, start: int, n: int) -> FloatVector:
        return self.integers(k, start, n) * _SCALE

    def draw(self, k: int, n: int) -> FloatVector:
        """Next ``n`` values of dimension ``k``; repeated calls continue the stream."""
        self._check(k)
        if n < 1:
            raise ValueError(f"expected count >= 1, got {n} instead")
        ints = self.integers(k, int(self.counter[k]) + 1, n)
        self.counter[k] += n
        self.state[k] = ints[-1]
        return ints * _SCALE

    def reset(self, k: int = None):
        if k is None:
            self.counter[:] = 0
            self.state[:] = 0
        else:
            self._check(k)
            self.counter[k] = 0
            self.state[k] = 0

    def build_cache(self, n_max: int, d: int) -> Uint32Matrix:
        if n_max < 1:
            raise ValueError(f"expected n_max >= 1, got {n_max} instead")
        self._check(d)
        requested = n_max * d * np.dtype(np.uint32).itemsize
        if requested > self.cache_budget:
            raise CacheTooLarge(requested, self.cache_budget)
        cache = _gray_points(self.table.direction_matrix(d), 1, n_max)
        cache.setflags(write=False)
        self.cache = cache
        logger.debug("built Sobol' cache of %d points x %d dimensions", n_max, d)
        return cache


def sobol_draw(engine: SobolEngine, dimension: int, count: int) -> FloatVector:
    """Draw ``count`` values from dimension ``dimension`` of ``engine``.

    Examples
    --------
    >>> sobol_draw(SobolEngine(2), 1, 7).tolist()
    [0.5, 0.75, 0.25, 0.375, 0.875, 0.625, 0.125]
    """
    return engine.draw(dimension, count)


def build_cache(engine: SobolEngine, n_max: int, d: int) -> Uint32Matrix:
    """Precompute an ``n_max x d`` table of points served to later draws.

    Draws for ``k <= d`` and points ``<= n_max`` read the table; anything past it
    is generated on demand, and both paths yield the same integers.

    Raises
    ------
    CacheTooLarge
        If ``n_max * d`` 32-bit integers exceed ``engine.cache_budget`` bytes.
    """
    return engine.build_cache(n_max, d)
