"""Cost of drawing initial weights.

For every source, distribution, dimension ``k`` and draw count ``N`` the
benchmark times a fresh source drawing ``N`` values, repeated ``repeats`` times,
and reports the median and quartiles in seconds. Uncached Sobol' draws build
all ``k`` leading coordinates of each point, so their cost grows with ``k``;
cached draws read a prebuilt table.
"""

__all__ = ['bench_draws', 'DEFAULT_COUNTS', 'DEFAULT_DIMENSIONS', 'format_duration', 'timed']

import functools
import logging
import math
import time
from typing import Callable, Sequence

import numpy as np
import pandas as pd

from ..qmc.sobol import SobolEngine
from ..sampling.distributions import Normal, sample, TruncatedNormal, Uniform
from ..sampling.sources import PseudoRandomSource, QuasiRandomSource

logger = logging.getLogger(__name__)

DEFAULT_COUNTS = (10, 100, 1000, 10000)
DEFAULT_DIMENSIONS = (1, 10, 100, 1000)
_DISTRIBUTIONS = {
    'uniform': Uniform(-1.0, 1.0),
    'normal': Normal(0.0, 1.0),
    'truncated_normal': TruncatedNormal(0.0, 1.0),
}


def format_duration(seconds: float) -> str:
    """Render ``seconds`` in the closest of s, ms, μs, ns and ps.

    >>> format_duration(0.0025)
    '2.500 ms'
    """
    if seconds <= 0:
        return f"{seconds:.3f} s"
    mag, unit = min(
        [(1, 's'), (1e-3, 'ms'), (1e-6, 'μs'), (1e-9, 'ns'), (1e-12, 'ps')],
        key=lambda x: abs(math.log10(x[0]) - math.log10(seconds)),
    )
    return f"{seconds / mag:.3f} {unit}"


class timed[**P, R]:
    """Log the wall time of each call at INFO, with or without a label."""

    def __init__(self, func: Callable[P, R] = None, *, label: str = None):
        self.func = func
        self.label = label
        if func is not None:
            functools.update_wrapper(self, func)

    def __call__(self, *args: P.args, **kwargs: P.kwargs) -> R:
        if self.func is None:
            self.func = args[0]
            functools.update_wrapper(self, self.func)
            return self
        start = time.perf_counter()
        try:
            return self.func(*args, **kwargs)
        finally:
            stop = time.perf_counter()
            logger.info(
                "%s finished in %s",
                self.label or self.func.__name__,
                format_duration(stop - start),
            )


def _time_once(make_source: Callable, spec, n: int) -> float:
    src = make_source()
    start = time.perf_counter()
    sample(src, spec, n)
    return time.perf_counter() - start


def bench_draws(
    dimensions: Sequence[int] = DEFAULT_DIMENSIONS,
    counts: Sequence[int] = DEFAULT_COUNTS,
    distributions: Sequence[str] = tuple(_DISTRIBUTIONS),
    *,
    repeats: int = 5,
    engine: SobolEngine = None,
) -> pd.DataFrame:
    """Time draws for every (source, cached, distribution, k, N) combination.

    Pseudorandom rows use ``k`` as the seed and have ``cached = False`` only.
    """
    if repeats < 1:
        raise ValueError(f"expected repeats >= 1, got {repeats} instead")
    unknown = set(distributions) - _DISTRIBUTIONS.keys()
    if unknown:
        raise ValueError(f"unknown distributions {sorted(unknown)}")
    dimensions, counts = sorted(dimensions), sorted(counts)
    plain = engine or SobolEngine(max(dimensions))
    cached = SobolEngine(plain.dimensions, plain.table, cache_budget=plain.cache_budget)
    cached.build_cache(max(counts), max(dimensions))

    rows = []
    for name in distributions:
        spec = _DISTRIBUTIONS[name]
        for k in dimensions:
            variants = [
                ('qrng', False, lambda k=k: QuasiRandomSource(plain, k)),
                ('qrng', True, lambda k=k: QuasiRandomSource(cached, k)),
                ('prng', False, lambda k=k: PseudoRandomSource(k)),
            ]
            for n in counts:
                for source, is_cached, make in variants:
                    times = [_time_once(make, spec, n) for _ in range(repeats)]
                    q1, med, q3 = np.percentile(times, [25, 50, 75])
                    rows.append(
                        {
                            'source': source,
                            'cached': is_cached,
                            'distribution': name,
                            'k': k,
                            'n': n,
                            'median_s': med,
                            'q1_s': q1,
                            'q3_s': q3,
                        }
                    )
                logger.debug("%s k=%d n=%d done", name, k, n)
    return pd.DataFrame(rows)
