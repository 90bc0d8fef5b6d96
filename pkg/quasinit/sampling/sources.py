__all__ = [
    'derive_seed',
    'mt19937_next',
    'mt19937_uint32',
    'PRNG_CLAMP',
    'PseudoRandomSource',
    'QuasiRandomSource',
    'RandomSource',
    'splitmix64',
]

import logging
from typing import Literal, Protocol, runtime_checkable

import numpy as np

from .._typing import FloatVector
from ..qmc.sobol import SobolEngine

logger = logging.getLogger(__name__)

PRNG_CLAMP = 2.0**-33
_MASK64 = (1 << 64) - 1


@runtime_checkable
class RandomSource(Protocol):
    kind: Literal['qrng', 'prng']
    draws_emitted: int

    def uniform(self, n: int) -> FloatVector: ...

    def open_uniform(self, n: int) -> FloatVector: ...


class QuasiRandomSource:
    """Base draws from dimension ``k`` of a Sobol' engine, starting at its head.

    The source keeps its own position, so several sources may read the same
    engine (and its cache) without disturbing one another.
    """

    kind = 'qrng'

    def __init__(self, engine: SobolEngine, dimension: int):
        engine._check(dimension)
        self.engine = engine
        self.dimension = dimension
        self.draws_emitted = 0

    def __repr__(self):
        return (
            f"{type(self).__name__}(dimension={self.dimension}, "
            f"draws_emitted={self.draws_emitted})"
        )

    @property
    def identity(self) -> int:
        return self.dimension

    def uniform(self, n: int) -> FloatVector:
        u = self.engine.values(self.dimension, self.draws_emitted + 1, n)
        self.draws_emitted += n
        return u

    # first-element skip already keeps every value inside (0, 1)
    open_uniform = uniform


class PseudoRandomSource:
    """MT19937 baseline seeded with the canonical ``init_genrand`` recurrence."""

    kind = 'prng'

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFF
        self.state = np.random.RandomState(self.seed)
        self.draws_emitted = 0

    def __repr__(self):
        return f"{type(self).__name__}(seed={self.seed}, draws_emitted={self.draws_emitted})"

    @property
    def identity(self) -> int:
        return self.seed

    def uniform(self, n: int) -> FloatVector:
        """53-bit doubles in [0, 1)."""
        u = self.state.random_sample(n)
        self.draws_emitted += n
        return u

    def open_uniform(self, n: int) -> FloatVector:
        """Doubles clamped to ``[2**-33, 1 - 2**-33]`` so inverse CDFs stay finite."""
        return np.clip(self.uniform(n), PRNG_CLAMP, 1.0 - PRNG_CLAMP)


def mt19937_next(state: np.random.RandomState | PseudoRandomSource) -> float:
    """Next double ``((a >> 5) * 2**26 + (b >> 6)) / 2**53`` from two 32-bit outputs.

    Examples
    --------
    >>> mt19937_next(np.random.RandomState(42))
    0.3745401188473625
    """
    if isinstance(state, PseudoRandomSource):
        return float(state.uniform(1)[0])
    return float(state.random_sample())


def mt19937_uint32(state: np.random.RandomState, n: int = 1) -> np.ndarray:
    """Raw tempered 32-bit outputs of the generator."""
    return state.randint(0, 1 << 32, size=n, dtype=np.uint32)


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, *keys: int | str) -> int:
    """Fold ``keys`` into ``master_seed`` with splitmix64 and return a 32-bit seed.

    String keys are folded by their UTF-8 bytes, so ``derive_seed(s, r, 'shuffle')``
    and ``derive_seed(s, r, 'layers')`` give unrelated streams for repetition ``r``.
    """
    h = splitmix64(int(master_seed) & _MASK64)
    for key in keys:
        if isinstance(key, str):
            key = int.from_bytes(key.encode(), 'little') & _MASK64
        h = splitmix64(h ^ (int(key) & _MASK64))
    return h >> 32
