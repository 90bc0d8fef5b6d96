__all__ = [
    'assign_layer_seeds',
    'Category',
    'initialize',
    'InitializerKind',
    'InitializerSpec',
    'orthogonal_init',
    'resolve_params',
    'TensorShape',
    'WeightTensor',
]

import logging
import math
from dataclasses import dataclass, field
from enum import StrEnum
from functools import cached_property

import numpy as np

from ._typing import FloatArray, IntSequence
from .errors import DimensionBudgetExceeded, RankTooLow
from .qmc.directions import MAX_DIMENSION
from .sampling.distributions import (
    DistributionSpec,
    Normal,
    sample,
    sample_normal,
    TruncatedNormal,
    Uniform,
)
from .sampling.sources import RandomSource

logger = logging.getLogger(__name__)


class Category(StrEnum):
    SHAPE_AGNOSTIC = 'shape_agnostic'
    SHAPE_DEPENDENT = 'shape_dependent'
    ORTHOGONAL = 'orthogonal'


class InitializerKind(StrEnum):
    GLOROT_UNIFORM = 'glorot_uniform'
    GLOROT_NORMAL = 'glorot_normal'
    HE_UNIFORM = 'he_uniform'
    HE_NORMAL = 'he_normal'
    LECUN_UNIFORM = 'lecun_uniform'
    LECUN_NORMAL = 'lecun_normal'
    ORTHOGONAL = 'orthogonal'
    RANDOM_UNIFORM = 'random_uniform'
    RANDOM_NORMAL = 'random_normal'
    TRUNCATED_NORMAL = 'truncated_normal'

    @property
    def category(self) -> Category:
        if self is InitializerKind.ORTHOGONAL:
            return Category.ORTHOGONAL
        if self.name.startswith(('RANDOM_', 'TRUNCATED_')):
            return Category.SHAPE_AGNOSTIC
        return Category.SHAPE_DEPENDENT


_DEFAULT_PARAMS: dict[InitializerKind, DistributionSpec] = {
    InitializerKind.RANDOM_UNIFORM: Uniform(-0.05, 0.05),
    InitializerKind.RANDOM_NORMAL: Normal(0.0, 0.05),
    InitializerKind.TRUNCATED_NORMAL: TruncatedNormal(0.0, 0.05),
}


@dataclass(frozen=True)
class TensorShape:
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 1 for d in dims):
            raise ValueError(f"expected positive dimensions, got {self.dims} instead")
        object.__setattr__(self, 'dims', dims)

    @classmethod
    def of(cls, *dims: int | IntSequence) -> 'TensorShape':
        if len(dims) == 1 and not isinstance(dims[0], int):
            dims = tuple(dims[0])
        return cls(tuple(dims))

    @property
    def size(self) -> int:
        return math.prod(self.dims)

    @property
    def receptive_field(self) -> int:
        return math.prod(self.dims[:-2]) if len(self.dims) > 2 else 1

    @property
    def fan_in(self) -> int:
        if len(self.dims) == 1:
            return self.dims[0]
        return self.receptive_field * self.dims[-2]

    @property
    def fan_out(self) -> int:
        if len(self.dims) == 1:
            return self.dims[0]
        return self.receptive_field * self.dims[-1]


@dataclass(frozen=True)
class InitializerSpec:
    """One of the ten initializer kinds.

    ``params`` overrides the stored distribution of a shape-agnostic kind;
    ``gain`` only applies to :attr:`InitializerKind.ORTHOGONAL`.
    """

    kind: InitializerKind
    params: DistributionSpec | None = None
    gain: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, 'kind', InitializerKind(self.kind))
        if self.params is not None and self.category is not Category.SHAPE_AGNOSTIC:
            raise ValueError(
                f"{self.kind} derives its parameters from the tensor shape; "
                f"got explicit params {self.params!r}"
            )
        if self.params is None and self.kind in _DEFAULT_PARAMS:
            object.__setattr__(self, 'params', _DEFAULT_PARAMS[self.kind])

    @property
    def category(self) -> Category:
        return self.kind.category


@dataclass
class WeightTensor:
    shape: TensorShape
    values: FloatArray
    source_kind: str
    source_dimension: int = None
    seed: int = None
    distribution: DistributionSpec = field(default=None, repr=False)

    def __post_init__(self):
        if self.values.size != self.shape.size:
            raise ValueError(
                f"expected {self.shape.size} values for shape {self.shape.dims}, "
                f"got {self.values.size} instead"
            )

    @cached_property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))


def resolve_params(spec: InitializerSpec, shape: TensorShape) -> DistributionSpec:
    """Distribution behind ``spec`` for a tensor of ``shape``.

    Examples
    --------
    >>> resolve_params(InitializerSpec('he_normal'), TensorShape((32, 32)))
    TruncatedNormal(mu=0.0, sigma=0.25)
    >>> resolve_params(InitializerSpec('random_uniform'), TensorShape((3, 7)))
    Uniform(a=-0.05, b=0.05)
    """
    n_in, n_out = shape.fan_in, shape.fan_out
    match spec.kind:
        case InitializerKind.GLOROT_UNIFORM:
            limit = math.sqrt(6.0 / (n_in + n_out))
            return Uniform(-limit, limit)
        case InitializerKind.GLOROT_NORMAL:
            return TruncatedNormal(0.0, math.sqrt(2.0 / (n_in + n_out)))
        case InitializerKind.HE_UNIFORM:
            limit = math.sqrt(6.0 / n_in)
            return Uniform(-limit, limit)
        case InitializerKind.HE_NORMAL:
            return TruncatedNormal(0.0, math.sqrt(2.0 / n_in))
        case InitializerKind.LECUN_UNIFORM:
            limit = math.sqrt(3.0 / n_in)
            return Uniform(-limit, limit)
        case InitializerKind.LECUN_NORMAL:
            return TruncatedNormal(0.0, math.sqrt(1.0 / n_in))
        case InitializerKind.ORTHOGONAL:
            return Normal(0.0, 1.0)
    return spec.params


def _describe(src: RandomSource) -> dict:
    if src.kind == 'qrng':
        return {'source_kind': 'qrng', 'source_dimension': src.dimension}
    return {'source_kind': 'prng', 'seed': src.seed}


def orthogonal_init(shape: TensorShape, g: float, src: RandomSource) -> WeightTensor:
    """Orthogonal matrix from the QR decomposition of a Normal(0, 1) draw.

    Leading dimensions are flattened into rows. The decomposition runs on the
    taller orientation, Q's columns take the signs of diag(R), and a matrix with
    fewer rows than columns comes back with orthonormal rows.
    """
    if len(shape.dims) < 2:
        raise RankTooLow(f"orthogonal init needs rank >= 2, got shape {shape.dims}")
    rows, cols = math.prod(shape.dims[:-1]), shape.dims[-1]
    flat = sample_normal(src, Normal(0.0, 1.0), rows * cols).reshape(rows, cols)
    if rows < cols:
        flat = flat.T
    q, r = np.linalg.qr(flat, mode='reduced')
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    q = q * signs
    if rows < cols:
        q = q.T
    values = (g * q).reshape(shape.dims)
    return WeightTensor(
        shape, values, distribution=Normal(0.0, 1.0), **_describe(src)
    )


def initialize(spec: InitializerSpec, shape: TensorShape, src: RandomSource) -> WeightTensor:
    """Fill a tensor of ``shape`` with ``product(dims)`` draws from ``src``, row-major."""
    if spec.kind is InitializerKind.ORTHOGONAL:
        return orthogonal_init(shape, spec.gain, src)
    dist = resolve_params(spec, shape)
    values = sample(src, dist, shape.size).reshape(shape.dims)
    tensor = WeightTensor(shape, values, distribution=dist, **_describe(src))
    logger.debug("initialized %s %s from %r", spec.kind, shape.dims, src)
    return tensor


def assign_layer_seeds(start: int, layer_count: int) -> list[int]:
    """Sobol' dimensions for ``layer_count`` consecutive layers starting at ``start``.

    Examples
    --------
    >>> assign_layer_seeds(1, 3)
    [1, 2, 3]
    """
    if start < 1 or layer_count < 1:
        raise DimensionBudgetExceeded(
            f"expected start >= 1 and layer_count >= 1, "
            f"got start={start}, layer_count={layer_count} instead"
        )
    if (last := start + layer_count - 1) > MAX_DIMENSION:
        raise DimensionBudgetExceeded(
            f"layers would need dimension {last}, the limit is {MAX_DIMENSION}"
        )
    return list(range(start, last + 1))
