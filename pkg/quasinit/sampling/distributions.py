"""Inverse-transform sampling of the three initializer distributions.

Both source kinds go through the same path: a base draw ``u`` in (0, 1) is mapped
by an affine transform (uniform) or by the inverse standard normal CDF (normal and
±2σ truncated normal).
"""

__all__ = [
    'DistributionSpec',
    'inverse_normal_cdf',
    'Normal',
    'PHI_MINUS_2',
    'PHI_PLUS_2',
    'sample',
    'sample_normal',
    'sample_truncated_normal',
    'sample_uniform',
    'TRUNCATED_SD_RATIO',
    'TruncatedNormal',
    'Uniform',
]

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .._typing import DistributionName, FloatVector
from ..errors import DomainError, InvalidBounds, InvalidSigma
from .sources import RandomSource

PHI_MINUS_2 = float(ndtr(-2.0))
PHI_PLUS_2 = float(ndtr(2.0))
# sd of a standard normal truncated to [-2, 2]
TRUNCATED_SD_RATIO = math.sqrt(
    1.0 - 4.0 * math.exp(-2.0) / math.sqrt(2.0 * math.pi) / (PHI_PLUS_2 - PHI_MINUS_2)
)


@dataclass(frozen=True, slots=True)
class Uniform:
    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.a < self.b):
            raise InvalidBounds(f"expected a < b, got a={self.a}, b={self.b} instead")

    @property
    def name(self) -> DistributionName:
        return 'uniform'

    @property
    def params(self) -> tuple[float, float]:
        return self.a, self.b


@dataclass(frozen=True, slots=True)
class Normal:
    mu: float
    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise InvalidSigma(f"expected sigma > 0, got {self.sigma} instead")

    @property
    def name(self) -> DistributionName:
        return 'normal'

    @property
    def params(self) -> tuple[float, float]:
        return self.mu, self.sigma


@dataclass(frozen=True, slots=True)
class TruncatedNormal(Normal):
    """Normal(mu, sigma) restricted to ``[mu - 2 sigma, mu + 2 sigma]``."""

    @property
    def name(self) -> DistributionName:
        return 'truncated_normal'

    @property
    def bounds(self) -> tuple[float, float]:
        return self.mu - 2 * self.sigma, self.mu + 2 * self.sigma


type DistributionSpec = Uniform | Normal | TruncatedNormal


def inverse_normal_cdf(p):
    """Standard normal quantile ``Φ⁻¹(p)`` for ``0 < p < 1``.

    Examples
    --------
    >>> float(inverse_normal_cdf(0.5))
    0.0
    >>> round(float(inverse_normal_cdf(0.9772498680518208)), 9)
    2.0
    """
    arr = np.asarray(p, dtype=np.float64)
    if bad := np.count_nonzero(~((arr > 0) & (arr < 1))):
        raise DomainError(
            f"expected probabilities strictly inside (0, 1), "
            f"got {bad} value(s) outside instead"
        )
    out = ndtri(arr)
    return float(out) if out.ndim == 0 else out


def sample_uniform(src: RandomSource, spec: Uniform, n: int) -> FloatVector:
    if not isinstance(spec, Uniform):
        raise InvalidBounds(f"expected a Uniform spec, got {spec!r} instead")
    return (spec.b - spec.a) * src.uniform(n) + spec.a


def sample_normal(src: RandomSource, spec: Normal, n: int) -> FloatVector:
    if not isinstance(spec, Normal):
        raise InvalidSigma(f"expected a Normal spec, got {spec!r} instead")
    return ndtri(src.open_uniform(n)) * spec.sigma + spec.mu


def sample_truncated_normal(
    src: RandomSource, spec: TruncatedNormal | Normal, n: int
) -> FloatVector:
    if not isinstance(spec, Normal):
        raise InvalidSigma(f"expected a TruncatedNormal spec, got {spec!r} instead")
    u = src.open_uniform(n)
    z = ndtri(PHI_MINUS_2 + u * (PHI_PLUS_2 - PHI_MINUS_2))
    return z * spec.sigma + spec.mu


def sample(src: RandomSource, spec: DistributionSpec, n: int) -> FloatVector:
    match spec:
        case TruncatedNormal():
            return sample_truncated_normal(src, spec, n)
        case Normal():
            return sample_normal(src, spec, n)
        case Uniform():
            return sample_uniform(src, spec, n)
    raise TypeError(f"unsupported distribution spec {spec!r}")
