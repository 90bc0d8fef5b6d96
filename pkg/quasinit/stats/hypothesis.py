__all__ = ['EXACT_LIMIT', 'fligner_killeen', 'mann_whitney_u', 'HypothesisResult']

import logging
from typing import Literal, NamedTuple

import numpy as np
from scipy import stats

from .._typing import Alternative, FloatSequence, FloatVector
from ..errors import DegenerateInput, EmptyInput

logger = logging.getLogger(__name__)

# exact U distribution below this size when there are no ties, as R does
EXACT_LIMIT = 50


class HypothesisResult(NamedTuple):
    statistic: float
    pvalue: float
    degenerate: bool = False
    method: str = ''


def _as_sample(values, name, min_size):
    x = np.asarray(values, dtype=np.float64).ravel()
    if x.size < min_size:
        raise EmptyInput(f"expected at least {min_size} value(s) in {name}, got {x.size}")
    return x


def _degenerate(name: str, strict: bool, statistic=0.0) -> HypothesisResult:
    if strict:
        raise DegenerateInput(f"{name}: all values identical")
    logger.warning("%s on degenerate input; reporting p = 1", name)
    return HypothesisResult(statistic, 1.0, True, 'degenerate')


def mann_whitney_u(
    x: FloatVector | FloatSequence,
    y: FloatVector | FloatSequence,
    alternative: Alternative,
    *,
    method: Literal['auto', 'exact', 'asymptotic'] = 'auto',
    strict: bool = False,
) -> HypothesisResult:
    """One-sided Mann–Whitney U test of a location shift of ``x`` against ``y``.

    ``alternative='less'`` tests whether ``x`` is shifted to the left of ``y``.
    With ``method='auto'`` the exact null distribution is used when both samples
    are smaller than :data:`EXACT_LIMIT` and there are no ties; otherwise the
    normal approximation with tie-corrected variance and continuity correction.
    The statistic is U of ``x``, counting ties as one half.

    If every value in both samples is the same the test is undefined; the result
    carries ``p = 1`` and ``degenerate=True`` (or raises with ``strict=True``).

    Examples
    --------
    >>> round(mann_whitney_u([1, 2, 3], [4, 5, 6], 'less').pvalue, 12)
    0.05
    """
    if alternative not in ('less', 'greater'):
        raise ValueError(f"expected 'less' or 'greater', got {alternative!r} instead")
    x = _as_sample(x, 'x', 1)
    y = _as_sample(y, 'y', 1)
    pooled = np.concatenate([x, y])
    if np.all(pooled == pooled[0]):
        return _degenerate('Mann-Whitney U', strict, x.size * y.size / 2)
    if method == 'auto':
        ties = np.unique(pooled).size < pooled.size
        small = x.size < EXACT_LIMIT and y.size < EXACT_LIMIT
        method = 'exact' if small and not ties else 'asymptotic'
    res = stats.mannwhitneyu(
        x, y, use_continuity=True, alternative=alternative, method=method
    )
    return HypothesisResult(float(res.statistic), float(res.pvalue), False, method)


def fligner_killeen(
    x: FloatVector | FloatSequence,
    y: FloatVector | FloatSequence,
    *,
    strict: bool = False,
) -> HypothesisResult:
    """Fligner–Killeen test of equal spread, groups centered on their medians.

    Absolute deviations are ranked jointly with midranks and mapped to normal
    scores ``Φ⁻¹(1/2 + r / (2 (N + 1)))``; the statistic is compared with a
    chi-square with one degree of freedom. When every score is equal the
    variance of the scores is zero: ``p = 1`` and ``degenerate=True``.
    """
    x = _as_sample(x, 'x', 2)
    y = _as_sample(y, 'y', 2)
    deviations = np.concatenate([np.abs(x - np.median(x)), np.abs(y - np.median(y))])
    if np.all(deviations == deviations[0]):
        return _degenerate('Fligner-Killeen', strict)
    res = stats.fligner(x, y, center='median')
    statistic = float(res.statistic)
    pvalue = float(res.pvalue)
    if not np.isfinite(pvalue):
        return _degenerate('Fligner-Killeen', strict, statistic)
    return HypothesisResult(statistic, min(pvalue, 1.0), False, 'chi2')
