"""Epoch-to-accuracy metrics and the win/tie/loss rules for a PRNG/QRNG pair.

``E(A)`` is the relative change, in percent, of the first epoch at which the
median accuracy reaches ``A``, with the seed-search penalty charged to the
quasirandom arm. ``D(A)`` is the difference of the two arms' IQRs at those
epochs. Both are judged at ``A_m``, the best median accuracy of the weaker arm.
"""

__all__ = [
    'ALPHA',
    'classify',
    'Classification',
    'compare_accuracies',
    'ComparisonResult',
    'D_TIE_BAND',
    'Efficiency',
    'efficiency_E',
    'epoch_to_accuracy',
    'final_outcome',
    'INDETERMINATE',
    'OUTCOME_MASKS',
    'rule_s_a',
    'rule_s_d',
    'rule_s_e',
    'THRESHOLDS',
    'ThresholdRow',
    'variability_D',
    'Verdict',
]

import logging
from dataclasses import asdict, dataclass, field
from enum import Enum, StrEnum
from typing import Literal, NamedTuple

import numpy as np

from .._typing import FloatArray, FloatVector
from ..errors import MetadataMismatch, UnmappedPermutation
from .hypothesis import fligner_killeen, mann_whitney_u
from .summary import epoch_summary, EpochSummary

logger = logging.getLogger(__name__)

ALPHA = 0.05
D_TIE_BAND = 0.01
THRESHOLDS = tuple(round(0.10 + 0.05 * i, 2) for i in range(18))
_REACH_ATOL = 1e-12


class _Indeterminate(Enum):
    INDETERMINATE = 'indeterminate'

    def __repr__(self):
        return 'INDETERMINATE'


INDETERMINATE = _Indeterminate.INDETERMINATE


class Verdict(StrEnum):
    WIN = 'win'
    TIE = 'tie'
    LOSS = 'loss'


class Efficiency(NamedTuple):
    """``E(A)`` in percent.

    ``bound`` is ``'upper'`` when the pseudorandom arm never reached ``A`` (the
    true value is at most ``value``), ``'lower'`` when the quasirandom arm never
    did, ``'undefined'`` when neither did.
    """

    value: float
    bound: Literal['exact', 'upper', 'lower', 'undefined'] = 'exact'
    threshold: float | None = None


def epoch_to_accuracy(medians: FloatVector, threshold: float) -> int:
    """First 1-based epoch whose median accuracy reaches ``threshold``;
    ``len(medians) + 1`` when none does."""
    hit = np.flatnonzero(np.asarray(medians) >= threshold - _REACH_ATOL)
    return int(hit[0]) + 1 if hit.size else len(medians) + 1


def efficiency_E(
    A: float, e_q: int, e_p: int, delta_q: int, *, budget: int = None
) -> Efficiency:
    """``(e_q + delta_q - e_p) / e_p * 100``.

    ``budget + 1`` is the sentinel epoch of an arm that never reached ``A``.

    Examples
    --------
    >>> efficiency_E(0.2, 1, 1, 4).value
    400.0
    >>> efficiency_E(0.5, 26, 31, 4, budget=30).bound
    'upper'
    """
    if e_q < 1 or e_p < 1:
        raise ValueError(f"expected epochs >= 1, got e_q={e_q}, e_p={e_p} instead")
    value = (e_q + delta_q - e_p) / e_p * 100.0
    bound = 'exact'
    if budget is not None:
        missed_q, missed_p = e_q > budget, e_p > budget
        if missed_q and missed_p:
            bound = 'undefined'
        elif missed_p:
            bound = 'upper'
        elif missed_q:
            bound = 'lower'
    return Efficiency(value, bound, A)


def variability_D(iqr_q, iqr_p):
    """``iqr_q - iqr_p``, or :data:`INDETERMINATE` if either side is."""
    if iqr_q is INDETERMINATE or iqr_p is INDETERMINATE:
        return INDETERMINATE
    return float(iqr_q) - float(iqr_p)


def rule_s_a(p_less: float, p_greater: float) -> Verdict:
    """Accuracy rule: the U tests compare PRNG (x) against QRNG (y) accuracies."""
    if p_less < ALPHA:
        return Verdict.WIN
    if p_greater < ALPHA:
        return Verdict.LOSS
    return Verdict.TIE


def rule_s_e(e_am: float | Efficiency) -> Verdict:
    value = e_am.value if isinstance(e_am, Efficiency) else e_am
    if value < 0:
        return Verdict.WIN
    if value > 0:
        return Verdict.LOSS
    return Verdict.TIE


def rule_s_d(d_am, fk_p: float) -> Verdict:
    if d_am is INDETERMINATE or fk_p >= ALPHA:
        return Verdict.TIE
    d = round(float(d_am), 10)
    if d < -D_TIE_BAND:
        return Verdict.WIN
    if d > D_TIE_BAND:
        return Verdict.LOSS
    return Verdict.TIE


_W, _T, _L = Verdict.WIN, Verdict.TIE, Verdict.LOSS
# (mask, S_A, S_E, allowed S_D or None for any)
OUTCOME_MASKS = (
    ('l:l,*,*', _L, None, None),
    ('l:t,l,*', _T, _L, None),
    ('t:t,t,t', _T, _T, {_T}),
    ('w:t,w,wt', _T, _W, {_W, _T}),
    ('w:w,l,*', _W, _L, None),
    ('w:w,t,wt', _W, _T, {_W, _T}),
    ('w:w,w,l', _W, _W, {_L}),
    ('w:w,w,wt', _W, _W, {_W, _T}),
)


def final_outcome(s_a: Verdict, s_e: Verdict, s_d: Verdict) -> str:
    """Final-outcome mask for a verdict triple.

    Raises
    ------
    UnmappedPermutation
        If no mask covers the triple.

    Examples
    --------
    >>> final_outcome(Verdict.TIE, Verdict.LOSS, Verdict.WIN)
    'l:t,l,*'
    """
    s_a, s_e, s_d = Verdict(s_a), Verdict(s_e), Verdict(s_d)
    for mask, a, e, d in OUTCOME_MASKS:
        if s_a is a and (e is None or s_e is e) and (d is None or s_d in d):
            return mask
    raise UnmappedPermutation(s_a, s_e, s_d)


class Classification(NamedTuple):
    s_a: Verdict
    s_e: Verdict
    s_d: Verdict
    final: str


def classify(p_less: float, p_greater: float, e_am, d_am, fk_p: float) -> Classification:
    s_a = rule_s_a(p_less, p_greater)
    s_e = rule_s_e(e_am)
    s_d = rule_s_d(d_am, fk_p)
    return Classification(s_a, s_e, s_d, final_outcome(s_a, s_e, s_d))


@dataclass(frozen=True)
class ThresholdRow:
    A: float
    e_q: int
    e_p: int
    E: float
    E_bound: str
    d_q: float | None
    d_p: float | None
    D: float | _Indeterminate

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.D is INDETERMINATE:
            d['D'] = INDETERMINATE.value
        return d


@dataclass
class ComparisonResult:
    a_p_max: float
    a_q_max: float
    a_m: float
    e_p_max: int
    e_q_max: int
    e_p_am: int
    e_q_am: int
    e_am: float
    d_am: float | _Indeterminate
    iqr_q_am: float
    iqr_p_am: float
    delta_q: int
    u_test_p_less: float
    u_test_p_greater: float
    fk_p: float
    s_a: Verdict
    s_e: Verdict
    s_d: Verdict
    final: str
    budget: int
    repetitions_q: int
    repetitions_p: int
    grid: list[ThresholdRow] = field(default_factory=list, repr=False)
    meta: dict = field(default_factory=dict, repr=False)

    @property
    def alpha(self) -> float:
        return self.a_q_max - self.a_p_max

    @property
    def category(self) -> str:
        return {'w': 'win', 't': 'tie', 'l': 'loss'}[self.final[0]]

    def threshold(self, A: float) -> ThresholdRow:
        for row in self.grid:
            if abs(row.A - A) < 1e-9:
                return row
        raise KeyError(A)

    def to_row(self) -> dict:
        row = {k: v for k, v in asdict(self).items() if k not in ('grid', 'meta')}
        for k in ('s_a', 's_e', 's_d'):
            row[k] = str(row[k])
        if self.d_am is INDETERMINATE:
            row['d_am'] = INDETERMINATE.value
        row['alpha'] = self.alpha
        return {**{f"meta_{k}": v for k, v in self.meta.items()}, **row}


def _iqr_at(summary: EpochSummary, epoch: int):
    return float(summary.iqr[epoch - 1]) if epoch <= summary.epochs else INDETERMINATE


def compare_accuracies(
    values_q: FloatArray,
    values_p: FloatArray,
    delta_q: int = 0,
    thresholds=THRESHOLDS,
    *,
    meta: dict = None,
) -> ComparisonResult:
    """Full comparison of a quasirandom arm against a pseudorandom arm.

    Both inputs are (repetitions, epochs) accuracy matrices over the same
    epoch budget.
    """
    values_q = np.asarray(values_q, dtype=np.float64)
    values_p = np.asarray(values_p, dtype=np.float64)
    if values_q.shape[1] != values_p.shape[1]:
        raise MetadataMismatch(
            f"expected equal epoch counts, got {values_q.shape[1]} (qrng) "
            f"and {values_p.shape[1]} (prng) instead"
        )
    budget = values_q.shape[1]
    sq, sp = epoch_summary(values_q), epoch_summary(values_p)
    complete_q = values_q[np.all(np.isfinite(values_q), axis=1)]
    complete_p = values_p[np.all(np.isfinite(values_p), axis=1)]

    a_q_max, a_p_max = float(sq.median.max()), float(sp.median.max())
    e_q_max = epoch_to_accuracy(sq.median, a_q_max)
    e_p_max = epoch_to_accuracy(sp.median, a_p_max)
    u_less = mann_whitney_u(complete_p[:, e_p_max - 1], complete_q[:, e_q_max - 1], 'less')
    u_greater = mann_whitney_u(
        complete_p[:, e_p_max - 1], complete_q[:, e_q_max - 1], 'greater'
    )

    a_m = min(a_p_max, a_q_max)
    e_q_am, e_p_am = epoch_to_accuracy(sq.median, a_m), epoch_to_accuracy(sp.median, a_m)
    e_am = efficiency_E(a_m, e_q_am, e_p_am, delta_q, budget=budget)
    iqr_q_am, iqr_p_am = _iqr_at(sq, e_q_am), _iqr_at(sp, e_p_am)
    d_am = variability_D(iqr_q_am, iqr_p_am)
    fk = fligner_killeen(complete_q[:, e_q_am - 1], complete_p[:, e_p_am - 1])
    verdicts = classify(u_less.pvalue, u_greater.pvalue, e_am, d_am, fk.pvalue)

    grid = []
    for A in thresholds:
        e_q, e_p = epoch_to_accuracy(sq.median, A), epoch_to_accuracy(sp.median, A)
        eff = efficiency_E(A, e_q, e_p, delta_q, budget=budget)
        d_q, d_p = _iqr_at(sq, e_q), _iqr_at(sp, e_p)
        if eff.bound == 'undefined':
            value = float('nan')
        else:
            value = eff.value
        grid.append(
            ThresholdRow(
                float(A),
                e_q,
                e_p,
                value,
                eff.bound,
                None if d_q is INDETERMINATE else d_q,
                None if d_p is INDETERMINATE else d_p,
                variability_D(d_q, d_p),
            )
        )

    result = ComparisonResult(
        a_p_max=a_p_max,
        a_q_max=a_q_max,
        a_m=a_m,
        e_p_max=e_p_max,
        e_q_max=e_q_max,
        e_p_am=e_p_am,
        e_q_am=e_q_am,
        e_am=e_am.value,
        d_am=d_am,
        iqr_q_am=iqr_q_am,
        iqr_p_am=iqr_p_am,
        delta_q=int(delta_q),
        u_test_p_less=u_less.pvalue,
        u_test_p_greater=u_greater.pvalue,
        fk_p=fk.pvalue,
        s_a=verdicts.s_a,
        s_e=verdicts.s_e,
        s_d=verdicts.s_d,
        final=verdicts.final,
        budget=budget,
        repetitions_q=sq.repetitions,
        repetitions_p=sp.repetitions,
        grid=grid,
        meta=dict(meta or {}),
    )
    logger.info(
        "A_m=%.4f E(A_m)=%.1f%% D(A_m)=%s -> %s",
        a_m,
        e_am.value,
        d_am if d_am is INDETERMINATE else f"{d_am:.4f}",
        verdicts.final,
    )
    return result
