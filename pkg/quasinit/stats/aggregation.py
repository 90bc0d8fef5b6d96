__all__ = ['aggregate']

from typing import Sequence

import pandas as pd

from ..errors import EmptyInput
from .metrics import ComparisonResult, OUTCOME_MASKS

_CATEGORIES = ['win', 'tie', 'loss']


def _counts(frame: pd.DataFrame, keys: list[str], column: str, labels: list[str]):
    counts = frame.groupby(keys + [column], dropna=False).size().unstack(column, fill_value=0)
    counts = counts.reindex(columns=labels, fill_value=0)
    counts.columns.name = None
    return counts


def aggregate(
    results: Sequence[ComparisonResult], group_by: str | Sequence[str] = ()
) -> pd.DataFrame:
    """Outcome counts and means per facet cell.

    ``group_by`` names keys of each result's ``meta`` (for example
    ``'optimizer'`` or ``['model', 'initializer']``); an empty ``group_by``
    puts every result in one cell. Each row holds the number of results, the
    count per win/tie/loss category and per final-outcome mask, ``alpha_bar``
    (mean of ``A_Q_max - A_P_max``) and ``e_am_bar`` (mean of ``E(A_m)``).
    """
    if not results:
        raise EmptyInput("nothing to aggregate")
    group_by = [group_by] if isinstance(group_by, str) else list(group_by)
    keys = group_by or ['_cell']
    frame = pd.DataFrame.from_records(
        [
            {
                **{key: r.meta.get(key) for key in group_by},
                '_cell': 'all',
                'final': r.final,
                'category': r.category,
                'alpha': r.alpha,
                'e_am': r.e_am,
            }
            for r in results
        ]
    )
    summary = frame.groupby(keys, dropna=False).agg(
        n=('final', 'size'), alpha_bar=('alpha', 'mean'), e_am_bar=('e_am', 'mean')
    )
    out = summary.join(_counts(frame, keys, 'category', _CATEGORIES)).join(
        _counts(frame, keys, 'final', [m for m, *_ in OUTCOME_MASKS])
    )
    out = out.reset_index()
    return out.drop(columns='_cell') if not group_by else out
