__all__ = ['compare', 'pair_hash']

import hashlib
import logging
import os
from pathlib import Path

import numpy as np

from ..errors import MetadataMismatch
from ..nn.training import AccuracyTrace
from ..stats.metrics import compare_accuracies, ComparisonResult, THRESHOLDS
from . import store
from .plan import PLAN_FACETS, u_sequence

logger = logging.getLogger(__name__)


def pair_hash(trace_q: AccuracyTrace, trace_p: AccuracyTrace) -> str:
    """Identifier of a (qrng, prng) pair, from the two source identities."""
    keys = [
        str(t.meta.get('plan_hash') or t.meta.get('source') or id(t)) for t in (trace_q, trace_p)
    ]
    return hashlib.sha256('|'.join(keys).encode()).hexdigest()[:16]


def _facets(trace: AccuracyTrace) -> dict:
    plan = trace.meta.get('plan') or {}
    return {k: plan[k] for k in PLAN_FACETS if k in plan}


def compare(
    trace_q: AccuracyTrace,
    trace_p: AccuracyTrace,
    thresholds=THRESHOLDS,
    *,
    delta_q: int = None,
    out_dir: str | os.PathLike = None,
) -> ComparisonResult:
    """Compare a quasirandom trace against its pseudorandom counterpart.

    ``delta_q`` defaults to the seed-search penalty recorded with ``trace_q``.
    When ``out_dir`` is given the result, its threshold grid and the per-epoch
    summaries are written under ``<out_dir>/compare/<pair-hash>/``.

    Raises
    ------
    MetadataMismatch
        If the traces differ in epoch count or in any plan facet other than the
        source arm.
    """
    if trace_q.epochs != trace_p.epochs:
        raise MetadataMismatch(
            f"expected equal epoch counts, got {trace_q.epochs} and {trace_p.epochs} instead"
        )
    fq, fp = _facets(trace_q), _facets(trace_p)
    if fq and fp and fq != fp:
        diff = sorted(k for k in fq.keys() | fp.keys() if fq.get(k) != fp.get(k))
        raise MetadataMismatch(f"traces differ in more than the source arm: {diff}")
    if trace_q.meta.get('arm') and trace_q.meta.get('arm') == trace_p.meta.get('arm'):
        logger.warning("comparing two traces of the %s arm", trace_q.meta['arm'])
    if delta_q is None:
        delta_q = int(trace_q.meta.get('delta_q') or 0)

    # stored traces carry 6 decimals; round in-memory ones the same way
    values_q = np.round(trace_q.values, 6)
    values_p = np.round(trace_p.values, 6)
    meta = dict(fq or fp)
    if meta.get('units') is not None:
        meta['u_sequence'] = u_sequence(meta['units'])
    result = compare_accuracies(values_q, values_p, delta_q, thresholds, meta=meta)

    if out_dir is not None:
        path = Path(out_dir) / 'compare' / pair_hash(trace_q, trace_p)
        store.write_comparison(
            path,
            result,
            {
                'qrng': trace_q.meta.get('plan_hash') or trace_q.meta.get('source'),
                'prng': trace_p.meta.get('plan_hash') or trace_p.meta.get('source'),
                'delta_q': delta_q,
                'thresholds': [float(a) for a in thresholds],
                'facets': fq or fp,
            },
            values_q,
            values_p,
        )
    return result
