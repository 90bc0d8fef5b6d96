"""Cartesian experiment grids.

A grid document is YAML, for example::

    models: [mlp_32_32]
    optimizers: [sgd, adam]
    initializers: all
    repetitions: 20
    epochs: 30
    seed_policy: auto

Every cell yields a quasirandom and a pseudorandom plan that differ only in the
source arm; each pair is compared once both traces exist.
"""

__all__ = ['expand_grid', 'GridDocument', 'GridOutcome', 'load_grid', 'run_grid']

import hashlib
import itertools
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import NotRequired, TypedDict

import pandas as pd
import yaml

from .._typing import is_matching_typed_dict, ModelVariant, OptimizerName, SeedPolicy
from ..errors import PlanError
from ..initializers import InitializerKind
from ..mnist import Dataset
from ..qmc.sobol import SobolEngine
from ..seed_select import SeedSearchConfig
from ..stats.aggregation import aggregate
from ..stats.metrics import ComparisonResult, THRESHOLDS
from .comparison import compare
from .plan import ExperimentPlan, run_plan, RunOutcome

logger = logging.getLogger(__name__)


class GridDocument(TypedDict):
    dataset: NotRequired[str]
    models: NotRequired[list[ModelVariant]]
    units: NotRequired[list[int]]
    optimizers: NotRequired[list[OptimizerName]]
    initializers: NotRequired[list[str] | str]
    seed_policy: NotRequired[SeedPolicy]
    nu: NotRequired[int]
    seed_search: NotRequired[dict[str, int | bool]]
    repetitions: NotRequired[int]
    epochs: NotRequired[int]
    batch_size: NotRequired[int]
    learning_rate: NotRequired[float]
    master_seed: NotRequired[int]
    thresholds: NotRequired[list[float]]


def load_grid(path: str | os.PathLike) -> GridDocument:
    with open(path, 'r', encoding='utf-8') as f:
        doc = yaml.safe_load(f) or {}
    ok, msg = is_matching_typed_dict(doc, GridDocument)
    if not ok:
        err = PlanError(msg)
        err.add_note(f"grid file {str(path)!r}")
        raise err
    return doc


def _initializers(value) -> list[InitializerKind]:
    if value is None or value == 'all':
        return list(InitializerKind)
    if isinstance(value, str):
        value = [value]
    try:
        return [InitializerKind(v) for v in value]
    except ValueError as err:
        raise PlanError(str(err)) from None


def expand_grid(doc: GridDocument, **defaults) -> list[tuple[ExperimentPlan, ExperimentPlan]]:
    """(qrng, prng) plan pairs of every grid cell, in a stable order.

    ``defaults`` fill keys the document leaves out (e.g. ``master_seed`` from
    the settings).
    """
    ok, msg = is_matching_typed_dict(doc, GridDocument)
    if not ok:
        raise PlanError(msg)
    doc = {**defaults, **doc}
    models = doc.get('models', ['mlp_32_32'])
    units = doc.get('units', [])
    if 'single_layer' in models and not units:
        raise PlanError("a grid with the single_layer model needs 'units'")
    shared = {
        k: doc[k]
        for k in (
            'dataset',
            'seed_policy',
            'nu',
            'repetitions',
            'epochs',
            'batch_size',
            'learning_rate',
            'master_seed',
        )
        if k in doc
    }
    if (search := doc.get('seed_search')) is not None:
        try:
            shared['seed_search'] = SeedSearchConfig(**search)
        except TypeError as err:
            raise PlanError(f"seed_search: {err}") from None
    pairs = []
    for model in models:
        widths = units if model == 'single_layer' else [None]
        for u, optimizer, kind in itertools.product(
            widths, doc.get('optimizers', ['adam']), _initializers(doc.get('initializers'))
        ):
            q = ExperimentPlan(
                model=model, units=u, optimizer=optimizer, initializer=kind, arm='qrng', **shared
            )
            pairs.append((q, q.counterpart('prng')))
    return pairs


@dataclass
class GridOutcome:
    runs: list[tuple[RunOutcome, RunOutcome]]
    results: list[ComparisonResult]
    summary: pd.DataFrame
    path: Path = None
    comparisons: pd.DataFrame = field(default=None, repr=False)


def _grid_hash(doc: GridDocument) -> str:
    canonical = json.dumps(doc, sort_keys=True, separators=(',', ':'), default=str)
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def run_grid(
    doc: GridDocument,
    dataset: Dataset,
    out_dir: str | os.PathLike,
    *,
    engine: SobolEngine = None,
    executor=None,
    master_seed: int = None,
    skip_existing: bool = True,
) -> GridOutcome:
    """Run, compare and summarize every cell of ``doc``.

    Traces go to ``<out_dir>/<plan-hash>/``, comparisons to
    ``<out_dir>/compare/<pair-hash>/`` and the per-optimizer summary and all
    comparison rows to ``<out_dir>/grid/<grid-hash>/``. Repetitions of each plan
    are spread over ``executor``; the outputs match a serial run.
    """
    defaults = {} if master_seed is None else {'master_seed': master_seed}
    pairs = expand_grid(doc, **defaults)
    thresholds = tuple(doc.get('thresholds', THRESHOLDS))
    logger.info("grid of %d cells (%d plans)", len(pairs), 2 * len(pairs))
    runs, results = [], []
    for q_plan, p_plan in pairs:
        q = run_plan(
            q_plan, dataset, out_dir, engine=engine, executor=executor, skip_existing=skip_existing
        )
        p = run_plan(
            p_plan, dataset, out_dir, engine=engine, executor=executor, skip_existing=skip_existing
        )
        result = compare(q.trace, p.trace, thresholds, out_dir=out_dir)
        runs.append((q, p))
        results.append(result)

    group_by = [k for k in ('model', 'units', 'optimizer') if len({r.meta.get(k) for r in results}) > 1]
    summary = aggregate(results, group_by or 'optimizer')
    comparisons = pd.DataFrame([r.to_row() for r in results])
    path = Path(out_dir) / 'grid' / _grid_hash({**defaults, **doc})
    path.mkdir(parents=True, exist_ok=True)
    summary.to_csv(path / 'summary.csv', index=False, float_format='%.6f', lineterminator='\n')
    comparisons.to_csv(
        path / 'comparisons.csv', index=False, float_format='%.6f', lineterminator='\n'
    )
    with open(path / 'grid.yaml', 'w', encoding='utf-8') as f:
        yaml.safe_dump({**defaults, **doc}, f, sort_keys=True)
    logger.info("grid summary written to %s", path)
    return GridOutcome(runs, results, summary, path, comparisons)
