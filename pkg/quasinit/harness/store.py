"""On-disk layout of runs and comparisons.

A run directory ``<out>/<plan-hash>/`` holds ``trace.csv`` (one row per
repetition and epoch) and ``manifest.json``. A comparison directory
``<out>/compare/<pair-hash>/`` holds ``comparison.csv``, ``thresholds.csv``,
``epochs.csv`` and ``manifest.json``. Manifests carry no timestamps, so re-running
a plan on the same host rewrites identical files.
"""

__all__ = [
    'completed_run',
    'host_info',
    'iter_comparisons',
    'iter_runs',
    'read_comparison',
    'read_run',
    'run_manifest',
    'SCHEMA_VERSION',
    'write_comparison',
    'write_run',
]

import json
import logging
import os
import platform
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Iterator

import numpy as np
import pandas as pd

from ..errors import MetadataMismatch
from ..nn.training import AccuracyTrace
from ..stats.metrics import ComparisonResult, INDETERMINATE, ThresholdRow, Verdict
from ..stats.summary import epoch_summary

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
TRACE_FILE = 'trace.csv'
MANIFEST_FILE = 'manifest.json'
_FLOAT_FORMAT = '%.6f'


def _package_version() -> str:
    try:
        return version('quasinit')
    except PackageNotFoundError:
        return 'unknown'


def host_info() -> dict[str, Any]:
    return {
        'python': platform.python_version(),
        'platform': platform.platform(),
        'machine': platform.machine(),
        'cpu_count': os.cpu_count(),
        'numpy': np.__version__,
        'pandas': pd.__version__,
        'quasinit': _package_version(),
    }


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    if obj is INDETERMINATE:
        return INDETERMINATE.value
    raise TypeError(f"{type(obj).__name__} is not JSON serializable")


def _write_json(path: Path, doc: dict):
    tmp = path.with_suffix(path.suffix + '.tmp')
    with open(tmp, 'w', encoding='utf-8') as f:
        json.dump(doc, f, indent=2, sort_keys=True, default=_json_default)
        f.write('\n')
    os.replace(tmp, path)


def _write_csv(path: Path, frame: pd.DataFrame):
    tmp = path.with_suffix(path.suffix + '.tmp')
    frame.to_csv(tmp, index=False, float_format=_FLOAT_FORMAT, lineterminator='\n')
    os.replace(tmp, path)


def run_manifest(**fields) -> dict[str, Any]:
    failures = fields.get('failures') or {}
    return {
        'schema_version': SCHEMA_VERSION,
        **fields,
        'failures': {str(k): v for k, v in failures.items()},
        'status': 'partial' if failures else 'complete',
        'host': host_info(),
    }


def write_run(path: str | os.PathLike, trace: AccuracyTrace, manifest: dict):
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    _write_csv(path / TRACE_FILE, trace.to_frame())
    _write_json(path / MANIFEST_FILE, manifest)
    logger.info("wrote %s (%s)", path, manifest.get('status'))


def _read_manifest(path: Path) -> dict:
    with open(path / MANIFEST_FILE, 'r', encoding='utf-8') as f:
        manifest = json.load(f)
    if (v := manifest.get('schema_version')) != SCHEMA_VERSION:
        raise MetadataMismatch(
            f"expected schema_version {SCHEMA_VERSION} in {str(path)!r}, got {v!r} instead"
        )
    return manifest


def read_run(path: str | os.PathLike) -> tuple[AccuracyTrace, dict]:
    """Load a run directory, or a bare ``trace.csv`` next to a ``manifest.json``.

    A CSV without a manifest is accepted and gets empty metadata.
    """
    path = Path(path)
    if path.is_file():
        csv, path = path, path.parent
    else:
        csv = path / TRACE_FILE
    manifest = _read_manifest(path) if (path / MANIFEST_FILE).exists() else {}
    plan = manifest.get('plan', {})
    meta = {
        'plan': plan,
        'plan_hash': manifest.get('plan_hash'),
        'arm': plan.get('arm'),
        'delta_q': manifest.get('delta_q', 0),
        'source': str(csv),
    }
    failures = {int(k): v for k, v in manifest.get('failures', {}).items()}
    trace = AccuracyTrace.from_frame(pd.read_csv(csv), meta, failures)
    return trace, manifest


def completed_run(path: Path, plan: dict) -> tuple[AccuracyTrace, dict] | None:
    """The stored run for ``plan`` if it finished, else None."""
    if not (path / MANIFEST_FILE).exists() or not (path / TRACE_FILE).exists():
        return None
    try:
        trace, manifest = read_run(path)
    except (OSError, ValueError) as err:
        logger.warning("ignoring unreadable run %s: %s", path, err)
        return None
    if manifest.get('plan') != plan or manifest.get('status') != 'complete':
        return None
    return trace, manifest


def iter_runs(root: str | os.PathLike) -> Iterator[tuple[AccuracyTrace, dict]]:
    for csv in sorted(Path(root).glob(f"*/{TRACE_FILE}")):
        yield read_run(csv.parent)


def _epochs_frame(values_q, values_p) -> pd.DataFrame:
    frames = []
    for arm, values in (('qrng', values_q), ('prng', values_p)):
        s = epoch_summary(values)
        frames.append(
            pd.DataFrame(
                {
                    'arm': arm,
                    'epoch': np.arange(1, s.epochs + 1),
                    'median': s.median,
                    'iqr': s.iqr,
                    'repetitions': s.repetitions,
                }
            )
        )
    return pd.concat(frames, ignore_index=True)


def write_comparison(
    path: str | os.PathLike,
    result: ComparisonResult,
    manifest: dict,
    values_q=None,
    values_p=None,
):
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    _write_csv(path / 'comparison.csv', pd.DataFrame([result.to_row()]))
    _write_csv(
        path / 'thresholds.csv', pd.DataFrame([row.to_dict() for row in result.grid])
    )
    if values_q is not None and values_p is not None:
        _write_csv(path / 'epochs.csv', _epochs_frame(values_q, values_p))
    _write_json(
        path / MANIFEST_FILE,
        {'schema_version': SCHEMA_VERSION, **manifest, 'host': host_info()},
    )
    logger.info("wrote comparison %s: %s", path, result.final)


def _maybe_indeterminate(value):
    if isinstance(value, str) and value == INDETERMINATE.value:
        return INDETERMINATE
    if value is None or (isinstance(value, float) and np.isnan(value)):
        return None
    return value


def read_comparison(path: str | os.PathLike) -> ComparisonResult:
    path = Path(path)
    row = pd.read_csv(path / 'comparison.csv').iloc[0].to_dict()
    meta = {k.removeprefix('meta_'): v for k, v in row.items() if k.startswith('meta_')}
    kwargs = {k: v for k, v in row.items() if not k.startswith('meta_') and k != 'alpha'}
    for k in ('s_a', 's_e', 's_d'):
        kwargs[k] = Verdict(kwargs[k])
    for k in ('e_p_max', 'e_q_max', 'e_p_am', 'e_q_am', 'delta_q', 'budget'):
        kwargs[k] = int(kwargs[k])
    for k in ('repetitions_q', 'repetitions_p'):
        kwargs[k] = int(kwargs[k])
    kwargs['d_am'] = _maybe_indeterminate(kwargs['d_am'])
    if kwargs['d_am'] is not INDETERMINATE:
        kwargs['d_am'] = float(kwargs['d_am'])
    for k in ('iqr_q_am', 'iqr_p_am'):
        kwargs[k] = _maybe_indeterminate(kwargs[k])
    grid = []
    if (path / 'thresholds.csv').exists():
        for rec in pd.read_csv(path / 'thresholds.csv').to_dict('records'):
            rec['D'] = _maybe_indeterminate(rec['D'])
            if rec['D'] is not INDETERMINATE:
                rec['D'] = float(rec['D'])
            rec['d_q'], rec['d_p'] = _maybe_indeterminate(rec['d_q']), _maybe_indeterminate(rec['d_p'])
            rec['e_q'], rec['e_p'] = int(rec['e_q']), int(rec['e_p'])
            grid.append(ThresholdRow(**rec))
    return ComparisonResult(**kwargs, grid=grid, meta=meta)


def iter_comparisons(root: str | os.PathLike) -> Iterator[ComparisonResult]:
    for csv in sorted(Path(root).glob('*/comparison.csv')):
        yield read_comparison(csv.parent)
