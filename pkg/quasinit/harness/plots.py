"""Plot data for comparison summaries.

Tables are the primary output; figures are an optional rendering of them. E(A)
is capped at 100% in plot tables only, stored comparisons keep the raw value.
"""

__all__ = [
    'alpha_histogram',
    'E_PLOT_CAP',
    'render_alpha_histogram',
    'render_single_layer',
    'render_summary_grid',
    'single_layer_curves',
    'summary_grid',
    'write_plot_data',
]

import logging
import os
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from ..errors import EmptyInput
from ..nn.training import AccuracyTrace
from ..stats.metrics import ComparisonResult, INDETERMINATE
from ..stats.summary import epoch_summary
from . import store
from .plan import u_sequence

logger = logging.getLogger(__name__)

E_PLOT_CAP = 100.0
_CELL_KEYS = ('model', 'units', 'optimizer', 'initializer')


def summary_grid(results: Sequence[ComparisonResult]) -> pd.DataFrame:
    """One row per comparison and threshold with E(A) (capped) and D(A)."""
    rows = []
    for r in results:
        cell = {k: r.meta.get(k) for k in _CELL_KEYS}
        for t in r.grid:
            rows.append(
                {
                    **cell,
                    'final': r.final,
                    'A': t.A,
                    'E': min(t.E, E_PLOT_CAP) if np.isfinite(t.E) else np.nan,
                    'E_raw': t.E,
                    'E_bound': t.E_bound,
                    'D': np.nan if t.D is INDETERMINATE else t.D,
                }
            )
    if not rows:
        raise EmptyInput("no threshold grid to plot")
    return pd.DataFrame(rows)


def alpha_histogram(
    results: Sequence[ComparisonResult], bins: int = 20
) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Per-comparison ``A_Q_max - A_P_max`` and its histogram."""
    if not results:
        raise EmptyInput("no comparisons to histogram")
    values = pd.DataFrame(
        [
            {**{k: r.meta.get(k) for k in _CELL_KEYS}, 'alpha': r.alpha, 'final': r.final}
            for r in results
        ]
    )
    counts, edges = np.histogram(values['alpha'].to_numpy(), bins=bins)
    hist = pd.DataFrame({'left': edges[:-1], 'right': edges[1:], 'count': counts})
    return values, hist


def single_layer_curves(runs: Iterable[tuple[AccuracyTrace, dict]]) -> pd.DataFrame:
    """Per-epoch median and IQR of every single-layer run, labelled by width group."""
    frames = []
    for trace, manifest in runs:
        plan = manifest.get('plan') or trace.meta.get('plan') or {}
        if plan.get('model') != 'single_layer':
            continue
        s = epoch_summary(trace.values)
        frames.append(
            pd.DataFrame(
                {
                    'units': plan['units'],
                    'u_sequence': u_sequence(plan['units']),
                    'arm': plan.get('arm'),
                    'initializer': plan.get('initializer'),
                    'optimizer': plan.get('optimizer'),
                    'epoch': np.arange(1, s.epochs + 1),
                    'median': s.median,
                    'iqr': s.iqr,
                }
            )
        )
    if not frames:
        return pd.DataFrame(
            columns=['units', 'u_sequence', 'arm', 'initializer', 'optimizer', 'epoch', 'median', 'iqr']
        )
    return pd.concat(frames, ignore_index=True).sort_values(
        ['initializer', 'optimizer', 'units', 'arm', 'epoch'], ignore_index=True
    )


def _pyplot():
    import matplotlib

    matplotlib.use('Agg')
    import matplotlib.pyplot as plt

    return plt


def render_summary_grid(frame: pd.DataFrame, path: str | os.PathLike) -> Path:
    plt = _pyplot()
    fig, (ax_e, ax_d) = plt.subplots(2, 1, figsize=(8, 7), sharex=True)
    for key, group in frame.groupby(['optimizer', 'initializer'], dropna=False):
        label = ' / '.join(str(k) for k in key)
        ax_e.plot(group['A'], group['E'], marker='o', ms=3, lw=1, label=label)
        ax_d.plot(group['A'], group['D'], marker='o', ms=3, lw=1)
    ax_e.axhline(0, color='k', lw=0.5)
    ax_d.axhline(0, color='k', lw=0.5)
    ax_e.set_ylabel('E(A) [%]')
    ax_d.set_ylabel('D(A)')
    ax_d.set_xlabel('accuracy threshold A')
    ax_e.legend(fontsize=6, ncol=2)
    fig.savefig(path, dpi=150, bbox_inches='tight')
    plt.close(fig)
    return Path(path)


def render_alpha_histogram(hist: pd.DataFrame, path: str | os.PathLike) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(
        hist['left'], hist['count'], width=hist['right'] - hist['left'], align='edge', edgecolor='k'
    )
    ax.axvline(0, color='k', lw=0.5)
    ax.set_xlabel('A_Q_max - A_P_max')
    ax.set_ylabel('comparisons')
    fig.savefig(path, dpi=150, bbox_inches='tight')
    plt.close(fig)
    return Path(path)


def render_single_layer(frame: pd.DataFrame, path: str | os.PathLike, epoch: int = 1) -> Path:
    """Median accuracy at ``epoch`` against width, one line per arm and width group."""
    plt = _pyplot()
    at = frame[frame['epoch'] == epoch]
    fig, ax = plt.subplots(figsize=(7, 4))
    for (arm, group_name), group in at.groupby(['arm', 'u_sequence']):
        group = group.sort_values('units')
        ax.errorbar(
            group['units'], group['median'], yerr=group['iqr'] / 2, marker='.', lw=1,
            capsize=2, label=f"{arm} {group_name}",
        )
    ax.set_xlabel('units')
    ax.set_ylabel(f'median test accuracy, epoch {epoch}')
    ax.legend(fontsize=7)
    fig.savefig(path, dpi=150, bbox_inches='tight')
    plt.close(fig)
    return Path(path)


def write_plot_data(
    out_dir: str | os.PathLike, *, render: bool = False, bins: int = 20
) -> dict[str, Path]:
    """Write plot tables, and figures when ``render``, to ``<out_dir>/plots/``.

    Reads every comparison under ``<out_dir>/compare/`` and every run under
    ``<out_dir>``.
    """
    out_dir = Path(out_dir)
    results = list(store.iter_comparisons(out_dir / 'compare'))
    target = out_dir / 'plots'
    target.mkdir(parents=True, exist_ok=True)
    written = {}
    if results:
        grid = summary_grid(results)
        values, hist = alpha_histogram(results, bins)
        for name, frame in (('summary_grid', grid), ('alpha', values), ('alpha_histogram', hist)):
            written[name] = target / f"{name}.csv"
            frame.to_csv(written[name], index=False, float_format='%.6f', lineterminator='\n')
        if render:
            written['summary_grid_png'] = render_summary_grid(grid, target / 'summary_grid.png')
            written['alpha_histogram_png'] = render_alpha_histogram(
                hist, target / 'alpha_histogram.png'
            )
    else:
        logger.warning("no comparisons under %s", out_dir / 'compare')
    curves = single_layer_curves(store.iter_runs(out_dir))
    if len(curves):
        written['single_layer'] = target / 'single_layer.csv'
        curves.to_csv(written['single_layer'], index=False, float_format='%.6f', lineterminator='\n')
        if render:
            written['single_layer_png'] = render_single_layer(curves, target / 'single_layer.png')
    logger.info("plot data written to %s: %s", target, sorted(written))
    return written
