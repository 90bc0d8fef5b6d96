"""The ``quasinit`` command line.

Requested data goes to stdout; logs go to stderr. Failures print one JSON object
``{"error", "message", "schema_version"}`` on stderr and exit with status 2;
usage errors print the command help and exit with status 64.
"""

__all__ = ['build_parser', 'main']

import argparse
import contextlib
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd
import yaml

from ._typing import DistributionName
from .config import load_settings, Settings
from .data import register_direction_file
from .errors import PlanError, QuasinitError
from .harness.bench import bench_draws, DEFAULT_COUNTS, DEFAULT_DIMENSIONS, timed
from .harness.comparison import compare
from .harness.grid import load_grid, run_grid
from .harness.plan import ExperimentPlan, make_executor, run_plan
from .harness.plots import write_plot_data
from .harness.store import read_run, SCHEMA_VERSION
from .initializers import initialize, InitializerKind, InitializerSpec, TensorShape
from .mnist import load_mnist
from .qmc.directions import export_direction_file, load_direction_table, MAX_DIMENSION
from .qmc.discrepancy import star_discrepancy
from .qmc.sobol import SobolEngine
from .sampling.distributions import Normal, sample, TruncatedNormal, Uniform
from .sampling.sources import derive_seed, PseudoRandomSource, QuasiRandomSource
from .seed_select import select_seed, SeedSearchConfig
from .stats.metrics import THRESHOLDS

logger = logging.getLogger(__name__)

EX_USAGE = 64
EX_FAILURE = 2
LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated numbers, got {text!r} instead"
        ) from None


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated integers, got {text!r} instead"
        ) from None


def _emit_json(doc):
    json.dump(doc, sys.stdout, indent=2, sort_keys=True, default=str)
    sys.stdout.write('\n')


def _engine(settings: Settings, cache: tuple[int, int] = None) -> SobolEngine:
    engine = SobolEngine(
        table=load_direction_table(settings.direction_file),
        cache_budget=settings.cache_budget_bytes,
    )
    if settings.sobol_cache and cache:
        n_max, d = cache
        engine.build_cache(n_max, min(d, engine.dimensions))
    return engine


def _source(args, engine_factory):
    if args.source == 'qrng':
        return QuasiRandomSource(engine_factory(), args.dimension)
    return PseudoRandomSource(args.seed)


def _distribution(name: DistributionName, params: list[float]):
    if len(params) != 2:
        raise PlanError(f"expected 2 distribution parameters, got {len(params)} instead")
    match name:
        case 'uniform':
            return Uniform(*params)
        case 'normal':
            return Normal(*params)
        case 'truncated_normal':
            return TruncatedNormal(*params)


def _cmd_sample(args, settings: Settings):
    src = _source(args, lambda: _engine(settings))
    values = sample(src, _distribution(args.dist, args.params), args.count)
    if args.discrepancy:
        if args.dist != 'uniform' or args.params != [0.0, 1.0]:
            raise PlanError("--discrepancy needs --dist uniform --params 0,1")
        _emit_json({'count': args.count, 'star_discrepancy': star_discrepancy(values)})
        return
    sys.stdout.write(''.join(f"{float(v)!r}\n" for v in values))


def _cmd_init(args, settings: Settings):
    shape = TensorShape.of(args.shape)
    src = _source(args, lambda: _engine(settings, (shape.size, args.dimension)))
    tensor = initialize(InitializerSpec(InitializerKind(args.initializer), gain=args.gain), shape, src)
    matrix = np.asarray(tensor.values).reshape(shape.dims[0], -1)
    pd.DataFrame(matrix).to_csv(
        sys.stdout, header=False, index=False, float_format='%.9g', lineterminator='\n'
    )


def _plan(args, settings: Settings, **fixed) -> ExperimentPlan:
    doc = {}
    if args.plan:
        with open(args.plan, 'r', encoding='utf-8') as f:
            doc = yaml.safe_load(f) or {}
        if not isinstance(doc, dict):
            raise PlanError(f"expected a mapping in {args.plan!r}")
    flags = {
        'model': args.model,
        'units': args.units,
        'initializer': args.initializer,
        'optimizer': args.optimizer,
        'arm': args.arm,
        'seed_policy': args.seed_policy,
        'nu': args.nu,
        'repetitions': args.repetitions,
        'epochs': args.epochs,
        'batch_size': args.batch_size,
        'learning_rate': args.lr,
    }
    doc.update({k: v for k, v in flags.items() if v is not None})
    doc.setdefault('master_seed', settings.master_seed)
    if args.search is not None or args.warm_start:
        search = SeedSearchConfig.parse(args.search) if args.search else SeedSearchConfig()
        doc['seed_search'] = {**asdict(search), 'warm_start': bool(args.warm_start)}
    doc.update(fixed)
    return ExperimentPlan.from_dict(doc)


def _cache_for(plan: ExperimentPlan) -> tuple[int, int]:
    shapes = plan.model_config().layer_shapes
    top = plan.seed_search.Z if plan.seed_policy == 'auto' else plan.nu
    return max(s.size for s in shapes), min(top + len(shapes), MAX_DIMENSION)


def _cmd_seed_search(args, settings: Settings):
    plan = _plan(args, settings, arm='qrng', seed_policy='auto')
    dataset = load_mnist(settings.data_dir)
    result = select_seed(
        plan.seed_search,
        plan.model_config(),
        dataset.train,
        dataset.test,
        derive_seed(plan.master_seed, 'seed-search'),
        train_cfg=plan.train_config(0),
        engine=_engine(settings, _cache_for(plan)),
    )
    _emit_json(result.to_dict())


def _cmd_train(args, settings: Settings):
    plan = _plan(args, settings)
    dataset = load_mnist(settings.data_dir)
    cache = _cache_for(plan) if settings.sobol_cache else None
    executor = make_executor(settings.jobs, dataset, settings.direction_file, cache)
    with executor or contextlib.nullcontext():
        outcome = run_plan(
            plan,
            dataset,
            settings.out_dir,
            engine=_engine(settings, cache),
            executor=executor,
            skip_existing=not args.force,
        )
    _emit_json(
        {
            'path': str(outcome.path),
            'skipped': outcome.skipped,
            'status': outcome.manifest.get('status'),
            'nu': outcome.manifest.get('nu'),
            'delta_q': outcome.manifest.get('delta_q'),
        }
    )


def _cmd_compare(args, settings: Settings):
    trace_q, _ = read_run(args.qrng)
    trace_p, _ = read_run(args.prng)
    result = compare(
        trace_q,
        trace_p,
        tuple(args.thresholds) if args.thresholds else THRESHOLDS,
        delta_q=args.delta_q,
        out_dir=None if args.no_write else settings.out_dir,
    )
    pd.DataFrame([result.to_row()]).to_csv(
        sys.stdout, index=False, float_format='%.6f', lineterminator='\n'
    )


def _cmd_grid(args, settings: Settings):
    doc = load_grid(args.grid)
    dataset = load_mnist(settings.data_dir)
    executor = make_executor(settings.jobs, dataset, settings.direction_file)
    with executor or contextlib.nullcontext():
        outcome = run_grid(
            doc,
            dataset,
            settings.out_dir,
            engine=_engine(settings),
            executor=executor,
            master_seed=settings.master_seed,
            skip_existing=not args.force,
        )
    outcome.summary.to_csv(sys.stdout, index=False, float_format='%.6f', lineterminator='\n')


def _cmd_plot_data(args, settings: Settings):
    written = write_plot_data(settings.out_dir, render=args.render, bins=args.bins)
    _emit_json({k: str(v) for k, v in written.items()})


def _cmd_bench(args, settings: Settings):
    frame = bench_draws(
        args.dimensions,
        args.counts,
        args.dist or ('uniform', 'normal', 'truncated_normal'),
        repeats=args.repeats,
        engine=_engine(settings),
    )
    frame.to_csv(sys.stdout, index=False, float_format='%.9f', lineterminator='\n')


def _cmd_directions_export(args, settings: Settings):
    table = export_direction_file(args.path, args.max_dimension)
    _emit_json({'path': str(args.path), 'max_dimension': table.max_dimension})


def _cmd_directions_register(args, settings: Settings):
    path = register_direction_file(args.path, args.name)
    _emit_json({'path': str(path)})


def _add_source_args(p: argparse.ArgumentParser):
    p.add_argument('--source', choices=['qrng', 'prng'], required=True)
    p.add_argument('--dimension', type=int, default=1, help="Sobol' dimension (qrng)")
    p.add_argument('--seed', type=int, default=0, help='MT19937 seed (prng)')


def _add_plan_args(p: argparse.ArgumentParser):
    p.add_argument('--plan', type=Path, help='YAML plan document; flags override its keys')
    p.add_argument('--model', choices=['single_layer', 'mlp_32_32'])
    p.add_argument('--units', type=int)
    p.add_argument('--initializer', choices=[str(k) for k in InitializerKind])
    p.add_argument('--optimizer', choices=['sgd', 'adam'])
    p.add_argument('--arm', choices=['qrng', 'prng'])
    p.add_argument('--seed-policy', choices=['fixed', 'auto'])
    p.add_argument('--nu', type=int)
    p.add_argument('--search', metavar='W,Z,X,Y,R')
    p.add_argument('--warm-start', action='store_true', default=None)
    p.add_argument('--repetitions', type=int)
    p.add_argument('--epochs', type=int)
    p.add_argument('--batch-size', type=int)
    p.add_argument('--lr', type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog='quasinit', description=__doc__.splitlines()[0])
    parser.add_argument('--config', type=Path, help='YAML settings file')
    parser.add_argument('--direction-file', type=Path)
    parser.add_argument('--data-dir', type=Path)
    parser.add_argument('--out-dir', type=Path)
    parser.add_argument('--jobs', type=int)
    parser.add_argument('--master-seed', type=int)
    parser.add_argument('--sobol-cache', action='store_true', default=None)
    parser.add_argument(
        '--log-level', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'], type=str.upper
    )
    sub = parser.add_subparsers(dest='command', required=True, parser_class=_Parser)

    p = sub.add_parser('sample', help='emit raw draws, one per line')
    _add_source_args(p)
    p.add_argument('--dist', choices=['uniform', 'normal', 'truncated_normal'], default='uniform')
    p.add_argument('--params', type=_floats, default=[0.0, 1.0])
    p.add_argument('--count', type=int, required=True)
    p.add_argument('--discrepancy', action='store_true')
    p.set_defaults(handler=_cmd_sample)

    p = sub.add_parser('init', help='emit an initialized weight tensor as CSV')
    _add_source_args(p)
    p.add_argument('--initializer', choices=[str(k) for k in InitializerKind], required=True)
    p.add_argument('--shape', type=_ints, required=True)
    p.add_argument('--gain', type=float, default=1.0)
    p.set_defaults(handler=_cmd_init)

    p = sub.add_parser('seed-search', help="pick the starting Sobol' dimension")
    _add_plan_args(p)
    p.set_defaults(handler=_cmd_seed_search)

    p = sub.add_parser('train', help='run one experiment plan')
    _add_plan_args(p)
    p.add_argument('--force', action='store_true', help='rerun a completed plan')
    p.set_defaults(handler=_cmd_train)

    p = sub.add_parser('compare', help='compare a qrng trace with a prng trace')
    p.add_argument('qrng', type=Path)
    p.add_argument('prng', type=Path)
    p.add_argument('--delta-q', type=int)
    p.add_argument('--thresholds', type=_floats)
    p.add_argument('--no-write', action='store_true')
    p.set_defaults(handler=_cmd_compare)

    p = sub.add_parser('grid', help='run every cell of a YAML grid')
    p.add_argument('grid', type=Path)
    p.add_argument('--force', action='store_true')
    p.set_defaults(handler=_cmd_grid)

    p = sub.add_parser('plot-data', help='write summary grids and histograms')
    p.add_argument('--render', action='store_true', help='also write PNG figures')
    p.add_argument('--bins', type=int, default=20)
    p.set_defaults(handler=_cmd_plot_data)

    p = sub.add_parser('bench', help='time weight draws')
    p.add_argument('--dimensions', type=_ints, default=list(DEFAULT_DIMENSIONS))
    p.add_argument('--counts', type=_ints, default=list(DEFAULT_COUNTS))
    p.add_argument(
        '--dist', action='append', choices=['uniform', 'normal', 'truncated_normal']
    )
    p.add_argument('--repeats', type=int, default=5)
    p.set_defaults(handler=_cmd_bench)

    p = sub.add_parser('directions', help='direction-number files')
    dsub = p.add_subparsers(dest='action', required=True, parser_class=_Parser)
    d = dsub.add_parser('export', help="write SciPy's table in direction-file format")
    d.add_argument('path', type=Path)
    d.add_argument('--max-dimension', type=int, default=MAX_DIMENSION)
    d.set_defaults(handler=_cmd_directions_export)
    d = dsub.add_parser('register', help='validate and bundle a direction file')
    d.add_argument('path', type=Path)
    d.add_argument('--name')
    d.set_defaults(handler=_cmd_directions_register)
    return parser


def main(argv: Sequence[str] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = load_settings(
            args.config,
            direction_file=args.direction_file,
            data_dir=args.data_dir,
            out_dir=args.out_dir,
            jobs=args.jobs,
            master_seed=args.master_seed,
            sobol_cache=args.sobol_cache,
            log_level=args.log_level,
        )
        logging.basicConfig(
            level=settings.log_level.upper(), format=LOG_FORMAT, stream=sys.stderr
        )
        timed(label=f"quasinit {args.command}")(args.handler)(args, settings)
    except (QuasinitError, OSError, ValueError) as err:
        logger.debug("command failed", exc_info=True)
        json.dump(
            {
                'error': type(err).__name__,
                'message': str(err),
                'schema_version': SCHEMA_VERSION,
            },
            sys.stderr,
        )
        sys.stderr.write('\n')
        return EX_FAILURE
    return 0
