__all__ = [
    'ExperimentPlan',
    'make_executor',
    'PLAN_FACETS',
    'repetition_seeds',
    'run_plan',
    'RunOutcome',
    'u_sequence',
]

import hashlib
import json
import logging
import os
from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Literal, NotRequired, TypedDict

import numpy as np

from .._typing import Arm, is_matching_typed_dict, ModelVariant, OptimizerName, SeedPolicy
from ..errors import PlanError, TrainingFailure
from ..initializers import InitializerKind, InitializerSpec
from ..mnist import Dataset
from ..nn.model import build_model, MLP, ModelConfig, SINGLE_LAYER_MAX_UNITS
from ..nn.optim import optimizer_from_name
from ..nn.training import AccuracyTrace, train, TrainConfig
from ..qmc.directions import load_direction_table
from ..qmc.sobol import SobolEngine
from ..sampling.sources import derive_seed
from ..seed_select import select_seed, SeedSearchConfig
from . import store

logger = logging.getLogger(__name__)

# fields shared by both arms of a comparison pair
PLAN_FACETS = (
    'dataset',
    'model',
    'units',
    'optimizer',
    'initializer',
    'repetitions',
    'epochs',
    'batch_size',
    'learning_rate',
    'master_seed',
)


class _PlanDocument(TypedDict):
    dataset: NotRequired[str]
    model: NotRequired[ModelVariant]
    units: NotRequired[int | None]
    optimizer: NotRequired[OptimizerName]
    initializer: NotRequired[str]
    arm: NotRequired[Arm]
    seed_policy: NotRequired[SeedPolicy]
    nu: NotRequired[int]
    seed_search: NotRequired[dict[str, int | bool]]
    repetitions: NotRequired[int]
    epochs: NotRequired[int]
    batch_size: NotRequired[int]
    learning_rate: NotRequired[float]
    master_seed: NotRequired[int]


@dataclass(frozen=True)
class ExperimentPlan:
    """Everything needed to re-run one experiment arm.

    The pseudorandom arm ignores ``seed_policy``, ``nu`` and ``seed_search``;
    they are normalized so equal experiments hash equally.
    """

    model: ModelVariant = 'mlp_32_32'
    initializer: InitializerKind = InitializerKind.GLOROT_UNIFORM
    optimizer: OptimizerName = 'adam'
    arm: Arm = 'qrng'
    seed_policy: SeedPolicy = 'fixed'
    nu: int = 1
    units: int | None = None
    repetitions: int = 100
    epochs: int = 30
    batch_size: int = 64
    learning_rate: float = 1e-4
    master_seed: int = 0
    dataset: str = 'mnist'
    seed_search: SeedSearchConfig = field(default_factory=SeedSearchConfig)

    def __post_init__(self):
        try:
            object.__setattr__(self, 'initializer', InitializerKind(self.initializer))
        except ValueError:
            raise PlanError(f"unknown initializer {self.initializer!r}") from None
        if self.dataset != 'mnist':
            raise PlanError(f"expected dataset 'mnist', got {self.dataset!r} instead")
        if self.model not in ('single_layer', 'mlp_32_32'):
            raise PlanError(f"unknown model variant {self.model!r}")
        if self.arm not in ('qrng', 'prng'):
            raise PlanError(f"expected arm 'qrng' or 'prng', got {self.arm!r} instead")
        if self.seed_policy not in ('fixed', 'auto'):
            raise PlanError(f"expected seed policy 'fixed' or 'auto', got {self.seed_policy!r}")
        if self.optimizer not in ('sgd', 'adam'):
            raise PlanError(f"expected optimizer 'sgd' or 'adam', got {self.optimizer!r}")
        if self.repetitions < 1 or self.epochs < 1 or self.batch_size < 1:
            raise PlanError("repetitions, epochs and batch_size must be >= 1")
        if self.model == 'single_layer' and not (
            isinstance(self.units, int) and 1 <= self.units <= SINGLE_LAYER_MAX_UNITS
        ):
            raise PlanError(
                f"the single_layer model needs 1 <= units <= {SINGLE_LAYER_MAX_UNITS}, "
                f"got {self.units!r} instead"
            )
        if self.model == 'mlp_32_32' and self.units is not None:
            raise PlanError("the mlp_32_32 model has fixed widths; drop 'units'")
        if self.nu < 1:
            raise PlanError(f"expected nu >= 1, got {self.nu} instead")
        if self.arm == 'prng':
            object.__setattr__(self, 'seed_policy', 'fixed')
            object.__setattr__(self, 'nu', 1)
            object.__setattr__(self, 'seed_search', SeedSearchConfig())

    def to_dict(self) -> dict[str, Any]:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d['initializer'] = str(self.initializer)
        d['seed_search'] = asdict(self.seed_search)
        return d

    @classmethod
    def from_dict(cls, doc: dict) -> 'ExperimentPlan':
        ok, msg = is_matching_typed_dict(doc, _PlanDocument)
        if not ok:
            raise PlanError(msg)
        doc = dict(doc)
        if (search := doc.get('seed_search')) is not None:
            try:
                doc['seed_search'] = SeedSearchConfig(**search)
            except TypeError as err:
                raise PlanError(f"seed_search: {err}") from None
        return cls(**doc)

    def plan_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]

    def facets(self) -> dict[str, Any]:
        d = self.to_dict()
        return {k: d[k] for k in PLAN_FACETS}

    def counterpart(self, arm: Arm) -> 'ExperimentPlan':
        return replace(self, arm=arm)

    def model_config(self) -> ModelConfig:
        spec = InitializerSpec(self.initializer)
        if self.model == 'single_layer':
            return ModelConfig.single_layer(self.units, spec, self.arm)
        return ModelConfig.mlp_32_32(spec, self.arm)

    def train_config(self, shuffle_seed: int, epochs: int = None) -> TrainConfig:
        return TrainConfig(
            optimizer=optimizer_from_name(self.optimizer, self.learning_rate),
            epochs=epochs or self.epochs,
            batch_size=self.batch_size,
            shuffle_seed=shuffle_seed,
        )


def repetition_seeds(master_seed: int, repetition: int, layers: int) -> dict[str, Any]:
    """Shuffle seed and per-layer pseudorandom seeds of one repetition.

    Layer seeds start at a base derived from ``(master_seed, repetition)`` and
    increase by one per layer.
    """
    base = derive_seed(master_seed, repetition, 'layers')
    return {
        'shuffle_seed': derive_seed(master_seed, repetition, 'shuffle'),
        'layer_seeds': [(base + i) & 0xFFFFFFFF for i in range(layers)],
    }


def u_sequence(units: int) -> Literal['odd', 'even_2mod4', 'even_0mod4']:
    """Group of a single-layer width: odd, 2 mod 4 (2, 6, 10, ...) or 0 mod 4.

    >>> [u_sequence(u) for u in (31, 30, 32)]
    ['odd', 'even_2mod4', 'even_0mod4']
    """
    if units < 1:
        raise PlanError(f"expected units >= 1, got {units} instead")
    if units % 2:
        return 'odd'
    return 'even_2mod4' if units % 4 == 2 else 'even_0mod4'


@dataclass
class RunOutcome:
    trace: AccuracyTrace
    manifest: dict
    path: Path
    skipped: bool = False


_worker: dict[str, Any] = {}


def _init_worker(dataset: Dataset, direction_file: str | None, cache: tuple | None):
    _worker['dataset'] = dataset
    _worker['engine'] = _make_engine(direction_file, cache)


def _make_engine(direction_file, cache) -> SobolEngine:
    engine = SobolEngine(table=load_direction_table(direction_file))
    if cache:
        engine.build_cache(*cache)
    return engine


def make_executor(
    jobs: int, dataset: Dataset, direction_file=None, cache: tuple[int, int] = None
) -> Executor | None:
    """Process pool whose workers each hold the dataset and their own engine.

    Returns None for ``jobs == 1``; callers then run in-process.
    """
    if jobs <= 1:
        return None
    path = None if direction_file is None else os.fspath(direction_file)
    return ProcessPoolExecutor(
        max_workers=jobs, initializer=_init_worker, initargs=(dataset, path, cache)
    )


def _repetition(
    plan: ExperimentPlan,
    repetition: int,
    nu: int,
    warm: MLP | None,
    dataset: Dataset,
    engine: SobolEngine,
) -> dict:
    model_cfg = plan.model_config()
    seeds = repetition_seeds(plan.master_seed, repetition, len(model_cfg.layer_shapes))
    if warm is not None:
        model, provenance = warm.copy(), [{'warm_start': True, 'nu': nu}]
    else:
        model, provenance = build_model(
            model_cfg, nu=nu, layer_seeds=seeds['layer_seeds'], engine=engine
        )
    record = {'repetition': repetition, **seeds, 'layers': provenance}
    try:
        accuracies = train(
            model, dataset.train, dataset.test, plan.train_config(seeds['shuffle_seed'])
        )
        record['accuracies'] = np.round(accuracies, 6).tolist()
    except TrainingFailure as err:
        logger.warning("repetition %d failed: %s", repetition, err)
        record['accuracies'] = np.round(getattr(err, 'accuracies', []), 6).tolist()
        record['failure'] = f"{type(err).__name__}: {err}"
    return record


def _worker_repetition(plan, repetition, nu, warm) -> dict:
    return _repetition(plan, repetition, nu, warm, _worker['dataset'], _worker['engine'])


def run_plan(
    plan: ExperimentPlan,
    dataset: Dataset,
    out_dir: str | os.PathLike,
    *,
    engine: SobolEngine = None,
    executor: Executor = None,
    skip_existing: bool = True,
) -> RunOutcome:
    """Run every repetition of ``plan`` and persist ``trace.csv`` and ``manifest.json``.

    The quasirandom arm with the ``auto`` policy first runs the seed search and
    records the chosen ``nu`` and its epoch penalty ``delta_q``; every other arm
    has ``delta_q = 0``. Repetitions run on ``executor`` when given; results do
    not depend on it.
    """
    path = Path(out_dir) / plan.plan_hash()
    if skip_existing and (existing := store.completed_run(path, plan.to_dict())):
        logger.info("plan %s already complete; skipping", path.name)
        return RunOutcome(*existing, path, skipped=True)
    engine = engine or SobolEngine()

    nu, delta_q, search, warm = plan.nu, 0, None, None
    if plan.arm == 'qrng' and plan.seed_policy == 'auto':
        result = select_seed(
            plan.seed_search,
            plan.model_config(),
            dataset.train,
            dataset.test,
            derive_seed(plan.master_seed, 'seed-search'),
            train_cfg=plan.train_config(0),
            engine=engine,
        )
        nu, delta_q, search, warm = result.nu, result.delta_q, result.to_dict(), result.best_model

    logger.info(
        "running plan %s (%s, %s, %s, %s) x %d",
        path.name,
        plan.model,
        plan.initializer,
        plan.optimizer,
        plan.arm,
        plan.repetitions,
    )
    if executor is None:
        records = [
            _repetition(plan, r, nu, warm, dataset, engine)
            for r in range(plan.repetitions)
        ]
    else:
        futures = [
            executor.submit(_worker_repetition, plan, r, nu, warm)
            for r in range(plan.repetitions)
        ]
        records = [f.result() for f in futures]

    trace = AccuracyTrace.from_rows(
        [rec.pop('accuracies') for rec in records],
        plan.epochs,
        meta={
            'plan': plan.to_dict(),
            'plan_hash': path.name,
            'arm': plan.arm,
            'delta_q': delta_q,
        },
    )
    trace.failures = {rec['repetition']: rec['failure'] for rec in records if 'failure' in rec}
    manifest = store.run_manifest(
        plan=plan.to_dict(),
        plan_hash=path.name,
        nu=nu if plan.arm == 'qrng' else None,
        delta_q=delta_q,
        seed_search=search,
        repetitions=records,
        failures=trace.failures,
        direction_table={'source': Path(engine.table.source).name, 'max_dimension': engine.table.max_dimension},
    )
    store.write_run(path, trace, manifest)
    return RunOutcome(trace, manifest, path)
