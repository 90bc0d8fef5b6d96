"""Automatic choice of the starting Sobol' dimension.

``X`` candidate dimensions are sampled without replacement from ``[W, Z]`` and
sorted; each is trained ``R`` times for ``Y`` epochs and the first candidate with
the strictly best test accuracy wins. The search costs the quasirandom arm
``Y * (X * R - 1)`` extra epochs.
"""

__all__ = ['CandidateRun', 'SeedSearchConfig', 'SeedSearchResult', 'select_seed']

import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import EmptyRange, InvalidSeedSearch, TrainingFailure
from .nn.model import build_model, MLP, ModelConfig
from .nn.training import train, TrainConfig
from .qmc.directions import MAX_DIMENSION
from .qmc.sobol import SobolEngine
from .sampling.sources import derive_seed

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SeedSearchConfig:
    W: int = 1
    Z: int = 10
    X: int = 5
    Y: int = 1
    R: int = 1
    warm_start: bool = False

    def __post_init__(self):
        if not 1 <= self.W <= self.Z <= MAX_DIMENSION:
            raise InvalidSeedSearch(
                f"expected 1 <= W <= Z <= {MAX_DIMENSION}, got W={self.W}, Z={self.Z}"
            )
        if self.X < 1 or self.Y < 1 or self.R < 1:
            raise InvalidSeedSearch(
                f"expected X, Y, R >= 1, got X={self.X}, Y={self.Y}, R={self.R}"
            )
        if self.X > self.Z - self.W + 1:
            raise EmptyRange(
                f"cannot sample {self.X} distinct seeds from [{self.W}, {self.Z}]"
            )

    @classmethod
    def parse(cls, text: str, **kwargs) -> 'SeedSearchConfig':
        """Build from ``"W,Z,X,Y,R"``."""
        try:
            w, z, x, y, r = (int(v) for v in text.split(','))
        except ValueError:
            raise InvalidSeedSearch(
                f"expected 'W,Z,X,Y,R' as five integers, got {text!r} instead"
            ) from None
        return cls(w, z, x, y, r, **kwargs)

    @property
    def delta_q(self) -> int:
        return self.Y * (self.X * self.R - 1)


@dataclass(frozen=True)
class CandidateRun:
    seed: int
    repeat: int
    metric: float


@dataclass
class SeedSearchResult:
    nu: int
    best_metric: float
    delta_q: int
    candidates: list[CandidateRun] = field(default_factory=list)
    best_model: MLP | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            'nu': self.nu,
            'best_metric': self.best_metric,
            'delta_q': self.delta_q,
            'candidates': [asdict(c) for c in self.candidates],
        }


type Trainer = Callable[[int, int], tuple[float, MLP | None]]


def _default_trainer(
    model_cfg: ModelConfig,
    train_data,
    test_data,
    train_cfg: TrainConfig,
    trial_rng_seed: int,
    epochs: int,
    engine: SobolEngine = None,
) -> Trainer:
    engine = engine or SobolEngine()

    def run(seed: int, repeat: int) -> tuple[float, MLP]:
        layer_seeds = [
            (derive_seed(trial_rng_seed, seed, repeat, 'layers') + i) & 0xFFFFFFFF
            for i in range(len(model_cfg.layer_shapes))
        ]
        model, _ = build_model(model_cfg, nu=seed, layer_seeds=layer_seeds, engine=engine)
        cfg = replace(
            train_cfg,
            epochs=epochs,
            shuffle_seed=derive_seed(trial_rng_seed, seed, repeat, 'shuffle'),
        )
        return float(train(model, train_data, test_data, cfg)[-1]), model

    return run


def select_seed(
    cfg: SeedSearchConfig,
    model_cfg: ModelConfig,
    train_data,
    test_data,
    trial_rng_seed: int,
    *,
    train_cfg: TrainConfig = None,
    trainer: Trainer = None,
    engine: SobolEngine = None,
) -> SeedSearchResult:
    """Pick a starting dimension ``nu`` for the quasirandom layers.

    Parameters
    ----------
    cfg : SeedSearchConfig
        Search bounds ``W, Z``, candidate count ``X``, trial epochs ``Y`` and
        repeats ``R``.
    model_cfg : ModelConfig
        Network to initialize for each trial.
    train_data, test_data
        ``(x, y)`` pairs.
    trial_rng_seed : int
        Seed of the candidate-sampling stream. That stream is used for nothing
        else, so the search does not perturb the training streams.
    train_cfg : TrainConfig, optional
        Optimizer and batch size of the trials; epochs are replaced by ``Y``.
    trainer : callable, optional
        ``trainer(seed, repeat) -> (metric, model)``; replaces the default
        build-and-train step.
    engine : SobolEngine, optional
        Engine over the configured direction table; the bundled table by default.

    Returns
    -------
    SeedSearchResult
        Best seed ``nu`` (smallest seed on ties), its metric, ``delta_q`` and
        every candidate's metric.
    """
    rng = np.random.RandomState(trial_rng_seed & 0xFFFFFFFF)
    seeds = sorted(
        int(s) for s in rng.choice(np.arange(cfg.W, cfg.Z + 1), cfg.X, replace=False)
    )
    if trainer is None:
        trainer = _default_trainer(
            model_cfg,
            train_data,
            test_data,
            train_cfg or TrainConfig(),
            trial_rng_seed,
            cfg.Y,
            engine,
        )
    nu, best_metric, best_model = None, None, None
    candidates = []
    for seed in seeds:
        for repeat in range(cfg.R):
            try:
                metric, model = trainer(seed, repeat)
            except TrainingFailure as err:
                err.add_note(f"seed search candidate {seed}, repeat {repeat}")
                raise
            candidates.append(CandidateRun(seed, repeat, float(metric)))
            logger.info("seed %d repeat %d: metric %.4f", seed, repeat, metric)
            if best_metric is None or best_metric < metric:
                nu, best_metric, best_model = seed, float(metric), model
    logger.info("selected nu=%d (metric %.4f), delta_q=%d", nu, best_metric, cfg.delta_q)
    return SeedSearchResult(
        nu,
        best_metric,
        cfg.delta_q,
        candidates,
        best_model if cfg.warm_start else None,
    )
