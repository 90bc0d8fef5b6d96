__all__ = [
    'Adam',
    'adam_step',
    'AdamState',
    'init_state',
    'optimizer_from_name',
    'SGD',
    'sgd_step',
    'SGDState',
    'step',
]

from dataclasses import dataclass, field

import numpy as np

from .._typing import OptimizerName

DEFAULT_LR = 1e-4


@dataclass(frozen=True)
class SGD:
    lr: float = DEFAULT_LR
    momentum: float = 0.0

    @property
    def name(self) -> OptimizerName:
        return 'sgd'


@dataclass(frozen=True)
class Adam:
    lr: float = DEFAULT_LR
    beta_1: float = 0.9
    beta_2: float = 0.999
    epsilon: float = 1e-7

    @property
    def name(self) -> OptimizerName:
        return 'adam'


@dataclass
class SGDState:
    velocity: list[np.ndarray] = field(default_factory=list)


@dataclass
class AdamState:
    t: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)


def optimizer_from_name(name: OptimizerName, lr: float = DEFAULT_LR) -> SGD | Adam:
    match name:
        case 'sgd':
            return SGD(lr)
        case 'adam':
            return Adam(lr)
    raise ValueError(f"expected 'sgd' or 'adam', got {name!r} instead")


def init_state(cfg: SGD | Adam, params: list[np.ndarray]) -> SGDState | AdamState:
    if isinstance(cfg, Adam):
        return AdamState(
            0, [np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params]
        )
    if cfg.momentum:
        return SGDState([np.zeros_like(p) for p in params])
    return SGDState()


def sgd_step(
    params: list[np.ndarray], grads: list[np.ndarray], state: SGDState, cfg: SGD
) -> tuple[list[np.ndarray], SGDState]:
    """``p <- p - lr * g``; with momentum ``v <- momentum * v - lr * g; p <- p + v``.

    Parameters are updated in place.
    """
    if cfg.momentum:
        if not state.velocity:
            state.velocity = [np.zeros_like(p) for p in params]
        for p, g, v in zip(params, grads, state.velocity):
            v *= cfg.momentum
            v -= cfg.lr * g
            p += v
    else:
        for p, g in zip(params, grads):
            p -= cfg.lr * g
    return params, state


def adam_step(
    params: list[np.ndarray], grads: list[np.ndarray], state: AdamState, cfg: Adam
) -> tuple[list[np.ndarray], AdamState]:
    """Bias-corrected Adam; ``epsilon`` is added after the square root."""
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    state.t += 1
    c1 = 1.0 - cfg.beta_1**state.t
    c2 = 1.0 - cfg.beta_2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= cfg.beta_1
        m += (1.0 - cfg.beta_1) * g
        v *= cfg.beta_2
        v += (1.0 - cfg.beta_2) * np.square(g)
        p -= cfg.lr * (m / c1) / (np.sqrt(v / c2) + cfg.epsilon)
    return params, state


def step(params, grads, state, cfg):
    if isinstance(cfg, Adam):
        return adam_step(params, grads, state, cfg)
    return sgd_step(params, grads, state, cfg)
