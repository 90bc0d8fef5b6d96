__all__ = [
    'build_model',
    'ForwardPass',
    'MLP',
    'MLP_32_32_WIDTHS',
    'ModelConfig',
    'SINGLE_LAYER_MAX_UNITS',
]

import logging
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import log_softmax, softmax

from .._typing import Arm, FloatArray, ModelVariant, WeightMatrix
from ..errors import ShapeMismatch
from ..initializers import (
    assign_layer_seeds,
    initialize,
    InitializerKind,
    InitializerSpec,
    TensorShape,
)
from ..qmc.sobol import SobolEngine
from ..sampling.sources import PseudoRandomSource, QuasiRandomSource

logger = logging.getLogger(__name__)

SINGLE_LAYER_MAX_UNITS = 70
MLP_32_32_WIDTHS = (32, 32)


@dataclass(frozen=True)
class ModelConfig:
    """Dense ReLU network ending in a softmax over ``output_classes``.

    ``output_initializer``/``output_source`` default to the hidden ones.
    """

    layer_sizes: tuple[int, ...] = MLP_32_32_WIDTHS
    hidden_initializer: InitializerSpec = field(
        default_factory=lambda: InitializerSpec(InitializerKind.GLOROT_UNIFORM)
    )
    output_initializer: InitializerSpec | None = None
    hidden_source: Arm = 'qrng'
    output_source: Arm | None = None
    input_dim: int = 784
    output_classes: int = 10
    variant: ModelVariant | None = None

    def __post_init__(self):
        object.__setattr__(self, 'layer_sizes', tuple(int(u) for u in self.layer_sizes))
        if not self.layer_sizes or min(self.layer_sizes) < 1:
            raise ValueError(f"expected positive layer widths, got {self.layer_sizes}")
        if self.output_initializer is None:
            object.__setattr__(self, 'output_initializer', self.hidden_initializer)
        if self.output_source is None:
            object.__setattr__(self, 'output_source', self.hidden_source)

    @classmethod
    def single_layer(
        cls, units: int, initializer: InitializerSpec, source: Arm, **kwargs
    ) -> 'ModelConfig':
        """One hidden layer of ``units``; the output layer is always
        pseudorandom Glorot uniform."""
        if not 1 <= units <= SINGLE_LAYER_MAX_UNITS:
            raise ValueError(
                f"expected 1 <= units <= {SINGLE_LAYER_MAX_UNITS}, got {units} instead"
            )
        return cls(
            layer_sizes=(units,),
            hidden_initializer=initializer,
            output_initializer=InitializerSpec(InitializerKind.GLOROT_UNIFORM),
            hidden_source=source,
            output_source='prng',
            variant='single_layer',
            **kwargs,
        )

    @classmethod
    def mlp_32_32(cls, initializer: InitializerSpec, source: Arm, **kwargs) -> 'ModelConfig':
        return cls(
            layer_sizes=MLP_32_32_WIDTHS,
            hidden_initializer=initializer,
            hidden_source=source,
            variant='mlp_32_32',
            **kwargs,
        )

    @property
    def layer_shapes(self) -> list[TensorShape]:
        widths = (self.input_dim, *self.layer_sizes, self.output_classes)
        return [TensorShape((a, b)) for a, b in zip(widths, widths[1:])]

    @property
    def layer_initializers(self) -> list[InitializerSpec]:
        n_hidden = len(self.layer_sizes)
        return [self.hidden_initializer] * n_hidden + [self.output_initializer]

    @property
    def layer_sources(self) -> list[Arm]:
        return [self.hidden_source] * len(self.layer_sizes) + [self.output_source]

    def with_source(self, source: Arm) -> 'ModelConfig':
        if self.variant == 'single_layer':
            return replace(self, hidden_source=source)
        return replace(self, hidden_source=source, output_source=source)


class ForwardPass(NamedTuple):
    logits: np.ndarray
    activations: list[np.ndarray]

    @property
    def probabilities(self) -> np.ndarray:
        return softmax(self.logits.astype(np.float64), axis=1)


class MLP:
    """Dense layers with ReLU between them; biases start at zero."""

    def __init__(self, weights: Sequence[WeightMatrix], biases: Sequence[np.ndarray] = None):
        self.weights = [np.array(w) for w in weights]
        if biases is None:
            biases = [np.zeros(w.shape[1], dtype=w.dtype) for w in self.weights]
        self.biases = [np.array(b) for b in biases]
        for w, w_next in zip(self.weights, self.weights[1:]):
            if w.shape[1] != w_next.shape[0]:
                raise ShapeMismatch(
                    f"layer widths do not chain: {w.shape} then {w_next.shape}"
                )
        for w, b in zip(self.weights, self.biases):
            if b.shape != (w.shape[1],):
                raise ShapeMismatch(
                    f"expected bias of shape {(w.shape[1],)}, got {b.shape} instead"
                )

    def __repr__(self):
        widths = [self.input_dim] + [w.shape[1] for w in self.weights]
        return f"{type(self).__name__}({' -> '.join(map(str, widths))})"

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def output_classes(self) -> int:
        return self.weights[-1].shape[1]

    @property
    def dtype(self):
        return self.weights[0].dtype

    @property
    def params(self) -> list[np.ndarray]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def copy(self) -> 'MLP':
        return MLP([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def _check_batch(self, x: np.ndarray, y: np.ndarray = None) -> np.ndarray:
        x = np.asarray(x, dtype=self.dtype)
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise ShapeMismatch(
                f"expected batch of shape (n, {self.input_dim}), got {x.shape} instead"
            )
        if y is not None and np.shape(y) != (x.shape[0], self.output_classes):
            raise ShapeMismatch(
                f"expected labels of shape {(x.shape[0], self.output_classes)}, "
                f"got {np.shape(y)} instead"
            )
        return x

    def forward(self, x: np.ndarray) -> ForwardPass:
        h = self._check_batch(x)
        activations = [h]
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.maximum(h @ w + b, 0)
            activations.append(h)
        logits = h @ self.weights[-1] + self.biases[-1]
        return ForwardPass(logits, activations)

    def loss_and_grads(self, x: np.ndarray, y: np.ndarray) -> tuple[float, list[np.ndarray]]:
        """Mean softmax cross-entropy and its gradients, ordered like :attr:`params`."""
        x = self._check_batch(x, y)
        y = np.asarray(y, dtype=self.dtype)
        fp = self.forward(x)
        log_p = log_softmax(fp.logits.astype(np.float64), axis=1)
        loss = float(-np.mean(np.sum(y * log_p, axis=1)))
        delta = ((np.exp(log_p) - y) / x.shape[0]).astype(self.dtype)
        grads = []
        for i in range(len(self.weights) - 1, -1, -1):
            h = fp.activations[i]
            grads.append(delta.sum(axis=0))
            grads.append(h.T @ delta)
            if i:
                delta = (delta @ self.weights[i].T) * (h > 0)
        return loss, grads[::-1]

    def backward(self, x: np.ndarray, y: np.ndarray) -> list[np.ndarray]:
        return self.loss_and_grads(x, y)[1]

    def loss(self, x: np.ndarray, y: np.ndarray) -> float:
        x = self._check_batch(x, y)
        log_p = log_softmax(self.forward(x).logits.astype(np.float64), axis=1)
        return float(-np.mean(np.sum(np.asarray(y) * log_p, axis=1)))

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(self.forward(x).logits, axis=1)

    def accuracy(self, x: np.ndarray, y: np.ndarray, *, batch_size: int = 10000) -> float:
        y_idx = np.argmax(np.asarray(y), axis=1)
        hits = 0
        for lo in range(0, len(y_idx), batch_size):
            hits += int(np.sum(self.predict(x[lo : lo + batch_size]) == y_idx[lo : lo + batch_size]))
        return hits / len(y_idx)


def build_model(
    cfg: ModelConfig,
    *,
    nu: int = 1,
    layer_seeds: Sequence[int] = None,
    engine: SobolEngine = None,
    dtype=np.float32,
) -> tuple[MLP, list[dict]]:
    """Initialize every layer of ``cfg``.

    Quasirandom layers take consecutive Sobol' dimensions starting at ``nu``;
    pseudorandom layer ``i`` is seeded with ``layer_seeds[i]``.

    Returns the model and one provenance record per layer.
    """
    shapes = cfg.layer_shapes
    kinds = cfg.layer_sources
    n_qrng = kinds.count('qrng')
    dims = iter(assign_layer_seeds(nu, n_qrng) if n_qrng else ())
    if layer_seeds is None:
        layer_seeds = list(range(len(shapes)))
    if len(layer_seeds) < len(shapes):
        raise ValueError(
            f"expected {len(shapes)} layer seeds, got {len(layer_seeds)} instead"
        )
    if n_qrng and engine is None:
        engine = SobolEngine(nu + n_qrng - 1)
    weights, provenance = [], []
    for i, (shape, spec, kind) in enumerate(zip(shapes, cfg.layer_initializers, kinds)):
        if kind == 'qrng':
            src = QuasiRandomSource(engine, next(dims))
        else:
            src = PseudoRandomSource(layer_seeds[i])
        tensor = initialize(spec, shape, src)
        if not tensor.finite:
            raise FloatingPointError(f"non-finite weights in layer {i} from {src!r}")
        weights.append(tensor.values.astype(dtype))
        provenance.append(
            {
                'layer': i,
                'shape': list(shape.dims),
                'initializer': str(spec.kind),
                'source': kind,
                'dimension': tensor.source_dimension,
                'seed': tensor.seed,
            }
        )
    logger.debug("built %s with layers %s", cfg.variant or 'model', provenance)
    return MLP(weights), provenance
