try:
    from ._version import version as __version__
except ImportError:
    __version__ = "0.0.0"

from . import data, harness, nn, qmc, sampling, stats
from .config import load_settings, Settings
from .data import DirectionFile, register_direction_file
from .initializers import (
    assign_layer_seeds,
    initialize,
    InitializerKind,
    InitializerSpec,
    TensorShape,
    WeightTensor,
)
from .mnist import load_mnist
from .nn import AccuracyTrace, build_model, MLP, ModelConfig, train, TrainConfig
from .qmc import build_cache, load_direction_table, SobolEngine, sobol_draw
from .sampling import (
    inverse_normal_cdf,
    Normal,
    PseudoRandomSource,
    QuasiRandomSource,
    sample,
    TruncatedNormal,
    Uniform,
)
from .seed_select import select_seed, SeedSearchConfig
from .stats import aggregate, classify, compare_accuracies, ComparisonResult

__all__ = []
