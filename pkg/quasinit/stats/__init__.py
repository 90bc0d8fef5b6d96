from . import aggregation, hypothesis, metrics, summary
from .aggregation import *
from .hypothesis import *
from .metrics import *
from .summary import *

__all__ = list(
    set(aggregation.__all__)
    | set(hypothesis.__all__)
    | set(metrics.__all__)
    | set(summary.__all__)
)
