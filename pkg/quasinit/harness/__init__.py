from . import bench, comparison, grid, plan, plots, store
from .bench import *
from .comparison import *
from .grid import *
from .plan import *
from .plots import *
from .store import *

__all__ = list(
    set(bench.__all__)
    | set(comparison.__all__)
    | set(grid.__all__)
    | set(plan.__all__)
    | set(plots.__all__)
    | set(store.__all__)
)
