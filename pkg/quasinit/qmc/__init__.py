from . import directions, discrepancy, sobol
from .directions import *
from .discrepancy import *
from .sobol import *

__all__ = list(set(directions.__all__) | set(discrepancy.__all__) | set(sobol.__all__))
