from . import distributions, sources
from .distributions import *
from .sources import *

__all__ = list(set(distributions.__all__) | set(sources.__all__))
