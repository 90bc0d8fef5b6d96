from . import model, optim, training
from .model import *
from .optim import *
from .training import *

__all__ = list(set(model.__all__) | set(optim.__all__) | set(training.__all__))
