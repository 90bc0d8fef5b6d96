__all__ = [
    'BadMagic',
    'CacheTooLarge',
    'DatasetMissing',
    'DegenerateInput',
    'DimensionBudgetExceeded',
    'DimensionOutOfRange',
    'DomainError',
    'EmptyInput',
    'EmptyRange',
    'InvalidBounds',
    'InvalidM',
    'InvalidSeedSearch',
    'InvalidSigma',
    'LabelOutOfRange',
    'MalformedRow',
    'MetadataMismatch',
    'NonContiguousDimension',
    'NumericalDivergence',
    'PlanError',
    'QuasinitError',
    'RankTooLow',
    'ShapeMismatch',
    'ShapeOverflow',
    'TrainingFailure',
    'TruncatedFile',
    'UnmappedPermutation',
]


class QuasinitError(Exception):
    """Mixin shared by every error raised from :mod:`quasinit`.

    Concrete errors also derive from the closest builtin exception,
    so ``except ValueError`` keeps working for callers that don't care
    about the package hierarchy.
    """


# qmc
class MalformedRow(QuasinitError, ValueError):
    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        super().__init__(f"direction file line {line_no}: {reason}")


class InvalidM(QuasinitError, ValueError):
    def __init__(self, dimension: int, i: int, m: int):
        self.dimension, self.i, self.m = dimension, i, m
        super().__init__(
            f"dimension {dimension}: expected odd m_{i} < {1 << i}, got {m} instead"
        )


class NonContiguousDimension(QuasinitError, ValueError):
    def __init__(self, expected: int, got: int):
        super().__init__(f"expected dimension {expected}, got {got} instead")


class DimensionOutOfRange(QuasinitError, IndexError):
    def __init__(self, k: int, upper: int):
        self.k, self.upper = k, upper
        super().__init__(f"expected dimension in [1, {upper}], got {k} instead")


class CacheTooLarge(QuasinitError, MemoryError):
    def __init__(self, requested: int, budget: int):
        self.requested, self.budget = requested, budget
        super().__init__(
            f"Sobol' cache needs {requested} bytes, budget is {budget} bytes"
        )


# sampling
class DomainError(QuasinitError, ArithmeticError):
    pass


class InvalidBounds(QuasinitError, ValueError):
    pass


class InvalidSigma(QuasinitError, ValueError):
    pass


# initializers
class RankTooLow(QuasinitError, ValueError):
    pass


class DimensionBudgetExceeded(QuasinitError, ValueError):
    pass


# seed search
class EmptyRange(QuasinitError, ValueError):
    pass


class InvalidSeedSearch(QuasinitError, ValueError):
    pass


class TrainingFailure(QuasinitError, RuntimeError):
    pass


# nn
class ShapeMismatch(QuasinitError, ValueError):
    pass


class NumericalDivergence(TrainingFailure):
    def __init__(self, epoch: int, batch: int, accuracies=()):
        self.epoch, self.batch = epoch, batch
        self.accuracies = list(accuracies)
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch}")


# data
class BadMagic(QuasinitError, ValueError):
    pass


class TruncatedFile(QuasinitError, ValueError):
    pass


class ShapeOverflow(QuasinitError, ValueError):
    pass


class LabelOutOfRange(QuasinitError, ValueError):
    pass


class DatasetMissing(QuasinitError, FileNotFoundError):
    pass


# stats
class EmptyInput(QuasinitError, ValueError):
    pass


class DegenerateInput(QuasinitError, ArithmeticError):
    pass


class UnmappedPermutation(QuasinitError, LookupError):
    def __init__(self, s_a, s_e, s_d):
        self.triple = (s_a, s_e, s_d)
        super().__init__(
            f"no final outcome for S_A={s_a}, S_E={s_e}, S_D={s_d}"
        )


# harness
class MetadataMismatch(QuasinitError, ValueError):
    pass


class PlanError(QuasinitError, ValueError):
    pass
