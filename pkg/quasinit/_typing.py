from __future__ import annotations

from types import UnionType
from typing import (
    Any,
    get_args,
    get_origin,
    get_type_hints,
    Literal,
    Sequence,
    TypeVar,
    Union,
)

import numpy as np
from numpy import dtype, float32, float64, generic, ndarray, uint32
from numpy.typing import NDArray

_T = TypeVar('_T')

type ShapedNDArray[_Shape: tuple[int, ...], _SCT: generic] = ndarray[
    _Shape, dtype[_SCT]
]
type MatrixLike[_SCT: generic] = ShapedNDArray[TupleOf2[int], _SCT]
type VectorLike[_SCT: generic] = ShapedNDArray[tuple[int], _SCT]
type TupleOf2[_T] = tuple[_T, _T]
FloatVector = VectorLike[float64]
FloatMatrix = MatrixLike[float64]
WeightMatrix = MatrixLike[float32]
Uint32Vector = VectorLike[uint32]
Uint32Matrix = MatrixLike[uint32]
FloatArray = NDArray[float64]
FloatSequence = Sequence[float]
IntSequence = Sequence[int]

Arm = Literal['qrng', 'prng']
SeedPolicy = Literal['fixed', 'auto']
ModelVariant = Literal['single_layer', 'mlp_32_32']
OptimizerName = Literal['sgd', 'adam']
DistributionName = Literal['uniform', 'normal', 'truncated_normal']
Alternative = Literal['less', 'greater']


def deconstruct_type(tp):
    origin = get_origin(tp) or tp
    return origin, get_args(tp)


def is_matching_type(value, typ) -> bool:
    """Structural ``isinstance`` for the subset of typing constructs used by plan schemas.

    ``int`` values satisfy ``float`` (YAML writes ``1`` for ``1.0``), ``bool`` never
    satisfies ``int``.
    """
    if typ is Any:
        return True
    origin, args = deconstruct_type(typ)
    if origin in (Union, UnionType):
        return any(is_matching_type(value, arg) for arg in args)
    if origin is Literal:
        return value in args
    if origin is list:
        return isinstance(value, list) and (
            not args or all(is_matching_type(v, args[0]) for v in value)
        )
    if origin is dict:
        if not isinstance(value, dict):
            return False
        if not args:
            return True
        key_type, val_type = args
        return all(
            is_matching_type(k, key_type) and is_matching_type(v, val_type)
            for k, v in value.items()
        )
    if origin is tuple:
        if not isinstance(value, (tuple, list)):
            return False
        if len(args) == 2 and args[1] is ...:
            return all(is_matching_type(v, args[0]) for v in value)
        return len(value) == len(args) and all(
            is_matching_type(v, t) for v, t in zip(value, args)
        )
    if typ is float:
        return isinstance(value, (int, float, np.floating, np.integer)) and not (
            isinstance(value, bool)
        )
    if typ is int:
        return isinstance(value, (int, np.integer)) and not isinstance(value, bool)
    try:
        return isinstance(value, typ)
    except TypeError:
        return False


def type_error_msg(err_obj, *expected, context: str = '', obj_repr=False):
    names = [getattr(t, '__qualname__', None) or repr(t) for t in expected]
    if len(names) > 1:
        names[-1] = f"or {names[-1]}"
    joined = (', ' if len(names) > 2 else ' ').join(map(repr, names))
    if context:
        joined = f"{context.strip()} {joined}"
    if obj_repr:
        oops = err_obj if isinstance(err_obj, str) else repr(err_obj)
    else:
        oops = repr((err_obj if isinstance(err_obj, type) else type(err_obj)).__qualname__)
    return f"expected {joined}, got {oops} instead"


def is_matching_typed_dict(__d: dict, typed_dict: type[dict]) -> tuple[bool, str]:
    if not isinstance(__d, dict):
        return False, type_error_msg(__d, dict)
    expected = get_type_hints(typed_dict)
    if unexpected := __d.keys() - expected.keys():
        return False, f"unexpected keys: {sorted(unexpected)}"
    required = getattr(typed_dict, '__required_keys__', expected.keys())
    if missing := set(required) - __d.keys():
        return False, f"missing required keys: {sorted(missing)}"
    for name, typ in expected.items():
        if (field := __d.get(name)) is not None and not is_matching_type(field, typ):
            return False, type_error_msg(field, typ, context=f'key {name!r} of type')
    return True, ''
