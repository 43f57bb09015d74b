"""Base-pointer tracing and heap-origin classification."""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Set, Tuple

from ir.model import (ALLOCATORS, Const, Function, GlobalRef, Operand, Param,
                      Program, Value)


class Origin(Enum):
    HEAP = "heap"
    STATIC = "stack/global"
    UNKNOWN = "unknown"


class HeapClass(Enum):
    HEAP = "heap"
    NON_HEAP = "non-heap"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class BaseInfo:
    """Originating value of a pointer and the ptradd/cast steps leading to it.

    ``chain`` lists the traversed values from the traced pointer backwards.
    ``cumulative_static_offset`` is None once any ptradd in the chain is dynamic.
    """

    base: Operand
    origin: Origin
    chain: Tuple[str, ...]
    cumulative_static_offset: Optional[int]


def trace_base(fn: Function, value: Operand) -> BaseInfo:
    return _trace(fn, value, set())


def _trace(fn: Function, value: Operand, visiting: Set[str]) -> BaseInfo:
    chain = []
    offset: Optional[int] = 0
    current = value
    while True:
        if isinstance(current, GlobalRef):
            return BaseInfo(current, Origin.STATIC, tuple(chain), offset)
        if isinstance(current, Const):
            return BaseInfo(current, Origin.UNKNOWN, tuple(chain), offset)
        definition = fn.definitions.get(current.name)
        if definition is None or isinstance(definition, Param):
            return BaseInfo(current, Origin.UNKNOWN, tuple(chain), offset)
        if definition.opcode == "ptradd":
            chain.append(current.name)
            step = definition.static_offset
            offset = offset + step if offset is not None and step is not None else None
            current = definition.args[0]
            continue
        if definition.opcode == "cast":
            chain.append(current.name)
            current = definition.args[0]
            continue
        if definition.opcode in ALLOCATORS:
            origin = Origin.HEAP
        elif definition.opcode == "slot":
            origin = Origin.STATIC
        elif definition.opcode == "phi":
            origin = _phi_origin(fn, current.name, visiting)
        else:
            origin = Origin.UNKNOWN
        return BaseInfo(current, origin, tuple(chain), offset)


def _phi_origin(fn: Function, name: str, visiting: Set[str]) -> Origin:
    if name in visiting:
        # a back edge to a phi being resolved contributes nothing
        return Origin.UNKNOWN
    visiting.add(name)
    phi = fn.definitions[name]
    origins = set()
    for arg in phi.args:  # type: ignore[union-attr]
        if isinstance(arg, Value) and arg.name in visiting:
            continue
        info = _trace(fn, arg, visiting)
        if isinstance(info.base, Value) and info.base.name in visiting:
            continue
        origins.add(info.origin)
    visiting.discard(name)
    if len(origins) == 1:
        return origins.pop()
    return Origin.UNKNOWN


def is_heap_pointer(fn: Function, value: Operand) -> HeapClass:
    """Classify a pointer; instrumentation treats UNKNOWN like HEAP."""
    origin = trace_base(fn, value).origin
    if origin is Origin.HEAP:
        return HeapClass.HEAP
    if origin is Origin.STATIC:
        return HeapClass.NON_HEAP
    return HeapClass.UNKNOWN


def operand_type(program: Program, fn: Function, operand: Operand) -> str:
    if isinstance(operand, Value):
        return fn.value_types.get(operand.name, "")
    if isinstance(operand, GlobalRef):
        return program.global_map[operand.name].type
    return "i64"
