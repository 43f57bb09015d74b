"""Type definitions of the mini IR: scalars, records and value type strings."""

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Optional, Tuple

SCALAR_SIZES = {"i8": 1, "i16": 2, "i32": 4, "i64": 8}
POINTER_SIZE = 8
RANGE_TYPE = "range"
VOID_TYPE = "void"


class TypeKind(Enum):
    SCALAR = "scalar"
    RECORD = "record"
    FLEXIBLE = "flexible-record"


@dataclass(frozen=True)
class FieldDef:
    """One record field. ``is_array`` marks the dynamic tail of a flexible record."""

    name: str
    elem_type: str
    offset: int
    is_array: bool = False


@dataclass(frozen=True)
class TypeDef:
    name: str
    kind: TypeKind
    fields: Tuple[FieldDef, ...]
    byte_size: int
    alignment: int

    @property
    def is_record(self) -> bool:
        return self.kind is not TypeKind.SCALAR

    @property
    def is_flexible(self) -> bool:
        return self.kind is TypeKind.FLEXIBLE

    def tail_field(self) -> Optional[FieldDef]:
        if self.fields and self.fields[-1].is_array:
            return self.fields[-1]
        return None


SCALAR_TYPES = {
    name: TypeDef(name, TypeKind.SCALAR, (), size, size)
    for name, size in SCALAR_SIZES.items()
}


def is_pointer(type_str: Optional[str]) -> bool:
    return bool(type_str) and type_str.endswith("*")  # type: ignore[union-attr]


def is_integer(type_str: Optional[str]) -> bool:
    return type_str in SCALAR_SIZES


def pointee(type_str: str) -> str:
    if not is_pointer(type_str):
        raise ValueError(f"Not a pointer type: {type_str}")
    return type_str[:-1]


def pointer_to(type_str: str) -> str:
    return f"{type_str}*"


def base_name(type_str: str) -> str:
    """Strip every pointer level: ``Obj**`` -> ``Obj``."""
    return type_str.rstrip("*")


def size_of(type_str: str, types: Mapping[str, TypeDef]) -> int:
    """Byte size of a value type string.

    Pointers are 8 bytes; records report their fixed byte_size.
    """
    if is_pointer(type_str):
        return POINTER_SIZE
    if type_str in SCALAR_SIZES:
        return SCALAR_SIZES[type_str]
    typedef = types.get(type_str)
    if typedef is None:
        raise KeyError(type_str)
    return typedef.byte_size


def align_of(type_str: str, types: Mapping[str, TypeDef]) -> int:
    if is_pointer(type_str):
        return POINTER_SIZE
    if type_str in SCALAR_SIZES:
        return SCALAR_SIZES[type_str]
    return types[type_str].alignment


def record_alignment(fields: Tuple[FieldDef, ...], types: Mapping[str, TypeDef]) -> int:
    alignment = 1
    for field in fields:
        try:
            alignment = max(alignment, align_of(field.elem_type, types))
        except KeyError:
            continue
    return alignment
