from runtime.allocator import (
    DEFAULT_HEAP_LIMIT,
    FULL_RANGE,
    HeapRuntime,
    ObjectRange,
    object_size_for,
    static_range,
)
from runtime.errors import (
    DoubleFreeError,
    HeapViolation,
    InvalidFreeError,
    OutOfBoundsError,
    StaleObjectError,
    UnmappedAccessError,
)
from runtime.escapes import DEFAULT_CACHE_CAP, EscapeCache
from runtime.memory import (
    ADDRESS_MASK,
    GLOBAL_BASE,
    HEAP_BASE,
    POISON,
    STACK_BASE,
    Region,
    SimMemory,
)
from runtime.sizeclass import PAGE_SIZE, SIZE_CLASSES, size_class
from runtime.span import EscapeRecord, Span
from runtime.stats import RuntimeStats

__all__ = [
    "ADDRESS_MASK",
    "DEFAULT_CACHE_CAP",
    "DEFAULT_HEAP_LIMIT",
    "FULL_RANGE",
    "GLOBAL_BASE",
    "HEAP_BASE",
    "PAGE_SIZE",
    "POISON",
    "SIZE_CLASSES",
    "STACK_BASE",
    "DoubleFreeError",
    "EscapeCache",
    "EscapeRecord",
    "HeapRuntime",
    "HeapViolation",
    "InvalidFreeError",
    "ObjectRange",
    "OutOfBoundsError",
    "Region",
    "RuntimeStats",
    "SimMemory",
    "Span",
    "StaleObjectError",
    "UnmappedAccessError",
    "object_size_for",
    "size_class",
    "static_range",
]
