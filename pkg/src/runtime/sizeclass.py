"""Size-class table and the compact class codes stored in the page map."""

from bisect import bisect_left
from math import lcm

PAGE_SIZE = 4096
PAGE_SHIFT = 12
SIZE_CLASSES = (8, 16, 32, 48, 64, 96, 128, 192, 256, 512, 1024, 2048, 4096)

# 12 bits of a page-map entry hold the class code; the top value means
# "object size not encodable, ask the span directory".
CLASS_CODE_BITS = 12
UNENCODED_CLASS = (1 << CLASS_CODE_BITS) - 1


def size_class(n: int) -> int:
    """Smallest class holding ``n`` bytes; whole pages beyond the table."""
    if n < 0:
        raise ValueError(f"negative size {n}")
    if n <= SIZE_CLASSES[-1]:
        return SIZE_CLASSES[bisect_left(SIZE_CLASSES, max(n, 1))]
    return -(-n // PAGE_SIZE) * PAGE_SIZE


def span_pages(object_size: int) -> int:
    """Fewest whole pages holding a whole number of objects."""
    return lcm(object_size, PAGE_SIZE) // PAGE_SIZE


def class_code(object_size: int) -> int:
    if object_size in SIZE_CLASSES:
        return SIZE_CLASSES.index(object_size)
    pages = object_size // PAGE_SIZE
    code = len(SIZE_CLASSES) + pages - 2
    if object_size % PAGE_SIZE or pages < 2 or code >= UNENCODED_CLASS:
        return UNENCODED_CLASS
    return code


def decode_class(code: int) -> int:
    if code < len(SIZE_CLASSES):
        return SIZE_CLASSES[code]
    if code == UNENCODED_CLASS:
        raise ValueError("unencoded class has no size")
    return (code - len(SIZE_CLASSES) + 2) * PAGE_SIZE
