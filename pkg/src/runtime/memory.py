"""Sparse simulated 64-bit address space split into heap, global and stack regions."""

from enum import Enum
from typing import Dict, Optional

from runtime.errors import UnmappedAccessError
from runtime.sizeclass import PAGE_SHIFT, PAGE_SIZE

ADDRESS_MASK = (1 << 64) - 1
GLOBAL_BASE = 0x1000_0000
STACK_BASE = 0x4000_0000
HEAP_BASE = 0x1_0000_0000
# Non-canonical: bits 48..63 are neither all zero nor all one.
POISON = 0xDEADBEEF00000000


class Region(Enum):
    HEAP = "heap"
    GLOBAL = "global"
    STACK = "stack"


class SimMemory:
    """Page-granular byte store. Unmapped pages fault on access."""

    def __init__(self):
        self._pages: Dict[int, bytearray] = {}
        self._regions: Dict[int, Region] = {}

    def map_pages(self, first_page: int, count: int, region: Region) -> None:
        for page in range(first_page, first_page + count):
            if page not in self._pages:
                self._pages[page] = bytearray(PAGE_SIZE)
                self._regions[page] = region

    def map_range(self, address: int, size: int, region: Region) -> None:
        if size <= 0:
            return
        first = address >> PAGE_SHIFT
        last = (address + size - 1) >> PAGE_SHIFT
        self.map_pages(first, last - first + 1, region)

    def region_of(self, address: int) -> Optional[Region]:
        return self._regions.get((address & ADDRESS_MASK) >> PAGE_SHIFT)

    def is_mapped(self, address: int, size: int = 1) -> bool:
        if address < 0 or address + max(size, 1) - 1 > ADDRESS_MASK:
            return False
        first = address >> PAGE_SHIFT
        last = (address + max(size, 1) - 1) >> PAGE_SHIFT
        return all(page in self._pages for page in range(first, last + 1))

    @property
    def mapped_pages(self) -> int:
        return len(self._pages)

    def read(self, address: int, size: int) -> bytes:
        if not self.is_mapped(address, size):
            raise UnmappedAccessError(address & ADDRESS_MASK)
        out = bytearray()
        while size > 0:
            page, offset = divmod(address, PAGE_SIZE)
            chunk = min(size, PAGE_SIZE - offset)
            out += self._pages[page][offset : offset + chunk]
            address += chunk
            size -= chunk
        return bytes(out)

    def write(self, address: int, data: bytes) -> None:
        if not self.is_mapped(address, len(data)):
            raise UnmappedAccessError(address & ADDRESS_MASK)
        view = memoryview(data)
        while view:
            page, offset = divmod(address, PAGE_SIZE)
            chunk = min(len(view), PAGE_SIZE - offset)
            self._pages[page][offset : offset + chunk] = view[:chunk]
            address += chunk
            view = view[chunk:]

    def fill(self, address: int, size: int, byte: int = 0) -> None:
        if size > 0:
            self.write(address, bytes([byte]) * size)

    def read_int(self, address: int, size: int, signed: bool = False) -> int:
        return int.from_bytes(self.read(address, size), "little", signed=signed)

    def write_int(self, address: int, size: int, value: int) -> None:
        mask = (1 << (8 * size)) - 1
        self.write(address, (value & mask).to_bytes(size, "little"))
