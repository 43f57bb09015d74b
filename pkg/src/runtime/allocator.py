"""Seglist heap over the simulated address space.

Objects live in spans of one size class. The page map resolves any heap
address to its span in constant time, which is what makes range queries
cheap enough to run on every checked pointer.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from core.logger import logger
from runtime.errors import (
    DoubleFreeError,
    InvalidFreeError,
    OutOfBoundsError,
    StaleObjectError,
    UnmappedAccessError,
)
from runtime.escapes import DEFAULT_CACHE_CAP, EscapeCache
from runtime.memory import ADDRESS_MASK, HEAP_BASE, POISON, Region, SimMemory
from runtime.sizeclass import (
    CLASS_CODE_BITS,
    PAGE_SHIFT,
    PAGE_SIZE,
    UNENCODED_CLASS,
    class_code,
    decode_class,
    size_class,
    span_pages,
)
from runtime.span import EscapeRecord, Span
from runtime.stats import RuntimeStats

DEFAULT_HEAP_LIMIT = 256 * 1024 * 1024
WORD = 8


@dataclass(frozen=True)
class ObjectRange:
    """Bounds handed out by ``rt_get_range`` and ``static_range``.

    ``requested_end`` marks where the caller's request ended inside the
    rounded-up object; ``stale`` ranges fail every assertion.
    """

    start: int
    end: int
    requested_end: int
    stale: bool = False

    def as_tuple(self) -> Tuple[int, int]:
        return self.start, self.end


FULL_RANGE = ObjectRange(0, ADDRESS_MASK, ADDRESS_MASK)


def object_size_for(requested: int) -> int:
    """Every allocation reserves one trailing byte for the past-the-end pointer."""
    return size_class(requested + 1)


def static_range(base: int, requested: int) -> ObjectRange:
    """Range of a fresh allocation; a failed (null) allocation is not a heap object."""
    if base & ADDRESS_MASK == 0:
        return FULL_RANGE
    return ObjectRange(base, base + object_size_for(requested), base + requested)


class HeapRuntime:
    def __init__(
        self,
        memory: Optional[SimMemory] = None,
        cache_cap: int = DEFAULT_CACHE_CAP,
        heap_limit: int = DEFAULT_HEAP_LIMIT,
    ):
        self.memory = memory if memory is not None else SimMemory()
        self.cache = EscapeCache(cache_cap)
        self.heap_limit = heap_limit
        self.stats = RuntimeStats()
        self._page_map: Dict[int, int] = {}
        self._spans: Dict[int, Span] = {}  # span directory, keyed by start page
        self._available: Dict[int, List[Span]] = {}
        self._next_page = HEAP_BASE >> PAGE_SHIFT
        self._heap_bytes = 0

    # ─── Span management ──────────────────────────────────────────────────

    @property
    def spans(self) -> List[Span]:
        return list(self._spans.values())

    @property
    def live_objects(self) -> int:
        return sum(len(span.live) for span in self._spans.values())

    def page_entry(self, page: int) -> Optional[int]:
        return self._page_map.get(page)

    def _new_span(self, object_size: int) -> Optional[Span]:
        pages = span_pages(object_size)
        if self._heap_bytes + pages * PAGE_SIZE > self.heap_limit:
            return None
        first_page = self._next_page
        self._next_page += pages
        self._heap_bytes += pages * PAGE_SIZE
        self.memory.map_pages(first_page, pages, Region.HEAP)

        span = Span(page_base=first_page << PAGE_SHIFT, num_pages=pages, object_size=object_size)
        entry = (first_page << CLASS_CODE_BITS) | class_code(object_size)
        for page in range(first_page, first_page + pages):
            self._page_map[page] = entry
        self._spans[first_page] = span
        logger.debug(
            f"New span at {span.page_base:#x}: {pages} page(s), class {object_size}, "
            f"{span.capacity} object(s)"
        )
        return span

    def _span_with_room(self, object_size: int) -> Optional[Span]:
        stack = self._available.setdefault(object_size, [])
        while stack:
            if stack[-1].has_room():
                return stack[-1]
            stack.pop()
        span = self._new_span(object_size)
        if span is not None:
            stack.append(span)
        return span

    def _make_available(self, span: Span) -> None:
        stack = self._available.setdefault(span.object_size, [])
        if not stack or stack[-1] is not span:
            stack.append(span)

    # ─── Queries ──────────────────────────────────────────────────────────

    def _locate(self, address: int) -> Optional[Tuple[Span, int]]:
        """Span and object index for ``address``; no loop over allocations."""
        address &= ADDRESS_MASK
        self.stats.query_ops += 1
        entry = self._page_map.get(address >> PAGE_SHIFT)
        if entry is None:
            return None
        start_page = entry >> CLASS_CODE_BITS
        code = entry & UNENCODED_CLASS
        span = self._spans[start_page]
        self.stats.query_ops += 1
        object_size = span.object_size if code == UNENCODED_CLASS else decode_class(code)
        idx = (address - span.page_base) // object_size
        self.stats.query_ops += 1
        if idx >= span.capacity:
            return None
        return span, idx

    def _resolve(self, address: int) -> Optional[Tuple[Span, int]]:
        located = self._locate(address)
        if located is None:
            return None
        span, idx = located
        self.stats.query_ops += 1
        if idx not in span.live:
            raise StaleObjectError(address & ADDRESS_MASK, span.bounds(idx))
        return span, idx

    def range_query(self, address: int) -> Optional[Tuple[int, int]]:
        """Bounds of the live object holding ``address``; None when not heap.

        Raises:
            StaleObjectError: the address falls in a freed (or never used) slot.
        """
        self.stats.range_queries += 1
        resolved = self._resolve(address)
        if resolved is None:
            return None
        span, idx = resolved
        return span.bounds(idx)

    def requested_size(self, address: int) -> Optional[int]:
        located = self._locate(address)
        if located is None:
            return None
        span, idx = located
        return span.live.get(idx)

    def is_live_heap(self, address: int) -> bool:
        located = self._locate(address)
        return located is not None and located[1] in located[0].live

    # ─── Allocation ───────────────────────────────────────────────────────

    def rt_alloc(self, size: int) -> int:
        if size < 0:
            raise ValueError(f"allocation size must be non-negative, got {size}")
        object_size = object_size_for(size)
        span = self._span_with_room(object_size)
        if span is None:
            self.stats.failed_allocations += 1
            logger.warning(
                f"Allocation of {size} bytes failed: heap budget of {self.heap_limit} bytes exhausted"
            )
            return 0
        idx = span.take_index()
        span.live[idx] = size
        address = span.address_of(idx)
        self.memory.fill(address, object_size)
        self.stats.allocations += 1
        return address

    def rt_calloc(self, count: int, size: int) -> int:
        if count < 0 or size < 0:
            raise ValueError(f"calloc({count}, {size}): negative operand")
        return self.rt_alloc(count * size)

    def _owned_object(self, address: int) -> Tuple[Span, int]:
        located = self._locate(address)
        if located is None:
            raise InvalidFreeError(address, "not a heap address")
        span, idx = located
        lower, _ = span.bounds(idx)
        if address != lower:
            raise InvalidFreeError(address, "not the start of an object")
        if idx not in span.live:
            if idx < span.next_unused:
                raise DoubleFreeError(address)
            raise InvalidFreeError(address, "never allocated")
        return span, idx

    def rt_free(self, address: int) -> None:
        """Release an object after poisoning every tracked pointer into it.

        Raises:
            InvalidFreeError: not the start of a heap object.
            DoubleFreeError: the object is already free.
        """
        address &= ADDRESS_MASK
        if address == 0:
            return
        span, idx = self._owned_object(address)
        self.flush_escape_cache()
        lower, upper = span.bounds(idx)
        self._neutralize(span, idx, lower, upper)
        span.release(idx)
        self._make_available(span)
        self.stats.frees += 1

    def rt_realloc(self, address: int, size: int) -> int:
        address &= ADDRESS_MASK
        if address == 0:
            return self.rt_alloc(size)
        span, idx = self._owned_object(address)
        old_requested = span.live[idx]
        new_address = self.rt_alloc(size)
        if new_address == 0:
            return 0
        count = min(old_requested, size)
        data = self.memory.read(address, count)
        self.memory.write(new_address, data)
        for offset in range(0, count - WORD + 1, WORD):
            value = int.from_bytes(data[offset : offset + WORD], "little")
            self.rt_escape(new_address + offset, value)
        self.rt_free(address)
        return new_address

    def _neutralize(self, span: Span, idx: int, lower: int, upper: int) -> None:
        records = span.escape_table.pop(idx, {})
        for location in records:
            try:
                value = self.memory.read_int(location, WORD)
            except UnmappedAccessError:
                continue
            if lower <= value < upper:
                self.memory.write_int(location, WORD, POISON)
                self.stats.neutralized += 1
        if records:
            logger.debug(
                f"Freed {lower:#x}: {len(records)} tracked location(s), "
                f"{self.stats.neutralized} neutralized so far"
            )

    # ─── Checks ───────────────────────────────────────────────────────────

    def rt_check_range(self, src: int, dst: int, size: int) -> None:
        """Pass when [dst, dst+size) stays inside the object holding ``src``.

        Non-heap sources pass; accesses that fit only thanks to size-class
        rounding pass and are counted as mitigated.
        """
        if size < 0:
            raise ValueError(f"access size must be non-negative, got {size}")
        self.stats.checks += 1
        try:
            resolved = self._resolve(src)
        except StaleObjectError:
            self.stats.violations += 1
            raise
        if resolved is None:
            return
        span, idx = resolved
        lower, upper = span.bounds(idx)
        dst &= ADDRESS_MASK
        if dst < lower or dst + size > upper:
            self.stats.violations += 1
            raise OutOfBoundsError(src & ADDRESS_MASK, dst, size, (lower, upper))
        if dst + size > lower + span.live[idx]:
            self.stats.mitigated_overflows += 1

    def rt_get_range(self, address: int) -> ObjectRange:
        """Range value for a merged check group.

        Freed objects yield a stale range instead of raising so the failure
        surfaces at the first assertion that uses it.
        """
        self.stats.range_queries += 1
        located = self._locate(address)
        if located is None:
            return FULL_RANGE
        span, idx = located
        lower, upper = span.bounds(idx)
        self.stats.query_ops += 1
        if idx not in span.live:
            return ObjectRange(lower, upper, lower, stale=True)
        return ObjectRange(lower, upper, lower + span.live[idx])

    def assert_in_range(self, rng: ObjectRange, src: int, dst: int, size: int) -> None:
        """Inline check against a precomputed range (no runtime lookup)."""
        dst &= ADDRESS_MASK
        if rng.stale:
            self.stats.violations += 1
            raise StaleObjectError(dst, rng.as_tuple())
        if dst < rng.start or dst + size > rng.end:
            self.stats.violations += 1
            raise OutOfBoundsError(src & ADDRESS_MASK, dst, size, rng.as_tuple())
        if dst + size > rng.requested_end:
            self.stats.mitigated_overflows += 1

    # ─── Escapes ──────────────────────────────────────────────────────────

    def rt_escape(self, location: int, value: int) -> bool:
        """Record that ``location`` now holds a pointer into a live heap object."""
        self.stats.escape_calls += 1
        located = self._locate(value)
        if located is None or located[1] not in located[0].live:
            return False
        span, idx = located
        record = EscapeRecord(location & ADDRESS_MASK, span.start_page, idx)
        if record in self.cache:
            self.stats.duplicate_escapes += 1
            return False
        if self.cache.is_full:
            self.flush_escape_cache()
        self.cache.add(record)
        return True

    def flush_escape_cache(self) -> int:
        """Commit buffered records to their spans. Returns how many were new."""
        records = self.cache.drain()
        if not records:
            return 0
        self.stats.cache_flushes += 1
        committed = 0
        for record in records:
            span = self._spans.get(record.pointee_span)
            if span is None or record.pointee_idx not in span.live:
                continue
            table = span.escape_table.setdefault(record.pointee_idx, {})
            if record.location in table:
                self.stats.duplicate_escapes += 1
                continue
            table[record.location] = record
            committed += 1
        self.stats.escapes_recorded += committed
        return committed

    def tracked_locations(self, address: int) -> List[int]:
        """Committed and buffered escape locations for the object at ``address``."""
        located = self._locate(address)
        if located is None:
            return []
        span, idx = located
        locations = list(span.escape_table.get(idx, {}))
        for record in self.cache.entries:
            if record.pointee_span == span.start_page and record.pointee_idx == idx:
                if record.location not in locations:
                    locations.append(record.location)
        return locations
