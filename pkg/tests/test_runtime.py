"""Tests for the seglist heap runtime."""

import random
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from runtime.allocator import (FULL_RANGE, HeapRuntime, ObjectRange,
                               object_size_for, static_range)
from runtime.errors import (DoubleFreeError, InvalidFreeError,
                            OutOfBoundsError, StaleObjectError)
from runtime.escapes import EscapeCache
from runtime.memory import POISON, STACK_BASE, Region
from runtime.sizeclass import (PAGE_SIZE, SIZE_CLASSES, class_code, decode_class,
                               size_class, span_pages)
from runtime.span import EscapeRecord


def _query_cost(rt, address):
    before = rt.stats.query_ops
    rt.range_query(address)
    return rt.stats.query_ops - before


def _pointer_slot(rt):
    """An 8-byte heap cell to store pointers in."""
    return rt.rt_alloc(8)


# ─── Size classes ─────────────────────────────────────────────────────────────


@pytest.mark.parametrize(
    "n, expected",
    [(0, 8), (1, 8), (8, 8), (9, 16), (17, 32), (33, 48), (200, 256), (4096, 4096), (4097, 8192)],
)
def test_size_class(n, expected):
    assert size_class(n) == expected


def test_size_class_rejects_negative():
    with pytest.raises(ValueError):
        size_class(-1)


def test_object_size_reserves_past_the_end_byte():
    assert object_size_for(16) == 32
    assert object_size_for(15) == 16
    assert object_size_for(7) == 8


def test_class_codes_decode_back():
    for size in SIZE_CLASSES + (2 * PAGE_SIZE, 5 * PAGE_SIZE):
        assert decode_class(class_code(size)) == size


@pytest.mark.parametrize("object_size", SIZE_CLASSES + (2 * PAGE_SIZE, 3 * PAGE_SIZE))
def test_spans_have_no_tail_bytes(object_size):
    pages = span_pages(object_size)
    assert (pages * PAGE_SIZE) % object_size == 0
    assert all((k * PAGE_SIZE) % object_size for k in range(1, pages))


def test_three_page_span_for_48_byte_class():
    assert [span_pages(n) for n in (48, 96, 192)] == [3, 3, 3]
    assert span_pages(64) == 1


def test_static_range_matches_allocator_rounding():
    rng = static_range(0x1000, 20)
    assert rng == ObjectRange(0x1000, 0x1000 + 32, 0x1000 + 20)
    assert static_range(0, 20) == FULL_RANGE


# ─── Allocation and range queries ─────────────────────────────────────────────


def test_range_query_covers_rounded_object():
    rt = HeapRuntime()
    a = rt.rt_alloc(10)
    assert rt.range_query(a) == (a, a + 16)
    assert rt.range_query(a + 15) == (a, a + 16)


def test_range_query_on_non_heap_is_none():
    rt = HeapRuntime()
    rt.rt_alloc(10)
    assert rt.range_query(STACK_BASE) is None
    assert rt.range_query(0) is None


def test_allocations_are_zero_filled():
    rt = HeapRuntime()
    a = rt.rt_alloc(24)
    assert rt.memory.read(a, 24) == bytes(24)
    assert rt.memory.region_of(a) is Region.HEAP


def test_calloc_allocates_product():
    rt = HeapRuntime()
    a = rt.rt_calloc(4, 6)
    assert rt.requested_size(a) == 24
    assert rt.range_query(a) == (a, a + 32)


def test_objects_of_one_class_share_a_span():
    rt = HeapRuntime()
    a = rt.rt_alloc(10)
    b = rt.rt_alloc(12)
    assert b - a == 16
    assert len(rt.spans) == 1
    assert rt.live_objects == 2


def test_large_allocation_gets_its_own_span():
    rt = HeapRuntime()
    a = rt.rt_alloc(3 * PAGE_SIZE)
    lower, upper = rt.range_query(a + PAGE_SIZE + 5)
    assert lower == a
    assert upper - lower == 4 * PAGE_SIZE


def test_object_straddling_a_page_boundary():
    rt = HeapRuntime()
    first = rt.rt_alloc(40)
    page = first & ~(PAGE_SIZE - 1)
    with pytest.raises(StaleObjectError):
        rt.range_query(page + 4080)
    addresses = [first] + [rt.rt_alloc(40) for _ in range(85)]
    assert addresses[85] == page + 4080
    assert rt.range_query(page + 4080) == (page + 4080, page + 4128)
    assert rt.range_query(page + PAGE_SIZE + 10) == (page + 4080, page + 4128)
    assert len(rt.spans) == 1


def test_heap_budget_exhaustion_returns_null():
    rt = HeapRuntime(heap_limit=PAGE_SIZE)
    assert rt.rt_alloc(8) != 0
    assert rt.rt_alloc(100) == 0
    assert rt.stats.failed_allocations == 1


def test_query_cost_is_constant_in_live_objects():
    rt = HeapRuntime()
    addresses = [rt.rt_alloc(24) for _ in range(100)]
    small = _query_cost(rt, addresses[50])
    addresses += [rt.rt_alloc(24) for _ in range(9_900)]
    assert rt.live_objects == 10_000
    large = _query_cost(rt, addresses[9_000])
    assert small == large == 4


def _best_query_time(rt, addresses, rounds=7, queries=5_000):
    """Fastest of several timed batches of range queries."""
    best = float("inf")
    for _ in range(rounds):
        start = time.perf_counter()
        for i in range(queries):
            rt.range_query(addresses[i % len(addresses)])
        best = min(best, time.perf_counter() - start)
    return best


def test_query_time_does_not_grow_with_heap():
    small_rt = HeapRuntime()
    single = [small_rt.rt_alloc(24)]
    large_rt = HeapRuntime()
    many = [large_rt.rt_alloc(24) for _ in range(10_000)]
    many = many[::-97]
    small = _best_query_time(small_rt, single)
    large = _best_query_time(large_rt, many)
    assert large < 2 * small


@settings(max_examples=60, deadline=None)
@given(
    sizes=st.lists(st.integers(min_value=0, max_value=5000), min_size=1, max_size=12),
    data=st.data(),
)
def test_range_query_matches_rounding_formula(sizes, data):
    rt = HeapRuntime()
    for n in sizes:
        a = rt.rt_alloc(n)
        offset = data.draw(st.integers(min_value=0, max_value=object_size_for(n) - 1))
        assert rt.range_query(a + offset) == (a, a + object_size_for(n))


# ─── Checks ───────────────────────────────────────────────────────────────────


def test_check_in_bounds_passes():
    rt = HeapRuntime()
    a = rt.rt_alloc(32)
    rt.rt_check_range(a, a + 24, 8)
    assert rt.stats.violations == 0
    assert rt.stats.mitigated_overflows == 0


def test_check_past_object_raises():
    rt = HeapRuntime()
    a = rt.rt_alloc(16)
    with pytest.raises(OutOfBoundsError) as exc:
        rt.rt_check_range(a, a + 32, 1)
    assert exc.value.bounds == (a, a + 32)
    assert exc.value.details()["size"] == 1


def test_check_below_object_raises():
    rt = HeapRuntime()
    rt.rt_alloc(16)
    b = rt.rt_alloc(16)
    with pytest.raises(OutOfBoundsError):
        rt.rt_check_range(b, b - 1, 1)


def test_overflow_into_slack_is_mitigated():
    rt = HeapRuntime()
    a = rt.rt_alloc(10)
    rt.rt_check_range(a, a + 12, 4)
    assert rt.stats.mitigated_overflows == 1
    assert rt.stats.violations == 0


def test_non_heap_source_passes():
    rt = HeapRuntime()
    rt.rt_check_range(STACK_BASE, STACK_BASE + 1_000_000, 8)
    assert rt.stats.violations == 0


def test_check_through_freed_source_is_stale():
    rt = HeapRuntime()
    a = rt.rt_alloc(16)
    rt.rt_free(a)
    with pytest.raises(StaleObjectError):
        rt.rt_check_range(a, a, 1)


def test_get_range_of_non_heap_is_full_range():
    rt = HeapRuntime()
    assert rt.rt_get_range(STACK_BASE) == FULL_RANGE


def test_get_range_of_freed_object_is_stale():
    rt = HeapRuntime()
    a = rt.rt_alloc(16)
    rt.rt_free(a)
    rng = rt.rt_get_range(a)
    assert rng.stale
    with pytest.raises(StaleObjectError):
        rt.assert_in_range(rng, a, a, 1)


def test_assert_in_range_uses_precomputed_bounds():
    rt = HeapRuntime()
    a = rt.rt_alloc(40)
    rng = rt.rt_get_range(a)
    ops = rt.stats.query_ops
    rt.assert_in_range(rng, a, a + 40, 8)
    assert rt.stats.query_ops == ops
    assert rt.stats.mitigated_overflows == 1
    with pytest.raises(OutOfBoundsError):
        rt.assert_in_range(rng, a, a + 44, 8)


# ─── Free ─────────────────────────────────────────────────────────────────────


def test_free_null_is_noop():
    rt = HeapRuntime()
    rt.rt_free(0)
    assert rt.stats.frees == 0


def test_double_free_detected():
    rt = HeapRuntime()
    a = rt.rt_alloc(16)
    rt.rt_free(a)
    with pytest.raises(DoubleFreeError):
        rt.rt_free(a)


def test_interior_free_is_invalid():
    rt = HeapRuntime()
    a = rt.rt_alloc(16)
    with pytest.raises(InvalidFreeError):
        rt.rt_free(a + 4)


def test_free_of_stack_address_is_invalid():
    rt = HeapRuntime()
    rt.memory.map_range(STACK_BASE, 8, Region.STACK)
    with pytest.raises(InvalidFreeError):
        rt.rt_free(STACK_BASE)


def test_free_of_never_allocated_slot_is_invalid():
    rt = HeapRuntime()
    a = rt.rt_alloc(16)
    with pytest.raises(InvalidFreeError):
        rt.rt_free(a + 64)


def test_freed_slot_is_reused():
    rt = HeapRuntime()
    a = rt.rt_alloc(16)
    rt.rt_free(a)
    assert rt.rt_alloc(20) == a


def test_realloc_copies_and_frees_old_object():
    rt = HeapRuntime()
    a = rt.rt_alloc(16)
    rt.memory.write_int(a, 8, 42)
    b = rt.rt_realloc(a, 64)
    assert b != a
    assert rt.memory.read_int(b, 8) == 42
    with pytest.raises(StaleObjectError):
        rt.range_query(a)


def test_realloc_of_null_allocates():
    rt = HeapRuntime()
    a = rt.rt_realloc(0, 24)
    assert rt.requested_size(a) == 24


# ─── Escapes and neutralization ───────────────────────────────────────────────


def test_free_poisons_tracked_pointer():
    rt = HeapRuntime()
    cell = _pointer_slot(rt)
    obj = rt.rt_alloc(16)
    rt.memory.write_int(cell, 8, obj + 4)
    assert rt.rt_escape(cell, obj + 4) is True
    rt.rt_free(obj)
    assert rt.memory.read_int(cell, 8) == POISON
    assert rt.stats.neutralized == 1


def test_overwritten_location_is_left_alone():
    rt = HeapRuntime()
    cell = _pointer_slot(rt)
    obj = rt.rt_alloc(16)
    rt.memory.write_int(cell, 8, obj)
    rt.rt_escape(cell, obj)
    rt.memory.write_int(cell, 8, 7)
    rt.rt_free(obj)
    assert rt.memory.read_int(cell, 8) == 7
    assert rt.stats.neutralized == 0


def test_escape_of_non_heap_value_is_ignored():
    rt = HeapRuntime()
    cell = _pointer_slot(rt)
    assert rt.rt_escape(cell, 12345) is False
    assert len(rt.cache) == 0


def test_duplicate_escape_is_counted_once():
    rt = HeapRuntime()
    cell = _pointer_slot(rt)
    obj = rt.rt_alloc(16)
    assert rt.rt_escape(cell, obj)
    assert not rt.rt_escape(cell, obj)
    assert rt.stats.duplicate_escapes == 1
    assert rt.tracked_locations(obj) == [cell]


def test_full_cache_flushes_to_spans():
    rt = HeapRuntime(cache_cap=2)
    cells = [_pointer_slot(rt) for _ in range(3)]
    objs = [rt.rt_alloc(64) for _ in range(3)]
    for cell, obj in zip(cells, objs):
        rt.rt_escape(cell, obj)
    assert rt.stats.cache_flushes == 1
    assert rt.stats.escapes_recorded == 2
    assert len(rt.cache) == 1
    assert rt.flush_escape_cache() == 1


def test_escape_cache_rejects_zero_capacity():
    with pytest.raises(ValueError):
        EscapeCache(0)


def test_escape_cache_drops_duplicates():
    cache = EscapeCache(4)
    record = EscapeRecord(0x10, 1, 0)
    assert cache.add(record)
    assert not cache.add(record)
    assert cache.drain() == [record]
    assert len(cache) == 0


@settings(max_examples=40, deadline=None)
@given(
    offsets=st.lists(st.integers(min_value=0, max_value=47), min_size=1, max_size=8),
    cache_cap=st.integers(min_value=1, max_value=4),
)
def test_every_tracked_pointer_into_freed_object_is_poisoned(offsets, cache_cap):
    rt = HeapRuntime(cache_cap=cache_cap)
    obj = rt.rt_alloc(40)
    cells = []
    for offset in offsets:
        cell = _pointer_slot(rt)
        rt.memory.write_int(cell, 8, obj + offset)
        rt.rt_escape(cell, obj + offset)
        cells.append(cell)
    rt.rt_free(obj)
    for cell in cells:
        assert rt.memory.read_int(cell, 8) == POISON


@pytest.mark.slow
def test_neutralization_over_random_sequences():
    rng = random.Random(1234)
    for _ in range(10_000):
        rt = HeapRuntime(cache_cap=rng.randint(1, 8))
        sizes = {}
        for _ in range(rng.randint(1, 4)):
            n = rng.randint(1, 96)
            sizes[rt.rt_alloc(n)] = object_size_for(n)
        # cell -> (object it points into, stored value, overwritten)
        cells = {}
        for _ in range(rng.randint(1, 6)):
            cell = _pointer_slot(rt)
            target = rng.choice(sorted(sizes))
            value = target + rng.randrange(sizes[target])
            rt.memory.write_int(cell, 8, value)
            rt.rt_escape(cell, value)
            overwritten = rng.random() < 0.3
            if overwritten:
                rt.memory.write_int(cell, 8, 7)
            cells[cell] = (target, value, overwritten)

        freed = set()
        for victim in rng.sample(sorted(sizes), len(sizes)):
            rt.rt_free(victim)
            freed.add(victim)
            for cell, (target, value, overwritten) in cells.items():
                held = rt.memory.read_int(cell, 8)
                if overwritten:
                    assert held == 7
                elif target in freed:
                    assert held == POISON
                else:
                    assert held == value


def test_range_query_matches_bounds_table():
    rng = random.Random(99)
    rt = HeapRuntime()
    table = {}
    for _ in range(400):
        if table and rng.random() < 0.3:
            victim = rng.choice(sorted(table))
            rt.rt_free(victim)
            del table[victim]
        else:
            n = rng.randrange(64) if rng.random() < 0.8 else rng.randrange(64, 5000)
            table[rt.rt_alloc(n)] = object_size_for(n)

    starts = sorted(table)
    for _ in range(10_000):
        if rng.random() < 0.1:
            assert rt.range_query(STACK_BASE + rng.randrange(1 << 20)) is None
            continue
        start = rng.choice(starts)
        address = start + rng.randrange(table[start])
        assert rt.range_query(address) == (start, start + table[start])
