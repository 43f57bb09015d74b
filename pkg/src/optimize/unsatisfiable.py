"""Drop checks that can never fail given sizes already known at compile time."""

from typing import List, Optional

from core.logger import logger
from instrument.sites import CheckSite, SiteKind
from ir.analysis import operand_type
from ir.model import Function
from ir.typedefs import is_pointer, pointee, size_of
from optimize.context import FunctionContext, FunctionEditor
from optimize.stats import OptStats

PASS_NAME = "unsat"


def _known_extent(ctx: FunctionContext, site: CheckSite, guards: List[CheckSite]) -> Optional[int]:
    """Bytes guaranteed live from the group base at ``site``, if any."""
    best: Optional[int] = None
    allocation = ctx.constant_allocation(site.group_base)
    if allocation is not None:
        alloc_pos, requested = allocation
        if not ctx.barrier_between(alloc_pos, site.position):
            best = requested
    for guard in guards:
        if guard is site or guard.group_base != site.group_base:
            continue
        if guard.src_offset != 0 or guard.position == site.position:
            continue
        if not ctx.dom.dominates(guard.position, site.position):
            continue
        if ctx.barrier_between(guard.position, site.position):
            continue
        if best is None or guard.access_size > best:
            best = guard.access_size
    return best


def _shrinking_cast(ctx: FunctionContext, site: CheckSite) -> bool:
    cast = ctx.definition(site.anchor)
    if cast is None or cast.opcode != "cast":
        return False
    source = cast.args[0]
    source_type = operand_type(ctx.program, ctx.fn, source)
    if not is_pointer(source_type):
        return False
    try:
        source_size = size_of(pointee(source_type), ctx.types)
    except KeyError:
        return False
    return source_size >= site.access_size and ctx.live_at(source, site.position)


def remove_unsatisfiable(ctx: FunctionContext, stats: OptStats) -> Function:
    editor = FunctionEditor(ctx.fn)
    casts = [s for s in ctx.sites if s.kind is SiteKind.CAST_CHECK]
    ranges = [s for s in ctx.sites if s.kind is SiteKind.RANGE_CHECK and not s.window]
    stats.record(PASS_NAME, ctx.name, examined=len(casts) + len(ranges))

    for site in casts:
        if _shrinking_cast(ctx, site):
            reason = "source type at least as large"
        elif site.src_offset == 0:
            extent = _known_extent(ctx, site, casts)
            if extent is None or extent < site.access_size:
                continue
            reason = f"object known to hold {extent} bytes"
        else:
            continue
        editor.remove(site.position)
        stats.log_removed(PASS_NAME, ctx.name, site.id, reason)
        logger.debug(f"{PASS_NAME}: removed cast check {site.id} ({reason})")

    for site in ranges:
        if site.src_offset != 0 or site.end is None:
            continue
        extent = _known_extent(ctx, site, casts)
        if extent is None or site.end > extent:
            continue
        editor.remove(site.position)
        stats.log_removed(PASS_NAME, ctx.name, site.id, f"end {site.end} within {extent}")
        logger.debug(f"{PASS_NAME}: removed range check {site.id}")

    return editor.apply()
