"""Answer range queries from a dominating literal-size allocation.

Static checks are decided outright; dynamic ones switch to an inline
assertion against a range computed right after the allocation.
"""

from typing import Dict

from core.logger import logger
from instrument.sites import SITE_KEY, SiteKind
from ir.model import Const, Function, Instruction, Position, Value
from optimize.context import FunctionContext, FunctionEditor
from optimize.stats import OptStats
from runtime.allocator import object_size_for

PASS_NAME = "builtin"


def builtin_query(ctx: FunctionContext, stats: OptStats) -> Function:
    editor = FunctionEditor(ctx.fn)
    ranges: Dict[Position, str] = {}  # alloc position -> name of its static range
    candidates = [
        s
        for s in ctx.sites
        if s.kind in (SiteKind.RANGE_CHECK, SiteKind.CAST_CHECK) and not s.window
    ]
    stats.record(PASS_NAME, ctx.name, examined=len(candidates))

    for site in candidates:
        if site.src_offset != 0:
            continue
        allocation = ctx.constant_allocation(site.group_base)
        if allocation is None:
            continue
        alloc_pos, requested = allocation
        if ctx.barrier_between(alloc_pos, site.position):
            continue
        limit = object_size_for(requested)

        if site.kind is SiteKind.CAST_CHECK:
            end = site.access_size
        elif site.end is None:
            name = ranges.get(alloc_pos)
            if name is None:
                name = editor.reserve(ctx, "srange")
                ranges[alloc_pos] = name
                editor.insert_after(
                    alloc_pos,
                    Instruction(
                        opcode="staticrange",
                        result=name,
                        rtype="range",
                        args=(Value(site.group_base.lstrip("%")), Const(requested)),  # type: ignore[union-attr]
                    ),
                )
            check = ctx.instruction(site.position)
            editor.replace(
                site.position,
                Instruction(
                    opcode="assertrange",
                    args=(Value(name), check.args[1], check.args[2]),
                    meta=((SITE_KEY, site.anchor),),
                ),
            )
            stats.record(PASS_NAME, ctx.name, rewritten=1)
            logger.debug(f"{PASS_NAME}: {site.id} now asserts against static range %{name}")
            continue
        else:
            end = site.end

        if end <= requested:
            editor.remove(site.position)
            stats.log_removed(PASS_NAME, ctx.name, site.id, f"end {end} within {requested}")
        elif end > limit:
            stats.log_flagged(ctx.name, site.id, end, limit)
            logger.warning(
                f"{site.id}: access ends at {end} but the object holds {limit} bytes; "
                f"this check always fails"
            )

    return editor.apply()
