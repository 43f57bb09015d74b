"""Field accesses through an inflexible record pointer stay inside the record.

The record pointer itself was size-checked when it was cast, so a constant
field offset that fits the record needs no runtime check, provided the
object cannot have been freed since it was allocated.
"""

from core.logger import logger
from instrument.sites import SiteKind
from ir.analysis import operand_type
from ir.model import Function
from ir.typedefs import is_pointer, pointee
from optimize.context import FunctionContext, FunctionEditor
from optimize.stats import OptStats

PASS_NAME = "struct"


def optimize_struct_checks(ctx: FunctionContext, stats: OptStats) -> Function:
    editor = FunctionEditor(ctx.fn)
    sites = [s for s in ctx.sites if s.kind is SiteKind.RANGE_CHECK and not s.window]
    stats.record(PASS_NAME, ctx.name, examined=len(sites))

    for site in sites:
        anchor = ctx.definition(site.anchor)
        if anchor is None or anchor.opcode != "ptradd" or anchor.static_offset is None:
            continue
        base = anchor.args[0]
        base_type = operand_type(ctx.program, ctx.fn, base)
        if not is_pointer(base_type):
            continue
        record = ctx.types.get(pointee(base_type))
        if record is None or not record.is_record or record.is_flexible:
            continue
        if anchor.static_offset + site.access_size > record.byte_size:
            continue
        if not ctx.live_at(base, site.position):
            continue
        editor.remove(site.position)
        stats.log_removed(PASS_NAME, ctx.name, site.id, f"field of {record.name}")
        logger.debug(f"{PASS_NAME}: removed {site.id} (offset {anchor.static_offset} in {record.name})")

    return editor.apply()
