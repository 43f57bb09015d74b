"""Skip escape tracking for stores that write a pointer back where it was loaded from.

``p = load A; q = p + k; store q, A`` re-records a point-to relation the
runtime already holds, provided nothing can free the object or rewrite A in
between and range checks keep ``q`` inside the object.
"""

from typing import Dict, Optional

from core.logger import logger
from instrument.sites import SiteKind
from ir.analysis import trace_base
from ir.cfg import intervening
from ir.model import Function, Instruction, Position, Value
from optimize.context import FunctionContext, FunctionEditor
from optimize.stats import OptStats

PASS_NAME = "selfescape"


def _stores_by_uid(ctx: FunctionContext) -> Dict[str, Position]:
    return {
        f"#{inst.uid}": pos
        for pos, inst in ctx.fn.iter_instructions()
        if inst.opcode == "store" and inst.uid is not None
    }


def _self_update_load(ctx: FunctionContext, store: Instruction) -> Optional[Instruction]:
    value, location = store.args
    if not isinstance(value, Value):
        return None
    origin = trace_base(ctx.fn, value).base
    load = ctx.definition(str(origin))
    if load is None or load.opcode != "load" or load.args[0] != location:
        return None
    return load


def elide_self_update_escapes(ctx: FunctionContext, stats: OptStats) -> Function:
    editor = FunctionEditor(ctx.fn)
    escapes = [s for s in ctx.sites if s.kind is SiteKind.ESCAPE_TRACK]
    stats.record(PASS_NAME, ctx.name, examined=len(escapes))
    if "range" not in ctx.instrumented:
        return ctx.fn

    stores = _stores_by_uid(ctx)
    for site in escapes:
        store_pos = stores.get(site.anchor)
        if store_pos is None:
            continue
        store = ctx.instruction(store_pos)
        load = _self_update_load(ctx, store)
        if load is None:
            continue
        load_pos = ctx.fn.positions[load.result or ""]
        if not ctx.dom.dominates(load_pos, store_pos):
            continue
        location = store.args[1]
        clobbered = False
        for pos in intervening(ctx.fn, ctx.cfg, load_pos, store_pos):
            inst = ctx.instruction(pos)
            if inst.is_barrier or (inst.opcode == "store" and inst.args[1] == location):
                clobbered = True
                break
        if clobbered:
            continue
        editor.remove(site.position)
        stats.log_removed(PASS_NAME, ctx.name, site.id, f"self-update of {location}")
        logger.debug(f"{PASS_NAME}: elided {site.id}, value reloaded from {location}")

    return editor.apply()
