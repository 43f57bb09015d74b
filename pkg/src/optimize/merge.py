"""Merge runtime range lookups on one base into a single ``getrange``.

Members become inline ``assertrange`` comparisons against the range value.
The lookup goes into the nearest block dominating every member; members
that could see the object released after the lookup stay as plain checks.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from core.logger import logger
from instrument.sites import SITE_KEY, CheckSite, SiteKind
from ir.model import Function, Instruction, Position, Value
from optimize.context import FunctionContext, FunctionEditor
from optimize.stats import OptStats

PASS_NAME = "merge"


@dataclass
class PointerGroup:
    base: str
    members: List[CheckSite]

    @property
    def all_static(self) -> bool:
        return all(m.base_offset is not None for m in self.members)

    def worth_merging(self) -> bool:
        """A lone static check is cheaper left as a runtime call."""
        return len(self.members) >= 2 or not self.all_static


def pointer_groups(ctx: FunctionContext) -> List[PointerGroup]:
    groups: Dict[str, PointerGroup] = {}
    for site in ctx.sites:
        if site.kind is not SiteKind.RANGE_CHECK or site.window or site.src_offset != 0:
            continue
        if not site.group_base or not site.group_base.startswith("%"):
            continue
        if not ctx.reachable(site.position):
            continue
        groups.setdefault(site.group_base, PointerGroup(site.group_base, [])).members.append(site)
    return list(groups.values())


def _placement(ctx: FunctionContext, members: List[CheckSite]) -> Optional[Position]:
    """Insertion point for the lookup: before the returned position's instruction."""
    label = ctx.dom.nearest_common(m.position.label for m in members)
    if label is None:
        return None
    in_block = [m.position.index for m in members if m.position.label == label]
    if in_block:
        return Position(label, min(in_block))
    return Position(label, len(ctx.fn.block_map[label].instructions) - 1)


def _settle(ctx: FunctionContext, group: PointerGroup) -> Optional[Tuple[Position, List[CheckSite]]]:
    """Drop members a release could separate from the lookup until placement is stable."""
    members = list(group.members)
    while members:
        where = _placement(ctx, members)
        if where is None:
            return None
        before = Position(where.label, where.index - 1)
        kept = [m for m in members if not ctx.barrier_between(before, m.position)]
        if len(kept) == len(members):
            return where, members
        members = kept
    return None


def merge_runtime_calls(ctx: FunctionContext, stats: OptStats) -> Function:
    editor = FunctionEditor(ctx.fn)
    groups = pointer_groups(ctx)
    stats.record(PASS_NAME, ctx.name, examined=sum(len(g.members) for g in groups))

    for group in groups:
        if not group.worth_merging():
            continue
        settled = _settle(ctx, group)
        if settled is None:
            continue
        where, members = settled
        if not PointerGroup(group.base, members).worth_merging():
            continue

        name = editor.reserve(ctx, "rg")
        editor.insert_before(
            where,
            Instruction(
                opcode="getrange",
                result=name,
                rtype="range",
                args=(Value(group.base.lstrip("%")),),
                meta=((SITE_KEY, group.base),),
            ),
        )
        for member in members:
            check = ctx.instruction(member.position)
            editor.replace(
                member.position,
                Instruction(
                    opcode="assertrange",
                    args=(Value(name), check.args[1], check.args[2]),
                    meta=((SITE_KEY, member.anchor),),
                ),
            )
        stats.record(PASS_NAME, ctx.name, merged=len(members))
        logger.debug(
            f"{PASS_NAME}: {len(members)} check(s) on {group.base} share %{name} "
            f"placed in block {where.label}"
        )

    return editor.apply()
