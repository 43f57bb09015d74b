"""Remove range checks covered by another check on the same base pointer.

Checks are grouped by base pointer and pairs are eliminated until no pair
qualifies. A check may go when a covering check dominates it with nothing
that releases memory in between, or when a covering check follows it in the
same block with only pure arithmetic between them. In the second case the
survivor keeps a window of the absorbed accesses so a failure is still
reported at the first access that would have failed.
"""

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

from core.logger import logger
from instrument.sites import (WINDOW_KEY, CheckSite, SiteKind, WindowEntry,
                              format_window)
from ir.dominators import DominatorInfo
from ir.model import Function
from optimize.context import FunctionContext, FunctionEditor
from optimize.stats import OptStats

PASS_NAME = "redundant"


def redundant_pair(a: CheckSite, b: CheckSite, dom: DominatorInfo, pdom: DominatorInfo) -> bool:
    """True when ``a`` covers ``b`` and one of them always accompanies the other."""
    if a.group_base != b.group_base or a.base_offset is None or b.base_offset is None:
        return False
    if a.base_offset < b.base_offset or (a.end or 0) < (b.end or 0):
        return False
    return dom.dominates(a.position, b.position) or pdom.postdominates(a.position, b.position)


@dataclass(eq=False)
class _Live:
    site: CheckSite
    offset: int
    end: int
    window: List[WindowEntry] = field(default_factory=list)

    def entries(self) -> List[WindowEntry]:
        if self.window:
            return list(self.window)
        dst = str(self.site.result).lstrip("%")
        return [WindowEntry(dst, self.site.access_size)]


def _eligible(site: CheckSite) -> bool:
    return (
        site.kind is SiteKind.RANGE_CHECK
        and site.src_offset == 0
        and site.base_offset is not None
        and site.group_base is not None
    )


def _find_pair(ctx: FunctionContext, group: List[_Live]) -> Optional[Tuple[_Live, _Live, str]]:
    for a in group:
        for b in group:
            if a is b:
                continue
            if not redundant_pair(_coverage(a), _coverage(b), ctx.dom, ctx.pdom):
                continue
            if ctx.dom.dominates(a.site.position, b.site.position):
                if not ctx.barrier_between(a.site.position, b.site.position):
                    return a, b, "dominated"
            if ctx.only_pure_between(b.site.position, a.site.position):
                return a, b, "post-dominated"
    return None


def _coverage(live: _Live) -> CheckSite:
    """The site with the coverage accumulated so far."""
    return replace(live.site, base_offset=live.offset, access_size=live.end - live.offset)


def remove_redundant(ctx: FunctionContext, stats: OptStats) -> Function:
    editor = FunctionEditor(ctx.fn)
    groups: Dict[str, List[_Live]] = {}
    examined = 0
    for site in ctx.sites:
        if not _eligible(site):
            continue
        examined += 1
        live = _Live(site, site.base_offset or 0, site.end or 0, list(site.window))
        groups.setdefault(site.group_base or "", []).append(live)
    stats.record(PASS_NAME, ctx.name, examined=examined)

    for base, group in groups.items():
        changed = set()
        while True:
            found = _find_pair(ctx, group)
            if found is None:
                break
            keep, drop, how = found
            group.remove(drop)
            editor.remove(drop.site.position)
            if how == "post-dominated":
                keep.window = drop.entries() + keep.entries()
                changed.add(id(keep))
            keep.offset = max(keep.offset, drop.offset)
            keep.end = max(keep.end, drop.end)
            stats.log_removed(PASS_NAME, ctx.name, drop.site.id, f"{how} by {keep.site.id}")
            logger.debug(f"{PASS_NAME}: {drop.site.id} {how} by {keep.site.id} (base {base})")

        for live in group:
            if id(live) in changed:
                inst = ctx.instruction(live.site.position)
                editor.replace(
                    live.site.position, inst.with_meta(WINDOW_KEY, format_window(tuple(live.window)))
                )

    return editor.apply()
