"""Check-site inventory rebuilt from instrumented IR.

The IR text is the single source of truth: every inserted instruction
carries ``!site=<ref>`` naming the instruction it guards, so the inventory
can be recomputed after any rewrite.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import FrozenSet, List, Optional, Tuple, Union

from ir.analysis import trace_base
from ir.model import Const, Function, Instruction, Operand, Position, Program

SITE_KEY = "site"
WINDOW_KEY = "window"


class SiteKind(Enum):
    RANGE_CHECK = "range-check"
    CAST_CHECK = "cast-check"
    ESCAPE_TRACK = "escape-track"
    MERGED_ASSERT = "merged-assert"
    RANGE_INIT = "range-init"


_KIND_BY_OPCODE = {
    "checkrange": SiteKind.RANGE_CHECK,
    "castcheck": SiteKind.CAST_CHECK,
    "escape": SiteKind.ESCAPE_TRACK,
    "assertrange": SiteKind.MERGED_ASSERT,
    "getrange": SiteKind.RANGE_INIT,
    "staticrange": SiteKind.RANGE_INIT,
}


@dataclass(frozen=True)
class WindowEntry:
    """One access folded into a windowed range check, checked in order."""

    dst: str
    size: int

    def __str__(self) -> str:
        return f"%{self.dst}:{self.size}"


def parse_window(text: Optional[str]) -> Tuple[WindowEntry, ...]:
    if not text:
        return ()
    entries = []
    for item in text.split(";"):
        dst, size = item.rsplit(":", 1)
        entries.append(WindowEntry(dst.lstrip("%"), int(size)))
    return tuple(entries)


def format_window(entries: Tuple[WindowEntry, ...]) -> str:
    return ";".join(str(e) for e in entries)


def site_id(function: str, anchor: str) -> str:
    return f"{function}:{anchor}"


@dataclass(frozen=True)
class CheckSite:
    """A single inserted check, escape record or range query.

    ``group_base``/``base_offset`` locate the checked access relative to the
    originating pointer; ``src_offset`` is where ``base`` itself sits
    relative to that pointer. Offsets are None once any step is dynamic.
    """

    id: str
    function: str
    kind: SiteKind
    anchor: str
    position: Position
    base: Optional[Operand] = None
    result: Optional[Operand] = None
    access_size: int = 0
    static_offset: Optional[int] = None
    group_base: Optional[str] = None
    base_offset: Optional[int] = None
    src_offset: Optional[int] = None
    window: Tuple[WindowEntry, ...] = ()
    removable_by: FrozenSet[str] = field(default_factory=frozenset)

    @property
    def is_check(self) -> bool:
        return self.kind in (SiteKind.RANGE_CHECK, SiteKind.CAST_CHECK)

    @property
    def end(self) -> Optional[int]:
        if self.base_offset is None:
            return None
        return self.base_offset + self.access_size

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "anchor": self.anchor,
            "base": str(self.base) if self.base is not None else None,
            "result": str(self.result) if self.result is not None else None,
            "access_size": self.access_size,
            "static_offset": self.static_offset,
            "group_base": self.group_base,
            "base_offset": self.base_offset,
            "removable_by": sorted(self.removable_by),
        }


def _site_for(fn: Function, pos: Position) -> Optional[CheckSite]:
    inst = fn.instruction_at(pos)
    kind = _KIND_BY_OPCODE.get(inst.opcode)
    if kind is None:
        return None
    anchor = inst.get_meta(SITE_KEY) or inst.ref
    common = dict(
        id=site_id(fn.name, anchor),
        function=fn.name,
        kind=kind,
        anchor=anchor,
        position=pos,
    )

    if kind is SiteKind.RANGE_INIT:
        base = inst.args[0]
        info = trace_base(fn, base)
        return CheckSite(
            **common,  # type: ignore[arg-type]
            base=base,
            group_base=str(info.base),
            src_offset=info.cumulative_static_offset,
        )

    if kind is SiteKind.ESCAPE_TRACK:
        return CheckSite(**common, base=inst.args[0], result=inst.args[1])  # type: ignore[arg-type]

    if kind is SiteKind.CAST_CHECK:
        src = dst = inst.args[0]
        size_arg = inst.args[1]
    elif kind is SiteKind.RANGE_CHECK:
        src, dst, size_arg = inst.args
    else:
        # assertrange: the range operand stands in for the source
        rng, dst, size_arg = inst.args
        src = rng
        range_def = fn.definitions.get(getattr(rng, "name", ""))
        if isinstance(range_def, Instruction):
            src = range_def.args[0]

    access_size = size_arg.value if isinstance(size_arg, Const) else 0
    src_info = trace_base(fn, src)
    dst_info = trace_base(fn, dst)
    anchor_def = fn.definitions.get(getattr(dst, "name", ""))
    static_offset = getattr(anchor_def, "static_offset", None)
    base_offset = dst_info.cumulative_static_offset
    if str(dst_info.base) != str(src_info.base):
        base_offset = None
    return CheckSite(
        **common,  # type: ignore[arg-type]
        base=src,
        result=dst,
        access_size=access_size,
        static_offset=static_offset if kind is SiteKind.RANGE_CHECK else 0,
        group_base=str(src_info.base),
        base_offset=base_offset,
        src_offset=src_info.cumulative_static_offset,
        window=parse_window(inst.get_meta(WINDOW_KEY)),
    )


def collect_function_sites(fn: Function) -> List[CheckSite]:
    sites = []
    for pos, _ in fn.iter_instructions():
        site = _site_for(fn, pos)
        if site is not None:
            sites.append(site)
    return sites


def collect_sites(target: Union[Program, Function]) -> List[CheckSite]:
    if isinstance(target, Function):
        return collect_function_sites(target)
    sites: List[CheckSite] = []
    for fn in target.functions:
        sites.extend(collect_function_sites(fn))
    return sites
