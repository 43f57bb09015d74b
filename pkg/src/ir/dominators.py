"""Dominator and post-dominator trees by iterative fixed point."""

from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Set

from ir.cfg import CFG
from ir.model import Position

VIRTUAL_EXIT = "<exit>"


def _fixed_point(
    nodes: List[str], start: str, incoming: Mapping[str, Iterable[str]]
) -> Dict[str, Set[str]]:
    """dom(n) = {n} | intersection of dom(p) over p in incoming(n)."""
    dom: Dict[str, Set[str]] = {}
    for node in nodes:
        dom[node] = {node} if node == start else set(nodes)

    change = True
    while change:
        change = False
        for node in nodes:
            if node == start:
                continue
            pred_doms = [dom[p] for p in incoming.get(node, ()) if p in dom]
            if not pred_doms:
                continue
            new_dom = {node} | set.intersection(*pred_doms)
            if new_dom != dom[node]:
                dom[node] = new_dom
                change = True
    return dom


def _immediate(dom: Mapping[str, Set[str]]) -> Dict[str, Optional[str]]:
    idom: Dict[str, Optional[str]] = {}
    for node, doms in dom.items():
        strict = doms - {node}
        idom[node] = None
        for candidate in strict:
            # the immediate dominator is the strict dominator dominated by all others
            if dom[candidate] == strict:
                idom[node] = candidate
                break
    return idom


@dataclass(frozen=True)
class DominatorInfo:
    """Block dominance refined to instructions by intra-block order.

    With ``post=True`` the relation is post-dominance towards a virtual exit
    joining every ``ret`` block.
    """

    post: bool
    root: str
    sets: Dict[str, FrozenSet[str]]
    idom: Dict[str, Optional[str]]

    def dominates_block(self, a: str, b: str) -> bool:
        doms = self.sets.get(b)
        return doms is not None and a in doms

    def strictly_dominates_block(self, a: str, b: str) -> bool:
        return a != b and self.dominates_block(a, b)

    def dominates(self, a: Position, b: Position) -> bool:
        if a.label not in self.sets or b.label not in self.sets:
            return False
        if a.label == b.label:
            return a.index >= b.index if self.post else a.index <= b.index
        return self.strictly_dominates_block(a.label, b.label)

    # post-dominance reads better under its own name
    postdominates = dominates

    def nearest_common(self, labels: Iterable[str]) -> Optional[str]:
        """Deepest block dominating every label given."""
        common: Optional[Set[str]] = None
        for label in labels:
            doms = self.sets.get(label)
            if doms is None:
                return None
            common = set(doms) if common is None else common & doms
        if not common:
            return None
        # the deepest one has the largest dominator set of its own
        return max(common, key=lambda n: (len(self.sets[n]), n))


def compute_dominators(cfg: CFG) -> DominatorInfo:
    nodes = [lbl for lbl in cfg.labels if lbl in cfg.reachable]
    dom = _fixed_point(nodes, cfg.entry, cfg.predecessors)
    return DominatorInfo(
        post=False,
        root=cfg.entry,
        sets={k: frozenset(v) for k, v in dom.items()},
        idom=_immediate(dom),
    )


def compute_postdominators(cfg: CFG) -> DominatorInfo:
    nodes = [lbl for lbl in cfg.labels if lbl in cfg.reachable]
    successors: Dict[str, List[str]] = {n: list(cfg.successors[n]) for n in nodes}
    for exit_label in cfg.exits:
        if exit_label in successors:
            successors[exit_label].append(VIRTUAL_EXIT)
    nodes.append(VIRTUAL_EXIT)
    pdom = _fixed_point(nodes, VIRTUAL_EXIT, successors)
    pdom.pop(VIRTUAL_EXIT)

    # blocks that never reach a ret are post-dominated by nothing but themselves
    reaches_exit = set(cfg.exits)
    changed = True
    while changed:
        changed = False
        for node, succs in successors.items():
            if node not in reaches_exit and any(s in reaches_exit for s in succs):
                reaches_exit.add(node)
                changed = True
    for node in pdom:
        if node not in reaches_exit:
            pdom[node] = {node}

    for doms in pdom.values():
        doms.discard(VIRTUAL_EXIT)
    idom = _immediate(pdom)
    for label in cfg.exits:
        if label in idom:
            idom[label] = idom[label] or VIRTUAL_EXIT
    return DominatorInfo(
        post=True,
        root=VIRTUAL_EXIT,
        sets={k: frozenset(v) for k, v in pdom.items()},
        idom=idom,
    )
