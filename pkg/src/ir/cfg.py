"""Control-flow graph construction and path queries."""

from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Set, Tuple

from ir.model import Function, Position


@dataclass(frozen=True)
class CFG:
    entry: str
    labels: Tuple[str, ...]
    successors: Dict[str, Tuple[str, ...]]
    predecessors: Dict[str, Tuple[str, ...]]
    reachable: frozenset
    exits: Tuple[str, ...] = field(default=())

    @property
    def unreachable(self) -> Tuple[str, ...]:
        return tuple(lbl for lbl in self.labels if lbl not in self.reachable)

    def edges(self) -> List[Tuple[str, str]]:
        return [(src, dst) for src in self.labels for dst in self.successors[src]]


def build_cfg(fn: Function) -> CFG:
    """Successor/predecessor edges from block terminators; unreachable blocks flagged."""
    labels = tuple(b.label for b in fn.blocks)
    succs: Dict[str, Tuple[str, ...]] = {}
    preds: Dict[str, List[str]] = {lbl: [] for lbl in labels}
    exits = []
    for block in fn.blocks:
        term = block.terminator
        targets: Tuple[str, ...] = ()
        if term is not None:
            if term.opcode == "ret":
                exits.append(block.label)
            # condbr with identical arms is a single edge
            targets = tuple(dict.fromkeys(t for t in term.labels if t in preds))
        succs[block.label] = targets
        for target in targets:
            preds[target].append(block.label)

    seen = {labels[0]} if labels else set()
    queue = deque(seen)
    while queue:
        node = queue.popleft()
        for nxt in succs[node]:
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)

    return CFG(
        entry=labels[0] if labels else "",
        labels=labels,
        successors=succs,
        predecessors={k: tuple(v) for k, v in preds.items()},
        reachable=frozenset(seen),
        exits=tuple(exits),
    )


def reaching(cfg: CFG, target: str) -> Set[str]:
    """Blocks from which ``target`` is reachable, target included."""
    found = {target}
    queue = deque([target])
    while queue:
        node = queue.popleft()
        for pred in cfg.predecessors.get(node, ()):
            if pred not in found:
                found.add(pred)
                queue.append(pred)
    return found


def intervening(fn: Function, cfg: CFG, start: Position, end: Position) -> List[Position]:
    """Instructions that may run after ``start`` and before ``end``.

    Covers every path from start to the next execution of end that does not
    execute start again. Neither endpoint is included.
    """
    result: List[Position] = []
    if start.label == end.label and start.index < end.index:
        return [Position(start.label, i) for i in range(start.index + 1, end.index)]

    def block_len(label: str) -> int:
        return len(fn.block_map[label].instructions)

    # rest of the start block
    result.extend(
        Position(start.label, i) for i in range(start.index + 1, block_len(start.label))
    )
    leads_to_end = reaching(cfg, end.label)
    visited: Set[str] = set()
    queue = deque(cfg.successors.get(start.label, ()))
    while queue:
        label = queue.popleft()
        if label in visited or label not in leads_to_end:
            continue
        visited.add(label)
        stop = block_len(label)
        halted = False
        if label == end.label:
            stop = min(stop, end.index)
            halted = True
        if label == start.label:
            stop = min(stop, start.index)
            halted = True
        result.extend(Position(label, i) for i in range(stop))
        if not halted:
            queue.extend(cfg.successors[label])
    return result
