"""Shared analyses and an edit buffer for the per-function optimization passes."""

from dataclasses import replace
from functools import cached_property
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

from instrument.sites import CheckSite, collect_function_sites
from ir.cfg import build_cfg, intervening
from ir.dominators import compute_dominators, compute_postdominators
from ir.model import (ALLOCATORS, PURE_OPCODES, Block, Const, Function,
                      GlobalRef, Instruction, Operand, Param, Position,
                      Program, Value)

# (function, value) pairs on the current liveness path
_Visiting = FrozenSet[Tuple[str, str]]


class FunctionContext:
    """CFG, dominator trees and check sites of one function, computed once per pass."""

    def __init__(self, program: Program, fn: Function):
        self.program = program
        self.fn = fn
        self.cfg = build_cfg(fn)
        self.dom = compute_dominators(self.cfg)
        self.pdom = compute_postdominators(self.cfg)
        self.sites: List[CheckSite] = collect_function_sites(fn)
        self._peers: Dict[str, FunctionContext] = {fn.name: self}
        self._live_memo: Dict[Tuple[str, Position], bool] = {}

    @property
    def name(self) -> str:
        return self.fn.name

    @cached_property
    def types(self):
        return self.program.type_map

    @property
    def instrumented(self) -> frozenset:
        return self.program.instrumented or frozenset()

    def instruction(self, pos: Position) -> Instruction:
        return self.fn.instruction_at(pos)

    def definition(self, value: Optional[str]) -> Optional[Instruction]:
        """Defining instruction of ``%name`` (leading % optional); None for params."""
        if not value:
            return None
        found = self.fn.definitions.get(value.lstrip("%"))
        return found if isinstance(found, Instruction) else None

    def reachable(self, pos: Position) -> bool:
        return pos.label in self.cfg.reachable

    def barrier_between(self, start: Position, end: Position) -> bool:
        """True if something that may release heap memory can run between the two points."""
        return any(
            self.fn.instruction_at(p).is_barrier
            for p in intervening(self.fn, self.cfg, start, end)
        )

    def _block_end(self, label: str) -> Position:
        return Position(label, len(self.fn.block_map[label].instructions) - 1)

    def _peer(self, name: str) -> "FunctionContext":
        peer = self._peers.get(name)
        if peer is None:
            peer = FunctionContext(self.program, self.program.function(name))
            peer._peers = self._peers
            self._peers[name] = peer
        return peer

    def live_at(self, operand: Operand, pos: Position) -> bool:
        """True if the object ``operand`` points into cannot have been freed before ``pos``.

        The pointer must trace through casts, ptradds, phis, parameters and call
        results back to an allocation or a global, with no barrier on any path
        from there to ``pos``. A parameter qualifies only when the argument is
        live at every call site. Loaded pointers never qualify.
        """
        return self._live_at(operand, pos, frozenset())

    def _live_at(self, operand: Operand, pos: Position, visiting: _Visiting) -> bool:
        if isinstance(operand, GlobalRef):
            return True
        if isinstance(operand, Const):
            return False
        key = (self.fn.name, operand.name)
        memo = (operand.name, pos)
        if memo in self._live_memo:
            return self._live_memo[memo]
        if key in visiting:
            return False
        visiting = visiting | {key}

        definition = self.fn.definitions.get(operand.name)
        if definition is None:
            live = False
        elif isinstance(definition, Param):
            live = not self.barrier_between(
                Position(self.fn.entry_label, -1), pos
            ) and self._arguments_live(self.fn.params.index(definition), visiting)
        else:
            start = self.fn.positions[operand.name]
            live = not self.barrier_between(start, pos) and self._defined_live(
                definition, start, visiting
            )
        self._live_memo[memo] = live
        return live

    def _defined_live(self, inst: Instruction, start: Position, visiting: _Visiting) -> bool:
        if inst.opcode in ALLOCATORS or inst.opcode == "slot":
            return True
        if inst.opcode in ("cast", "ptradd"):
            return self._live_at(inst.args[0], start, visiting)
        if inst.opcode == "phi":
            return all(
                label in self.fn.block_map and self._live_at(arg, self._block_end(label), visiting)
                for arg, label in zip(inst.args, inst.labels)
            )
        if inst.opcode == "call" and inst.callee in self.program.function_map:
            peer = self._peer(inst.callee)
            returns = [
                (p, ret)
                for p, ret in peer.fn.iter_instructions()
                if ret.opcode == "ret" and ret.args
            ]
            return bool(returns) and all(
                peer._live_at(ret.args[0], p, visiting) for p, ret in returns
            )
        return False

    def _arguments_live(self, index: int, visiting: _Visiting) -> bool:
        calls = [
            (caller.name, p, inst)
            for caller in self.program.functions
            for p, inst in caller.iter_instructions()
            if inst.opcode == "call" and inst.callee == self.fn.name
        ]
        return bool(calls) and all(
            len(inst.args) > index and self._peer(name)._live_at(inst.args[index], p, visiting)
            for name, p, inst in calls
        )

    def only_pure_between(self, first: Position, second: Position) -> bool:
        """Same block, ``first`` before ``second``, nothing but pure arithmetic between."""
        if first.label != second.label or first.index >= second.index:
            return False
        block = self.fn.block_map[first.label]
        return all(
            block.instructions[i].opcode in PURE_OPCODES
            for i in range(first.index + 1, second.index)
        )

    def constant_allocation(self, group_base: Optional[str]) -> Optional[Tuple[Position, int]]:
        """Position and requested size of a literal-size allocation named ``group_base``."""
        inst = self.definition(group_base)
        if inst is None or not group_base or not group_base.startswith("%"):
            return None
        if inst.opcode == "alloc" and isinstance(inst.args[0], Const):
            size = inst.args[0].value
        elif inst.opcode == "calloc" and all(isinstance(a, Const) for a in inst.args):
            size = inst.args[0].value * inst.args[1].value  # type: ignore[union-attr]
        else:
            return None
        return self.fn.positions[inst.result or ""], size


class FunctionEditor:
    """Collects removals, replacements and insertions keyed by original positions."""

    def __init__(self, fn: Function):
        self.fn = fn
        self._removed: Set[Position] = set()
        self._replaced: Dict[Position, Instruction] = {}
        self._before: Dict[Position, List[Instruction]] = {}
        self._after: Dict[Position, List[Instruction]] = {}
        self._reserved: Set[str] = set()

    @property
    def changed(self) -> bool:
        return bool(self._removed or self._replaced or self._before or self._after)

    def remove(self, pos: Position) -> None:
        self._removed.add(pos)

    def replace(self, pos: Position, inst: Instruction) -> None:
        self._replaced[pos] = inst

    def insert_before(self, pos: Position, inst: Instruction) -> None:
        self._before.setdefault(pos, []).append(inst)

    def insert_after(self, pos: Position, inst: Instruction) -> None:
        self._after.setdefault(pos, []).append(inst)

    def reserve(self, ctx: FunctionContext, prefix: str) -> str:
        """A value name unused by the function and by earlier reservations."""
        name, n = prefix, 0
        while name in ctx.fn.definitions or name in self._reserved:
            n += 1
            name = f"{prefix}.{n}"
        self._reserved.add(name)
        return name

    def apply(self) -> Function:
        if not self.changed:
            return self.fn
        blocks = []
        for block in self.fn.blocks:
            body: List[Instruction] = []
            for index, inst in enumerate(block.instructions):
                pos = Position(block.label, index)
                body.extend(self._before.get(pos, ()))
                if pos not in self._removed:
                    body.append(self._replaced.get(pos, inst))
                body.extend(self._after.get(pos, ()))
            blocks.append(Block(block.label, tuple(body)))
        return replace(self.fn, blocks=tuple(blocks))


def value_operand(name: str) -> Value:
    return Value(name.lstrip("%"))
