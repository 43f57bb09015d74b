"""Immutable data model of the mini SSA IR."""

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Dict, FrozenSet, Iterator, NamedTuple, Optional, Tuple, Union

from ir.typedefs import SCALAR_TYPES, TypeDef, pointer_to

TERMINATORS = frozenset({"br", "condbr", "ret"})
INSTRUMENTATION = frozenset(
    {"checkrange", "castcheck", "escape", "getrange", "staticrange", "assertrange"}
)
ALLOCATORS = frozenset({"alloc", "calloc", "realloc"})
# Instructions free of memory effects and runtime calls.
PURE_OPCODES = frozenset({"const", "binop", "cmp", "ptradd", "cast"})
INTRINSICS = frozenset({"print_i64"})

BINOPS = frozenset(
    {"add", "sub", "mul", "sdiv", "srem", "and", "or", "xor", "shl", "shr"}
)
CMP_PREDICATES = frozenset({"eq", "ne", "lt", "le", "gt", "ge"})

INSTRUMENT_KINDS = ("range", "cast", "escape")


@dataclass(frozen=True)
class Value:
    name: str

    def __str__(self) -> str:
        return f"%{self.name}"


@dataclass(frozen=True)
class Const:
    value: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class GlobalRef:
    name: str

    def __str__(self) -> str:
        return f"@{self.name}"


Operand = Union[Value, Const, GlobalRef]


class Position(NamedTuple):
    """Location of an instruction: block label + index within the block."""

    label: str
    index: int


@dataclass(frozen=True)
class Instruction:
    opcode: str
    result: Optional[str] = None
    rtype: Optional[str] = None
    args: Tuple[Operand, ...] = ()
    elem_type: Optional[str] = None
    pred: Optional[str] = None
    labels: Tuple[str, ...] = ()
    callee: Optional[str] = None
    static_offset: Optional[int] = None
    uid: Optional[int] = None
    meta: Tuple[Tuple[str, str], ...] = ()

    @property
    def ref(self) -> str:
        """Stable reference used in diagnostics and site ids (``%x`` or ``#n``)."""
        if self.result is not None:
            return f"%{self.result}"
        if self.uid is not None:
            return f"#{self.uid}"
        return self.get_meta("site") or self.opcode

    @property
    def is_terminator(self) -> bool:
        return self.opcode in TERMINATORS

    @property
    def is_instrumentation(self) -> bool:
        return self.opcode in INSTRUMENTATION

    @property
    def is_barrier(self) -> bool:
        """True for instructions that may release heap objects."""
        if self.opcode in ("free", "realloc"):
            return True
        return self.opcode == "call" and self.callee not in INTRINSICS

    def get_meta(self, key: str) -> Optional[str]:
        for k, v in self.meta:
            if k == key:
                return v
        return None

    def with_meta(self, key: str, value: Optional[str]) -> "Instruction":
        entries = tuple((k, v) for k, v in self.meta if k != key)
        if value is not None:
            entries = entries + ((key, value),)
        return replace(self, meta=entries)


@dataclass(frozen=True)
class Block:
    label: str
    instructions: Tuple[Instruction, ...]

    @property
    def terminator(self) -> Optional[Instruction]:
        if self.instructions and self.instructions[-1].is_terminator:
            return self.instructions[-1]
        return None


@dataclass(frozen=True)
class Param:
    name: str
    type: str


@dataclass(frozen=True)
class Function:
    name: str
    params: Tuple[Param, ...]
    ret_type: str
    blocks: Tuple[Block, ...]

    @property
    def entry_label(self) -> str:
        return self.blocks[0].label

    @cached_property
    def block_map(self) -> Dict[str, Block]:
        return {block.label: block for block in self.blocks}

    @cached_property
    def definitions(self) -> Dict[str, Union[Instruction, Param]]:
        defs: Dict[str, Union[Instruction, Param]] = {p.name: p for p in self.params}
        for block in self.blocks:
            for inst in block.instructions:
                if inst.result is not None:
                    defs[inst.result] = inst
        return defs

    @cached_property
    def value_types(self) -> Dict[str, str]:
        types = {p.name: p.type for p in self.params}
        for block in self.blocks:
            for inst in block.instructions:
                if inst.result is not None and inst.rtype is not None:
                    types[inst.result] = inst.rtype
        return types

    @cached_property
    def positions(self) -> Dict[str, Position]:
        """Position of every value definition in the body."""
        found: Dict[str, Position] = {}
        for block in self.blocks:
            for index, inst in enumerate(block.instructions):
                if inst.result is not None:
                    found[inst.result] = Position(block.label, index)
        return found

    def iter_instructions(self) -> Iterator[Tuple[Position, Instruction]]:
        for block in self.blocks:
            for index, inst in enumerate(block.instructions):
                yield Position(block.label, index), inst

    def instruction_at(self, pos: Position) -> Instruction:
        return self.block_map[pos.label].instructions[pos.index]


@dataclass(frozen=True)
class GlobalDef:
    """A global array ``count`` elements of ``elem_type``, optionally initialized."""

    name: str
    elem_type: str
    count: int = 1
    init: bytes = b""

    @property
    def type(self) -> str:
        return pointer_to(self.elem_type)


@dataclass(frozen=True)
class Program:
    types: Tuple[TypeDef, ...] = ()
    globals: Tuple[GlobalDef, ...] = ()
    functions: Tuple[Function, ...] = ()
    entry: str = "main"
    instrumented: Optional[FrozenSet[str]] = field(default=None)

    @cached_property
    def type_map(self) -> Dict[str, TypeDef]:
        registry = dict(SCALAR_TYPES)
        registry.update({t.name: t for t in self.types})
        return registry

    @cached_property
    def function_map(self) -> Dict[str, Function]:
        return {f.name: f for f in self.functions}

    @cached_property
    def global_map(self) -> Dict[str, GlobalDef]:
        return {g.name: g for g in self.globals}

    def function(self, name: str) -> Function:
        return self.function_map[name]

    def with_function(self, fn: Function) -> "Program":
        functions = tuple(fn if f.name == fn.name else f for f in self.functions)
        return replace(self, functions=functions)

    def with_functions(self, functions: Tuple[Function, ...]) -> "Program":
        return replace(self, functions=functions)
