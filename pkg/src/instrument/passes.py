"""Insert range checks, cast checks and escape tracking into a plain program."""

from dataclasses import dataclass, replace
from typing import Callable, FrozenSet, List, Optional, Tuple

from core.logger import logger
from instrument.sites import SITE_KEY, CheckSite, SiteKind, collect_sites
from ir.analysis import HeapClass, is_heap_pointer, operand_type
from ir.model import (Block, Const, Function, GlobalRef, Instruction, Program,
                      Value)
from ir.typedefs import is_pointer, pointee, size_of


class AlreadyInstrumentedError(ValueError):
    """Raised when a program carrying the instrumentation marker is instrumented again."""


@dataclass(frozen=True)
class InstrumentOptions:
    range_checks: bool = True
    cast_checks: bool = True
    escapes: bool = True

    @property
    def kinds(self) -> FrozenSet[str]:
        chosen = []
        if self.range_checks:
            chosen.append("range")
        if self.cast_checks:
            chosen.append("cast")
        if self.escapes:
            chosen.append("escape")
        return frozenset(chosen)

    @classmethod
    def from_kinds(cls, kinds) -> "InstrumentOptions":
        kinds = {k.strip() for k in kinds if k.strip()}
        unknown = kinds - {"range", "cast", "escape"}
        if unknown:
            raise ValueError(f"unknown instrumentation kind(s): {', '.join(sorted(unknown))}")
        return cls(
            range_checks="range" in kinds,
            cast_checks="cast" in kinds,
            escapes="escape" in kinds,
        )


# An inserter looks at one instruction and returns what goes before and after it.
_Inserter = Callable[[Instruction], Tuple[List[Instruction], List[Instruction]]]


def _rewrite(fn: Function, inserter: _Inserter) -> Function:
    blocks = []
    for block in fn.blocks:
        body: List[Instruction] = []
        for inst in block.instructions:
            before, after = inserter(inst)
            body.extend(before)
            body.append(inst)
            body.extend(after)
        blocks.append(Block(block.label, tuple(body)))
    return replace(fn, blocks=tuple(blocks))


def _may_be_heap(fn: Function, value) -> bool:
    if isinstance(value, (Const, GlobalRef)):
        return False
    return is_heap_pointer(fn, value) is not HeapClass.NON_HEAP


def instrument_range_checks(fn: Function, program: Program) -> Function:
    """Add ``checkrange base, result, size`` after every ptradd on a possibly-heap base."""
    types = program.type_map

    def inserter(inst: Instruction):
        if inst.opcode != "ptradd" or not _may_be_heap(fn, inst.args[0]):
            return [], []
        size = size_of(pointee(inst.rtype or ""), types)
        check = Instruction(
            opcode="checkrange",
            args=(inst.args[0], Value(inst.result or ""), Const(size)),
            meta=((SITE_KEY, inst.ref),),
        )
        return [], [check]

    return _rewrite(fn, inserter)


def instrument_cast_checks(fn: Function, program: Program) -> Function:
    """Add ``castcheck result, sizeof(dest)`` after every non-identity cast of a possibly-heap pointer."""
    types = program.type_map

    def inserter(inst: Instruction):
        if inst.opcode != "cast":
            return [], []
        source = inst.args[0]
        if operand_type(program, fn, source) == inst.rtype or not _may_be_heap(fn, source):
            return [], []
        size = size_of(pointee(inst.rtype or ""), types)
        check = Instruction(
            opcode="castcheck",
            args=(Value(inst.result or ""), Const(size)),
            meta=((SITE_KEY, inst.ref),),
        )
        return [], [check]

    return _rewrite(fn, inserter)


def instrument_escapes(fn: Function, program: Program) -> Function:
    """Add ``escape location, value`` before every store of a possibly-heap pointer."""

    def inserter(inst: Instruction):
        if inst.opcode != "store" or not is_pointer(inst.elem_type):
            return [], []
        value, location = inst.args
        if not _may_be_heap(fn, value):
            return [], []
        track = Instruction(
            opcode="escape",
            args=(location, value),
            meta=((SITE_KEY, inst.ref),),
        )
        return [track], []

    return _rewrite(fn, inserter)


def instrument_program(
    program: Program, options: Optional[InstrumentOptions] = None
) -> Tuple[Program, List[CheckSite]]:
    """Apply the enabled instrumentation to every function.

    Raises:
        AlreadyInstrumentedError: the program already carries a marker.
    """
    if program.instrumented is not None:
        raise AlreadyInstrumentedError(
            f"program is already instrumented ({', '.join(sorted(program.instrumented)) or 'nothing'})"
        )
    options = options or InstrumentOptions()

    functions = []
    for fn in program.functions:
        if options.range_checks:
            fn = instrument_range_checks(fn, program)
        if options.cast_checks:
            fn = instrument_cast_checks(fn, program)
        if options.escapes:
            fn = instrument_escapes(fn, program)
        functions.append(fn)

    result = replace(program.with_functions(tuple(functions)), instrumented=options.kinds)
    sites = collect_sites(result)
    logger.info(
        f"Instrumented {len(functions)} function(s): "
        f"{sum(1 for s in sites if s.kind is SiteKind.RANGE_CHECK)} range, "
        f"{sum(1 for s in sites if s.kind is SiteKind.CAST_CHECK)} cast, "
        f"{sum(1 for s in sites if s.kind is SiteKind.ESCAPE_TRACK)} escape"
    )
    return result, sites
