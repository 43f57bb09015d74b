"""Structural and SSA validation of parsed programs."""

from dataclasses import asdict, dataclass
from typing import Dict, List, Optional

from core.logger import logger
from ir.analysis import operand_type
from ir.cfg import build_cfg
from ir.dominators import compute_dominators
from ir.errors import IRValidationError
from ir.model import (INTRINSICS, Const, Function, Instruction, Operand, Param,
                      Position, Program, Value)
from ir.parser import parse_program
from ir.typedefs import (SCALAR_SIZES, TypeDef, is_integer, is_pointer,
                         pointee, pointer_to, size_of)


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    function: str
    instruction: str
    message: str

    def to_dict(self) -> dict:
        return asdict(self)

    def __str__(self) -> str:
        where = ":".join(p for p in (self.function, self.instruction) if p)
        return f"{where}: {self.message}" if where else self.message


def load_program(text: str) -> Program:
    """Parse and validate; raises IRSyntaxError or IRValidationError."""
    program = parse_program(text)
    diagnostics = validate_program(program)
    if diagnostics:
        raise IRValidationError(diagnostics)
    return program


def validate_program(program: Program) -> List[Diagnostic]:
    """Empty list iff the program satisfies every type, block and SSA rule."""
    diagnostics: List[Diagnostic] = []
    for typedef in program.types:
        diagnostics.extend(_check_type(typedef, program.type_map))

    entry = program.function_map.get(program.entry)
    if entry is None:
        diagnostics.append(
            Diagnostic("error", "", "", f"entry function @{program.entry} not found")
        )
    elif entry.params:
        diagnostics.append(
            Diagnostic("error", entry.name, "", "entry function takes no parameters")
        )

    for fn in program.functions:
        diagnostics.extend(_FunctionChecker(program, fn).run())

    if diagnostics:
        logger.debug(f"Validation found {len(diagnostics)} problem(s)")
    return diagnostics


def _check_type(typedef: TypeDef, types: Dict[str, TypeDef]) -> List[Diagnostic]:
    found: List[Diagnostic] = []

    def report(message: str) -> None:
        found.append(Diagnostic("error", "", f"type {typedef.name}", message))

    if typedef.byte_size < 0:
        report("byte size must be non-negative")
    if typedef.alignment <= 0 or typedef.alignment & (typedef.alignment - 1):
        report(f"alignment {typedef.alignment} is not a power of two")
    previous_end = 0
    previous_offset = -1
    for index, field in enumerate(typedef.fields):
        if field.is_array and index != len(typedef.fields) - 1:
            report(f"array field '{field.name}' must be last")
            continue
        if field.offset <= previous_offset:
            report(f"field '{field.name}' offset {field.offset} does not increase")
            continue
        try:
            field_size = size_of(field.elem_type, types)
        except KeyError:
            report(f"field '{field.name}' has unknown type {field.elem_type}")
            continue
        if field.offset < previous_end:
            report(f"field '{field.name}' overlaps the previous field")
        elif field.is_array:
            if field.offset > typedef.byte_size:
                report(f"tail '{field.name}' starts beyond the fixed prefix")
        elif field.offset + field_size > typedef.byte_size:
            report(
                f"field '{field.name}' at {field.offset} exceeds size {typedef.byte_size}"
            )
        previous_offset = field.offset
        previous_end = field.offset + (0 if field.is_array else field_size)
    return found


class _FunctionChecker:
    def __init__(self, program: Program, fn: Function):
        self.program = program
        self.fn = fn
        self.types = program.type_map
        self.found: List[Diagnostic] = []

    def report(self, inst: Optional[Instruction], message: str) -> None:
        ref = inst.ref if inst is not None else ""
        self.found.append(Diagnostic("error", self.fn.name, ref, message))

    def run(self) -> List[Diagnostic]:
        fn = self.fn
        labels = {b.label for b in fn.blocks}
        structurally_sound = True
        for block in fn.blocks:
            if not block.instructions or not block.instructions[-1].is_terminator:
                self.found.append(
                    Diagnostic(
                        "error", fn.name, block.label, "block lacks a terminator"
                    )
                )
                structurally_sound = False
            for inst in block.instructions[:-1]:
                if inst.is_terminator:
                    self.report(inst, f"terminator in the middle of block {block.label}")
                    structurally_sound = False
            for inst in block.instructions:
                for target in inst.labels:
                    if target not in labels:
                        self.report(inst, f"unknown label '{target}'")
                        structurally_sound = False
                self._check_types(inst)
        if structurally_sound:
            self._check_ssa()
        return self.found

    # ─── SSA ──────────────────────────────────────────────────────────────

    def _check_ssa(self) -> None:
        fn = self.fn
        cfg = build_cfg(fn)
        dom = compute_dominators(cfg)
        defs = fn.positions
        for pos, inst in fn.iter_instructions():
            if pos.label not in cfg.reachable:
                continue
            if inst.opcode == "phi":
                preds = cfg.predecessors[pos.label]
                for arg, incoming in zip(inst.args, inst.labels):
                    if incoming not in preds:
                        self.report(inst, f"'{incoming}' is not a predecessor")
                        continue
                    if incoming not in cfg.reachable:
                        continue
                    end = Position(incoming, len(fn.block_map[incoming].instructions))
                    self._check_use(inst, arg, end, dom, defs)
                continue
            for arg in inst.args:
                self._check_use(inst, arg, pos, dom, defs)

    def _check_use(self, inst, arg, use: Position, dom, defs) -> None:
        if not isinstance(arg, Value):
            return
        definition = self.fn.definitions.get(arg.name)
        if definition is None or isinstance(definition, Param):
            return
        def_pos = defs[arg.name]
        if def_pos.label == use.label:
            ok = def_pos.index < use.index
        else:
            ok = dom.strictly_dominates_block(def_pos.label, use.label)
        if not ok:
            self.report(inst, f"use of %{arg.name} is not dominated by its definition")

    # ─── Types ────────────────────────────────────────────────────────────

    def _type(self, operand: Operand) -> str:
        return operand_type(self.program, self.fn, operand)

    def _expect(self, inst: Instruction, operand: Operand, expected: str) -> None:
        if isinstance(operand, Const):
            if not is_integer(expected):
                self.report(inst, f"literal {operand.value} used where {expected} expected")
            return
        actual = self._type(operand)
        if actual != expected:
            self.report(inst, f"{operand} has type {actual}, expected {expected}")

    def _expect_int(self, inst: Instruction, operand: Operand) -> None:
        if isinstance(operand, Const):
            return
        if not is_integer(self._type(operand)):
            self.report(inst, f"{operand} must be an integer")

    def _expect_pointer(self, inst: Instruction, operand: Operand) -> Optional[str]:
        actual = None if isinstance(operand, Const) else self._type(operand)
        if not is_pointer(actual):
            self.report(inst, f"{operand} must be a pointer")
            return None
        return actual

    def _check_types(self, inst: Instruction) -> None:
        op = inst.opcode
        args = inst.args
        if op == "binop":
            for arg in args:
                self._expect(inst, arg, inst.elem_type or "")
            if not is_integer(inst.elem_type):
                self.report(inst, "binop operates on integers only")
        elif op == "cmp":
            for arg in args:
                self._expect(inst, arg, inst.elem_type or "")
        elif op in ("alloc", "calloc"):
            for arg in args:
                self._expect_int(inst, arg)
        elif op == "realloc":
            self._expect_pointer(inst, args[0])
            self._expect_int(inst, args[1])
        elif op == "free":
            self._expect_pointer(inst, args[0])
        elif op == "ptradd":
            base_type = self._expect_pointer(inst, args[0])
            if base_type is not None and pointee(base_type) != inst.elem_type:
                self.report(
                    inst, f"ptradd element {inst.elem_type} does not match {base_type}"
                )
            for index in args[1:]:
                self._expect_int(inst, index)
        elif op == "cast":
            source = self._type(args[0]) if not isinstance(args[0], Const) else ""
            if not is_pointer(source):
                self.report(inst, "int-to-pointer cast forbidden")
        elif op in ("load", "store"):
            pointer = args[0] if op == "load" else args[1]
            elem = inst.elem_type or ""
            if not (is_pointer(elem) or elem in SCALAR_SIZES):
                self.report(inst, f"cannot {op} a value of type {elem}")
            self._expect(inst, pointer, pointer_to(elem))
            if op == "store":
                self._expect(inst, args[0], elem)
        elif op == "phi":
            for arg in args:
                self._expect(inst, arg, inst.rtype or "")
        elif op == "condbr":
            self._expect_int(inst, args[0])
        elif op == "call":
            self._check_call(inst)
        elif op == "ret":
            if self.fn.ret_type == "void":
                if args:
                    self.report(inst, "void function returns a value")
            elif not args:
                self.report(inst, f"missing return value of type {self.fn.ret_type}")
            else:
                self._expect(inst, args[0], self.fn.ret_type)
        elif op in ("checkrange", "castcheck", "getrange", "staticrange"):
            self._expect_pointer(inst, args[0])
        elif op == "escape":
            self._expect_pointer(inst, args[0])
            self._expect_pointer(inst, args[1])

    def _check_call(self, inst: Instruction) -> None:
        if inst.callee in INTRINSICS:
            if len(inst.args) != 1:
                self.report(inst, f"@{inst.callee} takes one integer")
            else:
                self._expect_int(inst, inst.args[0])
            if inst.result is not None:
                self.report(inst, f"@{inst.callee} returns nothing")
            return
        callee = self.program.function_map.get(inst.callee or "")
        if callee is None:
            self.report(inst, f"unknown function @{inst.callee}")
            return
        if len(callee.params) != len(inst.args):
            self.report(
                inst, f"@{callee.name} expects {len(callee.params)} argument(s)"
            )
            return
        for arg, param in zip(inst.args, callee.params):
            self._expect(inst, arg, param.type)
        declared = inst.rtype or "void"
        if declared != callee.ret_type:
            self.report(inst, f"@{callee.name} returns {callee.ret_type}, not {declared}")
