"""Mini SSA IR: model, text format, validation, CFG and dominance."""

from ir.analysis import (BaseInfo, HeapClass, Origin, is_heap_pointer,
                         trace_base)
from ir.cfg import CFG, build_cfg, intervening
from ir.dominators import (DominatorInfo, compute_dominators,
                           compute_postdominators)
from ir.errors import IRSyntaxError, IRValidationError
from ir.model import (Block, Const, Function, GlobalDef, GlobalRef,
                      Instruction, Param, Position, Program, Value)
from ir.parser import parse_program
from ir.printer import print_program
from ir.validate import Diagnostic, load_program, validate_program

__all__ = [
    "BaseInfo",
    "Block",
    "CFG",
    "Const",
    "Diagnostic",
    "DominatorInfo",
    "Function",
    "GlobalDef",
    "GlobalRef",
    "HeapClass",
    "IRSyntaxError",
    "IRValidationError",
    "Instruction",
    "Origin",
    "Param",
    "Position",
    "Program",
    "Value",
    "build_cfg",
    "compute_dominators",
    "compute_postdominators",
    "intervening",
    "is_heap_pointer",
    "load_program",
    "parse_program",
    "print_program",
    "trace_base",
    "validate_program",
]
