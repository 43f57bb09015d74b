"""Render Programs back to IR text."""

from typing import List

from ir.model import Const, Function, Instruction, Program
from ir.typedefs import TypeDef


def format_type(typedef: TypeDef) -> str:
    items = []
    for f in typedef.fields:
        array = "[]" if f.is_array else ""
        items.append(f"{f.elem_type} {f.name}{array} @{f.offset}")
    items.append(f"size {typedef.byte_size}")
    items.append(f"align {typedef.alignment}")
    flexible = " flexible" if typedef.is_flexible else ""
    return f"type {typedef.name}{flexible} {{ {'; '.join(items)} }}"


def format_instruction(inst: Instruction) -> str:
    args = [str(a) for a in inst.args]
    op = inst.opcode
    if op == "const":
        body = f"const {inst.rtype} {args[0]}"
    elif op == "binop":
        body = f"binop {inst.pred} {inst.elem_type} {args[0]}, {args[1]}"
    elif op == "cmp":
        body = f"cmp {inst.pred} {inst.elem_type} {args[0]}, {args[1]}"
    elif op == "slot":
        count = inst.args[0]
        suffix = f", {count}" if isinstance(count, Const) and count.value != 1 else ""
        body = f"slot {inst.elem_type}{suffix}"
    elif op == "ptradd":
        body = f"ptradd {inst.elem_type}, {', '.join(args)}"
    elif op == "cast":
        body = f"cast {args[0]} to {inst.elem_type}"
    elif op == "load":
        body = f"load {inst.elem_type}, {args[0]}"
    elif op == "store":
        body = f"store {inst.elem_type} {args[0]}, {args[1]}"
    elif op == "phi":
        arms = ", ".join(f"[{a}, {lbl}]" for a, lbl in zip(args, inst.labels))
        body = f"phi {inst.rtype} {arms}"
    elif op == "call":
        body = f"call {inst.rtype or 'void'} @{inst.callee}({', '.join(args)})"
    elif op == "br":
        body = f"br {inst.labels[0]}"
    elif op == "condbr":
        body = f"condbr {args[0]}, {inst.labels[0]}, {inst.labels[1]}"
    else:
        body = f"{op} {', '.join(args)}".rstrip()
    if inst.result is not None:
        body = f"%{inst.result} = {body}"
    for key, value in inst.meta:
        body += f" !{key}={value}"
    return body


def format_function(fn: Function) -> str:
    params = ", ".join(f"{p.type} %{p.name}" for p in fn.params)
    ret = "" if fn.ret_type == "void" else f" -> {fn.ret_type}"
    lines: List[str] = [f"func @{fn.name}({params}){ret} {{"]
    for block in fn.blocks:
        lines.append(f"{block.label}:")
        lines.extend(f"  {format_instruction(inst)}" for inst in block.instructions)
    lines.append("}")
    return "\n".join(lines)


def print_program(program: Program) -> str:
    lines: List[str] = []
    if program.instrumented is not None:
        kinds = [k for k in ("range", "cast", "escape") if k in program.instrumented]
        lines.append(" ".join(["instrumented"] + kinds))
    if program.entry != "main":
        lines.append(f"entry @{program.entry}")
    lines.extend(format_type(t) for t in program.types)
    for g in program.globals:
        count = f" x {g.count}" if g.count != 1 else ""
        init = f' = "{g.init.hex()}"' if g.init else ""
        lines.append(f"global @{g.name} : {g.elem_type}{count}{init}")
    if lines:
        lines.append("")
    for fn in program.functions:
        lines.append(format_function(fn))
        lines.append("")
    return "\n".join(lines)
