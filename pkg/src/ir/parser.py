"""Reader for the line-oriented IR text format (grammar in docs/ir-format.md)."""

import re
from dataclasses import dataclass, replace
from typing import Dict, List, Mapping, Optional, Tuple

from core.logger import logger
from ir.errors import IRSyntaxError
from ir.model import (BINOPS, CMP_PREDICATES, INSTRUMENT_KINDS, Block, Const,
                      Function, GlobalDef, GlobalRef, Instruction, Operand,
                      Param, Program, Value)
from ir.typedefs import (SCALAR_TYPES, FieldDef, TypeDef, TypeKind, base_name,
                         is_integer, is_pointer, pointer_to, record_alignment,
                         size_of)

_IDENT = r"[A-Za-z_][A-Za-z0-9_.]*"
_COMMENT_RE = re.compile(r"(^|\s)#.*$")
_TYPE_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*\**$")
_META_RE = re.compile(r"\s+!([A-Za-z_]+)=(\S+)\s*$")
_FUNC_RE = re.compile(rf"^func\s+@({_IDENT})\s*\((.*)\)\s*(?:->\s*(\S+))?\s*\{{$")
_TYPE_DECL_RE = re.compile(rf"^type\s+({_IDENT})(\s+flexible)?\s*\{{(.*)\}}$")
_FIELD_RE = re.compile(rf"^(\S+)\s+({_IDENT})(\[\])?\s+@(\d+)$")
_GLOBAL_RE = re.compile(
    rf'^global\s+@({_IDENT})\s*:\s*(\S+)(?:\s+x\s+(\d+))?(?:\s*=\s*"([0-9a-fA-F]*)")?$'
)
_LABEL_RE = re.compile(rf"^({_IDENT}):$")
_ASSIGN_RE = re.compile(rf"^%({_IDENT})\s*=\s*(.+)$")
_PHI_ARM_RE = re.compile(r"\[\s*([^,\]]+?)\s*,\s*([^\]]+?)\s*\]")
_CALL_RE = re.compile(rf"^(\S+)\s+@({_IDENT})\s*\((.*)\)$")
_CAST_RE = re.compile(r"^(\S+)\s+to\s+(\S+)$")
_STORE_RE = re.compile(r"^(\S+)\s+([^,]+?)\s*,\s*(\S+)$")

VALUE_OPCODES = frozenset(
    {
        "const",
        "binop",
        "cmp",
        "alloc",
        "calloc",
        "realloc",
        "slot",
        "ptradd",
        "cast",
        "load",
        "phi",
        "getrange",
        "staticrange",
    }
)
EFFECT_OPCODES = frozenset(
    {
        "free",
        "store",
        "br",
        "condbr",
        "ret",
        "checkrange",
        "castcheck",
        "escape",
        "assertrange",
    }
)


@dataclass
class _RawFunction:
    name: str
    params: Tuple[Param, ...]
    ret_type: str
    line: int
    body: List[Tuple[int, str]]


def parse_program(text: str) -> Program:
    """Parse IR text into a Program.

    Raises:
        IRSyntaxError: malformed text, unknown type/value/global references,
            duplicate definitions, or an integer converted to a pointer.
    """
    program = _Parser(text).parse()
    logger.debug(
        f"Parsed program: {len(program.functions)} function(s), "
        f"{len(program.types)} type(s), {len(program.globals)} global(s)"
    )
    return program


def parse_operand(token: str, line: Optional[int] = None, raw: str = "") -> Operand:
    token = token.strip()
    if token.startswith("%") and re.fullmatch(_IDENT, token[1:]):
        return Value(token[1:])
    if token.startswith("@") and re.fullmatch(_IDENT, token[1:]):
        return GlobalRef(token[1:])
    try:
        return Const(int(token, 0))
    except ValueError:
        raise IRSyntaxError(
            f"bad operand '{token}'", line, _column(raw, token)
        ) from None


def ptradd_layout(
    elem_type: str,
    indices: Tuple[Operand, ...],
    types: Mapping[str, TypeDef],
) -> Tuple[str, Optional[int]]:
    """Result type and static byte offset of ``ptradd elem_type, base, *indices``.

    Raises:
        ValueError: when the index list does not fit the element type.
    """
    if not indices:
        raise ValueError("ptradd needs at least one index")
    idx0 = indices[0]
    typedef = types.get(elem_type)
    elem_size = size_of(elem_type, types)
    field: Optional[FieldDef] = None
    if typedef is not None and typedef.is_record:
        if not isinstance(idx0, Const):
            raise ValueError(f"record element {elem_type} requires literal indices")
        if len(indices) >= 2:
            field_idx = indices[1]
            if not isinstance(field_idx, Const):
                raise ValueError("field index must be a literal")
            if not 0 <= field_idx.value < len(typedef.fields):
                raise ValueError(f"{elem_type} has no field {field_idx.value}")
            field = typedef.fields[field_idx.value]
        if len(indices) == 3:
            if field is None or not field.is_array:
                raise ValueError("only a flexible tail field takes an element index")
        elif len(indices) > 3:
            raise ValueError("too many ptradd indices")
    elif len(indices) > 1:
        raise ValueError(f"{elem_type} has no fields")

    if field is None:
        result_type = pointer_to(elem_type)
    else:
        result_type = pointer_to(field.elem_type)

    literal = all(isinstance(i, Const) for i in indices)
    if not literal:
        return result_type, None
    offset = indices[0].value * elem_size  # type: ignore[union-attr]
    if field is not None:
        offset += field.offset
        if len(indices) == 3:
            offset += indices[2].value * size_of(field.elem_type, types)  # type: ignore[union-attr]
    return result_type, offset if offset >= 0 else None


def _column(raw: str, token: str) -> int:
    pos = raw.find(token) if token else -1
    return pos + 1 if pos >= 0 else 1


def _split_args(text: str) -> List[str]:
    text = text.strip()
    if not text:
        return []
    return [part.strip() for part in text.split(",")]


class _Parser:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.types: Dict[str, TypeDef] = {}
        self.type_lines: Dict[str, int] = {}
        self.pending_fields: Dict[str, List[Tuple[FieldDef, int, str]]] = {}
        self.globals: Dict[str, GlobalDef] = {}
        self.global_lines: Dict[str, int] = {}
        self.raw_functions: List[_RawFunction] = []
        self.entry = "main"
        self.instrumented: Optional[frozenset] = None

    # ─── Top level ────────────────────────────────────────────────────────

    def parse(self) -> Program:
        current: Optional[_RawFunction] = None
        for lineno, raw in enumerate(self.lines, start=1):
            line = _COMMENT_RE.sub("", raw).strip()
            if not line:
                continue
            if current is not None:
                if line == "}":
                    self.raw_functions.append(current)
                    current = None
                else:
                    current.body.append((lineno, raw))
                continue
            if line.startswith("instrumented"):
                self._parse_marker(line, lineno, raw)
            elif line.startswith("entry "):
                self.entry = self._parse_entry(line, lineno, raw)
            elif line.startswith("type "):
                self._parse_type(line, lineno, raw)
            elif line.startswith("global "):
                self._parse_global(line, lineno, raw)
            elif line.startswith("func "):
                current = self._parse_header(line, lineno, raw)
            else:
                raise IRSyntaxError(f"unexpected text '{line}'", lineno)
        if current is not None:
            raise IRSyntaxError(f"function @{current.name} is not closed", current.line)

        self._finish_types()
        self._check_globals()
        names = set()
        functions = []
        for raw_fn in self.raw_functions:
            if raw_fn.name in names:
                raise IRSyntaxError(f"duplicate function @{raw_fn.name}", raw_fn.line)
            names.add(raw_fn.name)
            functions.append(self._parse_function(raw_fn))

        user_types = tuple(self.types[name] for name in self.type_lines)
        return Program(
            types=user_types,
            globals=tuple(self.globals.values()),
            functions=tuple(functions),
            entry=self.entry,
            instrumented=self.instrumented,
        )

    def _parse_marker(self, line: str, lineno: int, raw: str) -> None:
        kinds = line.split()[1:]
        for kind in kinds:
            if kind not in INSTRUMENT_KINDS:
                raise IRSyntaxError(
                    f"unknown instrumentation kind '{kind}'", lineno, _column(raw, kind)
                )
        self.instrumented = frozenset(kinds)

    def _parse_entry(self, line: str, lineno: int, raw: str) -> str:
        parts = line.split()
        if len(parts) != 2 or not parts[1].startswith("@"):
            raise IRSyntaxError("expected 'entry @name'", lineno)
        return parts[1][1:]

    def _parse_type(self, line: str, lineno: int, raw: str) -> None:
        match = _TYPE_DECL_RE.match(line)
        if not match:
            raise IRSyntaxError("malformed type declaration", lineno)
        name, flexible, body = match.group(1), bool(match.group(2)), match.group(3)
        if name in self.types or name in SCALAR_TYPES:
            raise IRSyntaxError(f"duplicate type {name}", lineno, _column(raw, name))

        fields: List[Tuple[FieldDef, int, str]] = []
        byte_size: Optional[int] = None
        alignment: Optional[int] = None
        for item in (part.strip() for part in body.split(";")):
            if not item:
                continue
            words = item.split()
            if words[0] in ("size", "align") and len(words) == 2:
                try:
                    number = int(words[1], 0)
                except ValueError:
                    raise IRSyntaxError(
                        f"bad {words[0]} '{words[1]}'", lineno, _column(raw, item)
                    ) from None
                if words[0] == "size":
                    byte_size = number
                else:
                    alignment = number
                continue
            field_match = _FIELD_RE.match(item)
            if not field_match:
                raise IRSyntaxError(f"bad field '{item}'", lineno, _column(raw, item))
            elem, fname, array, offset = field_match.groups()
            if array and not flexible:
                raise IRSyntaxError(
                    f"array field '{fname}' requires a flexible type",
                    lineno,
                    _column(raw, item),
                )
            fields.append((FieldDef(fname, elem, int(offset), bool(array)), lineno, raw))
        if byte_size is None:
            raise IRSyntaxError(f"type {name} is missing 'size'", lineno)

        kind = TypeKind.FLEXIBLE if flexible else TypeKind.RECORD
        self.types[name] = TypeDef(
            name, kind, tuple(f for f, _, _ in fields), byte_size, alignment or 0
        )
        self.type_lines[name] = lineno
        self.pending_fields[name] = fields

    def _finish_types(self) -> None:
        registry = dict(SCALAR_TYPES)
        registry.update(self.types)
        for name, fields in self.pending_fields.items():
            for field, lineno, raw in fields:
                self._require_type(field.elem_type, lineno, raw)
            typedef = self.types[name]
            if typedef.alignment == 0:
                alignment = record_alignment(typedef.fields, registry)
                self.types[name] = TypeDef(
                    name, typedef.kind, typedef.fields, typedef.byte_size, alignment
                )

    def _parse_global(self, line: str, lineno: int, raw: str) -> None:
        match = _GLOBAL_RE.match(line)
        if not match:
            raise IRSyntaxError("malformed global declaration", lineno)
        name, elem, count, init = match.groups()
        if name in self.globals:
            raise IRSyntaxError(f"duplicate global @{name}", lineno, _column(raw, name))
        self.globals[name] = GlobalDef(
            name, elem, int(count) if count else 1, bytes.fromhex(init or "")
        )
        self.global_lines[name] = lineno

    def _check_globals(self) -> None:
        registry = dict(SCALAR_TYPES)
        registry.update(self.types)
        for gdef in self.globals.values():
            lineno = self.global_lines[gdef.name]
            self._require_type(gdef.elem_type, lineno, "")
            size = size_of(gdef.elem_type, registry) * gdef.count
            if len(gdef.init) > size:
                raise IRSyntaxError(
                    f"initializer of @{gdef.name} exceeds its {size} bytes", lineno
                )

    def _require_type(self, type_str: str, lineno: int, raw: str) -> None:
        if not _TYPE_RE.match(type_str):
            raise IRSyntaxError(f"bad type '{type_str}'", lineno, _column(raw, type_str))
        name = base_name(type_str)
        if name not in SCALAR_TYPES and name not in self.types:
            raise IRSyntaxError(
                f"unknown type '{name}'", lineno, _column(raw, type_str)
            )

    def _parse_header(self, line: str, lineno: int, raw: str) -> _RawFunction:
        match = _FUNC_RE.match(line)
        if not match:
            raise IRSyntaxError("malformed function header", lineno)
        name, params_text, ret_type = match.groups()
        params = []
        seen = set()
        for item in _split_args(params_text):
            parts = item.split()
            if len(parts) != 2 or not parts[1].startswith("%"):
                raise IRSyntaxError(f"bad parameter '{item}'", lineno, _column(raw, item))
            pname = parts[1][1:]
            if pname in seen:
                raise IRSyntaxError(
                    f"duplicate parameter %{pname}", lineno, _column(raw, item)
                )
            seen.add(pname)
            params.append(Param(pname, parts[0]))
        return _RawFunction(name, tuple(params), ret_type or "void", lineno, [])

    # ─── Function bodies ──────────────────────────────────────────────────

    def _parse_function(self, raw_fn: _RawFunction) -> Function:
        registry = dict(SCALAR_TYPES)
        registry.update(self.types)
        for param in raw_fn.params:
            self._require_type(param.type, raw_fn.line, "")
        if raw_fn.ret_type != "void":
            self._require_type(raw_fn.ret_type, raw_fn.line, "")

        blocks: List[Block] = []
        label: Optional[str] = None
        current: List[Instruction] = []
        located: List[Tuple[Instruction, int, str]] = []
        next_uid = 0

        for lineno, raw in raw_fn.body:
            line = _COMMENT_RE.sub("", raw).strip()
            label_match = _LABEL_RE.match(line)
            if label_match:
                if label is not None:
                    blocks.append(Block(label, tuple(current)))
                label = label_match.group(1)
                if label in {b.label for b in blocks}:
                    raise IRSyntaxError(f"duplicate label '{label}'", lineno)
                current = []
                continue
            if label is None and not current and not blocks:
                label = "entry"
            inst = self._parse_instruction(line, lineno, raw, registry)
            if inst.result is None and not inst.is_instrumentation:
                inst = replace(inst, uid=next_uid)
                next_uid += 1
            current.append(inst)
            located.append((inst, lineno, raw))
        if label is None:
            raise IRSyntaxError(f"function @{raw_fn.name} has no body", raw_fn.line)
        blocks.append(Block(label, tuple(current)))

        self._check_references(raw_fn, located, registry)
        return Function(raw_fn.name, raw_fn.params, raw_fn.ret_type, tuple(blocks))

    def _check_references(
        self,
        raw_fn: _RawFunction,
        located: List[Tuple[Instruction, int, str]],
        registry: Mapping[str, TypeDef],
    ) -> None:
        value_types: Dict[str, str] = {p.name: p.type for p in raw_fn.params}
        for inst, lineno, raw in located:
            if inst.result is None:
                continue
            if inst.result in value_types:
                raise IRSyntaxError(
                    f"duplicate definition of %{inst.result}",
                    lineno,
                    _column(raw, f"%{inst.result}"),
                )
            value_types[inst.result] = inst.rtype or ""

        for inst, lineno, raw in located:
            for operand in inst.args:
                if isinstance(operand, Value) and operand.name not in value_types:
                    raise IRSyntaxError(
                        f"unknown value %{operand.name}",
                        lineno,
                        _column(raw, f"%{operand.name}"),
                    )
                if isinstance(operand, GlobalRef) and operand.name not in self.globals:
                    raise IRSyntaxError(
                        f"unknown global @{operand.name}",
                        lineno,
                        _column(raw, f"@{operand.name}"),
                    )
            if inst.opcode == "cast":
                source = inst.args[0]
                source_type = (
                    value_types.get(source.name)
                    if isinstance(source, Value)
                    else self.globals[source.name].type
                    if isinstance(source, GlobalRef)
                    else None
                )
                if not is_pointer(source_type):
                    raise IRSyntaxError(
                        "int-to-pointer cast forbidden", lineno, _column(raw, str(source))
                    )

    def _parse_instruction(
        self, line: str, lineno: int, raw: str, registry: Mapping[str, TypeDef]
    ) -> Instruction:
        meta: List[Tuple[str, str]] = []
        while True:
            match = _META_RE.search(line)
            if not match:
                break
            meta.insert(0, (match.group(1), match.group(2)))
            line = line[: match.start()]

        result: Optional[str] = None
        assign = _ASSIGN_RE.match(line)
        if assign:
            result, line = assign.group(1), assign.group(2)
        parts = line.split(None, 1)
        opcode = parts[0]
        rest = parts[1] if len(parts) > 1 else ""

        def err(message: str, token: str = "") -> IRSyntaxError:
            return IRSyntaxError(message, lineno, _column(raw, token))

        def op(token: str) -> Operand:
            return parse_operand(token, lineno, raw)

        def typ(token: str) -> str:
            self._require_type(token, lineno, raw)
            return token

        def literal(token: str) -> int:
            value = op(token)
            if not isinstance(value, Const):
                raise err(f"expected a literal, got '{token}'", token)
            return value.value

        def nargs(count: int) -> List[str]:
            items = _split_args(rest)
            if len(items) != count:
                raise err(f"{opcode} expects {count} operand(s), got {len(items)}")
            return items

        fields: Dict[str, object] = {"opcode": opcode, "result": result, "meta": tuple(meta)}

        if opcode == "const":
            words = rest.split()
            if len(words) != 2 or not is_integer(words[0]):
                raise err("expected 'const <int type> <literal>'")
            fields.update(rtype=words[0], args=(Const(literal(words[1])),))
        elif opcode in ("binop", "cmp"):
            words = rest.split(None, 2)
            if len(words) != 3:
                raise err(f"expected '{opcode} <op> <type> a, b'")
            allowed = BINOPS if opcode == "binop" else CMP_PREDICATES
            if words[0] not in allowed:
                raise err(f"unknown {opcode} operator '{words[0]}'", words[0])
            operands = _split_args(words[2])
            if len(operands) != 2:
                raise err(f"{opcode} expects 2 operands")
            fields.update(
                pred=words[0],
                elem_type=typ(words[1]),
                rtype=words[1] if opcode == "binop" else "i64",
                args=tuple(op(o) for o in operands),
            )
        elif opcode == "alloc":
            fields.update(rtype="i8*", args=(op(nargs(1)[0]),))
        elif opcode in ("calloc", "realloc"):
            fields.update(rtype="i8*", args=tuple(op(o) for o in nargs(2)))
        elif opcode == "free":
            fields.update(args=(op(nargs(1)[0]),))
        elif opcode == "slot":
            items = _split_args(rest)
            if len(items) not in (1, 2):
                raise err("expected 'slot <type>[, count]'")
            count = literal(items[1]) if len(items) == 2 else 1
            elem = typ(items[0])
            fields.update(elem_type=elem, rtype=pointer_to(elem), args=(Const(count),))
        elif opcode == "ptradd":
            items = _split_args(rest)
            if len(items) < 3:
                raise err("expected 'ptradd <type>, base, index[, field[, index]]'")
            elem = typ(items[0])
            base = op(items[1])
            indices = tuple(op(i) for i in items[2:])
            try:
                rtype, offset = ptradd_layout(elem, indices, registry)
            except ValueError as e:
                raise err(str(e), items[0]) from None
            fields.update(
                elem_type=elem,
                rtype=rtype,
                args=(base,) + indices,
                static_offset=offset,
            )
        elif opcode == "cast":
            match = _CAST_RE.match(rest)
            if not match:
                raise err("expected 'cast <value> to <type>'")
            dest = typ(match.group(2))
            if not is_pointer(dest):
                raise err("cast destination must be a pointer type", dest)
            fields.update(rtype=dest, elem_type=dest, args=(op(match.group(1)),))
        elif opcode == "load":
            items = nargs(2)
            elem = typ(items[0])
            fields.update(rtype=elem, elem_type=elem, args=(op(items[1]),))
        elif opcode == "store":
            match = _STORE_RE.match(rest)
            if not match:
                raise err("expected 'store <type> <value>, <pointer>'")
            fields.update(
                elem_type=typ(match.group(1)),
                args=(op(match.group(2)), op(match.group(3))),
            )
        elif opcode == "phi":
            words = rest.split(None, 1)
            if len(words) != 2:
                raise err("expected 'phi <type> [value, label], ...'")
            arms = _PHI_ARM_RE.findall(words[1])
            if not arms:
                raise err("phi needs at least one incoming value")
            fields.update(
                rtype=typ(words[0]),
                elem_type=words[0],
                args=tuple(op(v) for v, _ in arms),
                labels=tuple(lbl for _, lbl in arms),
            )
        elif opcode == "call":
            match = _CALL_RE.match(rest)
            if not match:
                raise err("expected 'call <type> @name(args)'")
            rtype = match.group(1)
            if rtype != "void":
                typ(rtype)
            if (rtype == "void") != (result is None):
                raise err("call result must match its declared type")
            fields.update(
                rtype=None if rtype == "void" else rtype,
                callee=match.group(2),
                args=tuple(op(a) for a in _split_args(match.group(3))),
            )
        elif opcode == "br":
            fields.update(labels=(rest.strip(),))
        elif opcode == "condbr":
            items = nargs(3)
            fields.update(args=(op(items[0]),), labels=(items[1], items[2]))
        elif opcode == "ret":
            fields.update(args=(op(rest),) if rest.strip() else ())
        elif opcode == "checkrange":
            src, dst, size = nargs(3)
            fields.update(args=(op(src), op(dst), Const(literal(size))))
        elif opcode == "castcheck":
            ptr, size = nargs(2)
            fields.update(args=(op(ptr), Const(literal(size))))
        elif opcode == "escape":
            fields.update(args=tuple(op(a) for a in nargs(2)))
        elif opcode == "getrange":
            fields.update(rtype="range", args=(op(nargs(1)[0]),))
        elif opcode == "staticrange":
            ptr, size = nargs(2)
            fields.update(rtype="range", args=(op(ptr), Const(literal(size))))
        elif opcode == "assertrange":
            rng, dst, size = nargs(3)
            fields.update(args=(op(rng), op(dst), Const(literal(size))))
        else:
            raise err(f"unknown opcode '{opcode}'", opcode)

        if opcode in VALUE_OPCODES and result is None:
            raise err(f"{opcode} must define a value", opcode)
        if opcode in EFFECT_OPCODES and result is not None:
            raise err(f"{opcode} does not produce a value", opcode)
        return Instruction(**fields)  # type: ignore[arg-type]
