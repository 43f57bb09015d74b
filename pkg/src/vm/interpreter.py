"""Interpreter for plain and instrumented programs over the simulated heap."""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from core.config import config
from core.logger import logger
from instrument.sites import SITE_KEY, WINDOW_KEY, parse_window
from ir.model import (INTRINSICS, Const, Function, GlobalRef, Instruction,
                      Operand, Program)
from ir.typedefs import SCALAR_SIZES, align_of, is_pointer, pointee, size_of
from runtime.allocator import HeapRuntime, ObjectRange, static_range
from runtime.errors import (DoubleFreeError, HeapViolation, InvalidFreeError,
                            OutOfBoundsError, StaleObjectError,
                            UnmappedAccessError)
from runtime.memory import ADDRESS_MASK, GLOBAL_BASE, STACK_BASE, Region
from vm.report import ExecutionReport, Verdict, Violation

RUNTIME_CALL_OPCODES = frozenset({"checkrange", "castcheck", "getrange", "escape"})


def wrap(value: int, type_str: Optional[str]) -> int:
    """Reduce ``value`` to the width of ``type_str``: signed for integers, unsigned for pointers."""
    if type_str in SCALAR_SIZES:
        bits = 8 * SCALAR_SIZES[type_str]
        value &= (1 << bits) - 1
        if value >= 1 << (bits - 1):
            value -= 1 << bits
        return value
    return value & ADDRESS_MASK


def _sdiv(a: int, b: int) -> int:
    if b == 0:
        return 0
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def _binop(op: str, a: int, b: int) -> int:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "sdiv":
        return _sdiv(a, b)
    if op == "srem":
        return 0 if b == 0 else a - b * _sdiv(a, b)
    if op == "and":
        return a & b
    if op == "or":
        return a | b
    if op == "xor":
        return a ^ b
    if op == "shl":
        return a << (b & 63)
    if op == "shr":
        return a >> (b & 63)
    raise ValueError(f"unknown binop {op}")


def _compare(pred: str, a: int, b: int) -> bool:
    return {
        "eq": a == b,
        "ne": a != b,
        "lt": a < b,
        "le": a <= b,
        "gt": a > b,
        "ge": a >= b,
    }[pred]


_VERDICT_BY_ERROR = {
    OutOfBoundsError: Verdict.OOB,
    StaleObjectError: Verdict.UAF,
    UnmappedAccessError: Verdict.UAF,
    DoubleFreeError: Verdict.DOUBLE_FREE,
    InvalidFreeError: Verdict.INVALID_FREE,
}


class _Halt(Exception):
    pass


@dataclass
class Frame:
    fn: Function
    values: Dict[str, Any] = field(default_factory=dict)
    label: str = ""
    index: int = 0
    prev_label: Optional[str] = None
    result: Optional[str] = None  # caller value receiving the return value
    slots: Dict[str, int] = field(default_factory=dict)


class VM:
    def __init__(
        self,
        program: Program,
        step_limit: Optional[int] = None,
        keep_going: Optional[bool] = None,
        cache_cap: Optional[int] = None,
        heap_limit: Optional[int] = None,
        call_depth_limit: Optional[int] = None,
    ):
        self.program = program
        self.step_limit = step_limit if step_limit is not None else config.get("vm.step_limit")
        self.keep_going = keep_going if keep_going is not None else config.get("vm.keep_going")
        self.call_depth_limit = (
            call_depth_limit if call_depth_limit is not None else config.get("vm.call_depth_limit")
        )
        self.runtime = HeapRuntime(
            cache_cap=cache_cap if cache_cap is not None else config.get("runtime.cache_cap"),
            heap_limit=heap_limit if heap_limit is not None else config.get("runtime.heap_limit"),
        )
        self.memory = self.runtime.memory
        self.types = program.type_map
        self.report = ExecutionReport(stats=self.runtime.stats)
        self.frames: List[Frame] = []
        self._globals: Dict[str, int] = {}
        self._stack_top = STACK_BASE
        self._layout_globals()

    # ─── Memory layout ────────────────────────────────────────────────────

    def _layout_globals(self) -> None:
        address = GLOBAL_BASE
        for gdef in self.program.globals:
            align = max(align_of(gdef.elem_type, self.types), 1)
            address = -(-address // align) * align
            size = max(size_of(gdef.elem_type, self.types) * gdef.count, 1)
            self.memory.map_range(address, size, Region.GLOBAL)
            if gdef.init:
                self.memory.write(address, gdef.init[:size])
            self._globals[gdef.name] = address
            address += size

    def _carve_slot(self, inst: Instruction) -> int:
        elem = inst.elem_type or "i8"
        count = inst.args[0].value if isinstance(inst.args[0], Const) else 1
        align = max(align_of(elem, self.types), 1)
        address = -(-self._stack_top // align) * align
        size = max(size_of(elem, self.types) * count, 1)
        self.memory.map_range(address, size, Region.STACK)
        self._stack_top = address + size
        return address

    # ─── Helpers ──────────────────────────────────────────────────────────

    def _value(self, frame: Frame, operand: Operand) -> Any:
        if isinstance(operand, Const):
            return operand.value
        if isinstance(operand, GlobalRef):
            return self._globals[operand.name]
        return frame.values[operand.name]

    @staticmethod
    def _site(fn: Function, inst: Instruction) -> str:
        ref = inst.get_meta(SITE_KEY) if inst.is_instrumentation else None
        return f"{fn.name}:{ref or inst.ref}"

    def _violation(self, kind: Verdict, site: str, error: Exception) -> None:
        details = error.details() if isinstance(error, HeapViolation) else {}
        violation = Violation(kind, site, str(error), details)
        self.report.violations.append(violation)
        logger.debug(f"Violation {kind.value} at {site}: {error}")
        if not self.keep_going:
            raise _Halt()

    def _enter(self, frame: Frame, target: str) -> None:
        frame.prev_label = frame.label
        frame.label = target
        frame.index = 0
        block = frame.fn.block_map[target]
        phis = []
        for inst in block.instructions:
            if inst.opcode != "phi":
                break
            for arg, label in zip(inst.args, inst.labels):
                if label == frame.prev_label:
                    phis.append((inst, self._value(frame, arg)))
                    break
            else:
                phis.append((inst, 0))
        for inst, value in phis:
            frame.values[inst.result or ""] = value
        frame.index = len(phis)
        self.report.steps += len(phis)

    def _ptradd(self, frame: Frame, inst: Instruction) -> int:
        elem = inst.elem_type or "i8"
        base = self._value(frame, inst.args[0])
        indices = [self._value(frame, a) for a in inst.args[1:]]
        offset = indices[0] * size_of(elem, self.types)
        typedef = self.types.get(elem)
        if len(indices) >= 2 and typedef is not None:
            fdef = typedef.fields[indices[1]]
            offset += fdef.offset
            if len(indices) == 3:
                offset += indices[2] * size_of(fdef.elem_type, self.types)
        return (base + offset) & ADDRESS_MASK

    # ─── Main loop ────────────────────────────────────────────────────────

    def run(self) -> ExecutionReport:
        entry = self.program.function(self.program.entry)
        frame = Frame(entry, values={p.name: 0 for p in entry.params})
        self.frames.append(frame)
        self._enter(frame, entry.entry_label)
        frame.prev_label = None
        try:
            while self.frames:
                frame = self.frames[-1]
                inst = frame.fn.block_map[frame.label].instructions[frame.index]
                if not inst.is_instrumentation:
                    if self.report.steps >= self.step_limit:
                        self._stop(Verdict.LIMIT, f"step limit {self.step_limit} reached")
                        break
                    self.report.steps += 1
                try:
                    self._execute(frame, inst)
                except HeapViolation as error:
                    kind = _VERDICT_BY_ERROR.get(type(error), Verdict.UAF)
                    if inst.opcode == "assertrange" and kind is Verdict.OOB:
                        kind = Verdict.ASSERT_FAIL
                    self._violation(kind, self._site(frame.fn, inst), error)
                    if inst.result is not None:
                        frame.values[inst.result] = 0
                    frame.index += 1
        except _Halt:
            pass
        self.runtime.flush_escape_cache()
        if self.report.violations and self.report.verdict is Verdict.OK:
            self.report.verdict = self.report.violations[0].kind
        logger.info(
            f"Run finished: {self.report.verdict.value} after {self.report.steps} steps, "
            f"{self.report.runtime_calls} runtime calls"
        )
        return self.report

    def _stop(self, verdict: Verdict, message: str) -> None:
        self.report.violations.append(Violation(verdict, "", message))
        if not any(v.kind is not Verdict.LIMIT for v in self.report.violations):
            self.report.verdict = verdict

    def _execute(self, frame: Frame, inst: Instruction) -> None:
        op = inst.opcode
        if op in RUNTIME_CALL_OPCODES:
            self.report.runtime_calls += 1

        if op == "br":
            self._enter(frame, inst.labels[0])
            return
        if op == "condbr":
            taken = inst.labels[0] if self._value(frame, inst.args[0]) != 0 else inst.labels[1]
            self._enter(frame, taken)
            return
        if op == "ret":
            self._return(frame, inst)
            return
        if op == "call" and inst.callee not in INTRINSICS:
            self._call(frame, inst)
            return
        if op == "checkrange" and inst.get_meta(WINDOW_KEY):
            self._check_window(frame, inst)
            frame.index += 1
            return

        result = self._compute(frame, inst)
        if inst.result is not None:
            frame.values[inst.result] = result
        frame.index += 1

    def _compute(self, frame: Frame, inst: Instruction) -> Any:
        op = inst.opcode
        rt = self.runtime
        args = inst.args
        if op == "const":
            return wrap(args[0].value, inst.rtype)  # type: ignore[union-attr]
        if op == "binop":
            a, b = (self._value(frame, x) for x in args)
            return wrap(_binop(inst.pred or "", a, b), inst.rtype)
        if op == "cmp":
            a, b = (self._value(frame, x) for x in args)
            return int(_compare(inst.pred or "", a, b))
        if op == "alloc":
            size = self._value(frame, args[0])
            return rt.rt_alloc(size) if size >= 0 else 0
        if op == "calloc":
            count, size = (self._value(frame, x) for x in args)
            return rt.rt_calloc(count, size) if count >= 0 and size >= 0 else 0
        if op == "realloc":
            address, size = (self._value(frame, x) for x in args)
            return rt.rt_realloc(address, size) if size >= 0 else 0
        if op == "free":
            rt.rt_free(self._value(frame, args[0]))
            return None
        if op == "slot":
            name = inst.result or ""
            if name not in frame.slots:
                frame.slots[name] = self._carve_slot(inst)
            return frame.slots[name]
        if op == "ptradd":
            return self._ptradd(frame, inst)
        if op == "cast":
            return self._value(frame, args[0])
        if op == "load":
            elem = inst.elem_type or "i8"
            address = self._value(frame, args[0])
            size = size_of(elem, self.types)
            return self.memory.read_int(address, size, signed=not is_pointer(elem))
        if op == "store":
            elem = inst.elem_type or "i8"
            value = self._value(frame, args[0])
            self.memory.write_int(self._value(frame, args[1]), size_of(elem, self.types), value)
            return None
        if op == "call":
            self.report.output.append(self._value(frame, args[0]))
            return None
        if op == "checkrange":
            src, dst, size = (self._value(frame, x) for x in args)
            rt.rt_check_range(src, dst, size)
            return None
        if op == "castcheck":
            ptr, size = (self._value(frame, x) for x in args)
            rt.rt_check_range(ptr, ptr, size)
            return None
        if op == "escape":
            location, value = (self._value(frame, x) for x in args)
            rt.rt_escape(location, value)
            return None
        if op == "getrange":
            return rt.rt_get_range(self._value(frame, args[0]))
        if op == "staticrange":
            return static_range(self._value(frame, args[0]), args[1].value)  # type: ignore[union-attr]
        if op == "assertrange":
            rng, dst, size = (self._value(frame, x) for x in args)
            if not isinstance(rng, ObjectRange):
                raise StaleObjectError(dst)
            rt.assert_in_range(rng, rng.start, dst, size)
            return None
        if op == "phi":
            # phis are bound on block entry
            return frame.values.get(inst.result or "", 0)
        raise ValueError(f"cannot execute opcode '{op}'")

    def _check_window(self, frame: Frame, inst: Instruction) -> None:
        src = self._value(frame, inst.args[0])
        for entry in parse_window(inst.get_meta(WINDOW_KEY)):
            try:
                self.runtime.rt_check_range(src, frame.values[entry.dst], entry.size)
            except HeapViolation as error:
                kind = _VERDICT_BY_ERROR.get(type(error), Verdict.UAF)
                self._violation(kind, f"{frame.fn.name}:%{entry.dst}", error)

    def _call(self, frame: Frame, inst: Instruction) -> None:
        if len(self.frames) >= self.call_depth_limit:
            self._stop(Verdict.LIMIT, f"call depth limit {self.call_depth_limit} reached")
            raise _Halt()
        callee = self.program.function(inst.callee or "")
        values = {p.name: self._value(frame, a) for p, a in zip(callee.params, inst.args)}
        new = Frame(callee, values=values, label=callee.entry_label, result=inst.result)
        self.frames.append(new)
        self._enter(new, callee.entry_label)
        new.prev_label = None

    def _return(self, frame: Frame, inst: Instruction) -> None:
        value = self._value(frame, inst.args[0]) if inst.args else None
        self.frames.pop()
        if not self.frames:
            self.report.return_value = value
            return
        caller = self.frames[-1]
        if frame.result is not None:
            caller.values[frame.result] = value
        caller.index += 1


def run(
    program: Program,
    step_limit: Optional[int] = None,
    keep_going: Optional[bool] = None,
    cache_cap: Optional[int] = None,
    heap_limit: Optional[int] = None,
) -> ExecutionReport:
    """Execute ``program`` from its entry function and classify the outcome."""
    return VM(
        program,
        step_limit=step_limit,
        keep_going=keep_going,
        cache_cap=cache_cap,
        heap_limit=heap_limit,
    ).run()
