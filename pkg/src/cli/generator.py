"""Seeded random program generator for differential campaigns.

Programs are emitted as IR text and parsed back, so every generated program
goes through the same reader and validator as hand-written ones. Buffers are
kept in stack slots and reloaded per segment, which gives the escape tracker
real work; injected bugs record the verdict and site an instrumented run must
report first.
"""

import random
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Tuple

from core.logger import logger
from ir.model import Program
from ir.validate import load_program
from runtime.allocator import object_size_for

BUG_KINDS = ("oob", "uaf", "double-free", "invalid-free", "cast", "stale-call")
SEGMENT_KINDS = ("access", "loop", "record", "call", "advance", "branch", "global")

DEFAULT_WEIGHTS: Dict[str, float] = {
    "access": 3.0,
    "loop": 2.0,
    "record": 1.5,
    "call": 1.0,
    "advance": 1.0,
    "branch": 1.0,
    "global": 0.5,
}

NODE_SIZE = 24
TABLE_LEN = 4

_PRELUDE = f"""type Node {{ i64 key @0; i64 val @8; i8* link @16; size {NODE_SIZE} }}

global @tbl : i64 x {TABLE_LEN}

func @touch(i8* %p, i64 %i) -> i8 {{
entry:
  %a = ptradd i8, %p, %i
  store i8 7, %a
  %z = ptradd i8, %p, 0
  %v = load i8, %z
  ret %v
}}

func @poke(Node* %n, i64 %k) -> i64 {{
entry:
  %f = ptradd Node, %n, 0, 1
  store i64 %k, %f
  %v = load i64, %f
  ret %v
}}
"""


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    bug_rate: float = 0.0
    bug_kinds: Tuple[str, ...] = BUG_KINDS
    max_buffers: int = 3
    max_segments: int = 8
    alloc_min: int = 8
    alloc_max: int = 96
    loop_bound: int = 24
    weights: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))

    def __post_init__(self):
        if not 0.0 <= self.bug_rate <= 1.0:
            raise ValueError(f"bug_rate must be within [0, 1], got {self.bug_rate}")
        unknown = set(self.bug_kinds) - set(BUG_KINDS)
        if unknown:
            raise ValueError(f"Unknown bug kind(s): {', '.join(sorted(unknown))}")
        if self.bug_rate > 0 and not self.bug_kinds:
            raise ValueError("bug_rate > 0 needs at least one bug kind")
        for kind, weight in self.weights.items():
            if kind not in SEGMENT_KINDS:
                raise ValueError(f"Unknown segment kind '{kind}'")
            if weight < 0:
                raise ValueError(f"Weight of '{kind}' is negative")
        if not any(w > 0 for w in self.weights.values()):
            raise ValueError("At least one segment weight must be positive")
        if self.max_buffers < 1 or self.max_segments < 0 or self.loop_bound < 1:
            raise ValueError("max_buffers and loop_bound must be >= 1")
        if not 2 <= self.alloc_min <= self.alloc_max:
            raise ValueError("Allocation sizes need 2 <= alloc_min <= alloc_max")


@dataclass(frozen=True)
class GroundTruth:
    """Verdict and first site an instrumented run of the program must report."""

    verdict: str = "ok"
    site: Optional[str] = None
    bug: Optional[str] = None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class GeneratedProgram:
    seed: int
    program: Program
    text: str
    truth: GroundTruth


@dataclass
class _Buffer:
    index: int
    size: int
    cursor: int = 0  # bytes the slot copy has been advanced past the start
    live: bool = True

    @property
    def reg(self) -> str:
        return f"%b{self.index}"

    @property
    def slot(self) -> str:
        return f"%s{self.index}"

    @property
    def room(self) -> int:
        return self.size - self.cursor


class _Builder:
    """Emits the body of @main, numbering effect instructions as the parser does."""

    def __init__(self, cfg: GenConfig):
        self.cfg = cfg
        self.rng = random.Random(cfg.seed)
        self.lines: List[str] = ["entry:"]
        self.label = "entry"
        self.uid = 0
        self.counter = 0
        self.buffers: List[_Buffer] = []
        self.records: List[str] = []
        self.truth = GroundTruth()

    # ─── Emission ───

    def fresh(self, stem: str) -> str:
        self.counter += 1
        return f"{stem}{self.counter}"

    def value(self, text: str, stem: str) -> str:
        name = f"%{self.fresh(stem)}"
        self.lines.append(f"  {name} = {text}")
        return name

    def effect(self, text: str) -> str:
        """Emit a non-value instruction and return its site id."""
        self.lines.append(f"  {text}")
        site = f"main:#{self.uid}"
        self.uid += 1
        return site

    def block(self, label: str) -> None:
        self.lines.append(f"{label}:")
        self.label = label

    def byte(self) -> int:
        return self.rng.randint(1, 120)

    def live(self) -> List[_Buffer]:
        return [b for b in self.buffers if b.live]

    # ─── Program shape ───

    def build(self) -> str:
        cfg = self.cfg
        for index in range(self.rng.randint(1, cfg.max_buffers)):
            self.allocate(index)

        segments = self.rng.randint(1, max(cfg.max_segments, 1))
        inject_at = -1
        if cfg.bug_kinds and self.rng.random() < cfg.bug_rate:
            inject_at = self.rng.randrange(segments + 1)

        kinds = [k for k in SEGMENT_KINDS if cfg.weights.get(k, 0) > 0]
        weights = [cfg.weights[k] for k in kinds]
        for position in range(segments + 1):
            if position == inject_at:
                self.inject(self.rng.choice(cfg.bug_kinds))
            if position < segments:
                kind = self.rng.choices(kinds, weights=weights)[0]
                self.segment(kind)

        for record in self.records:
            self.effect(f"free {record}")
        for buf in self.live():
            self.effect(f"free {buf.reg}")
        self.effect("ret 0")
        body = "\n".join(self.lines)
        return f"{_PRELUDE}\nfunc @main() -> i64 {{\n{body}\n}}\n"

    def allocate(self, index: int) -> None:
        size = self.rng.randint(self.cfg.alloc_min, self.cfg.alloc_max)
        buf = _Buffer(index, size)
        flavor = self.rng.choice(("alloc", "dynamic", "calloc"))
        if flavor == "dynamic":
            self.lines.append(f"  %n{index} = const i64 {size}")
            self.lines.append(f"  {buf.reg} = alloc %n{index}")
        elif flavor == "calloc" and size % 8 == 0:
            self.lines.append(f"  {buf.reg} = calloc {size // 8}, 8")
        else:
            self.lines.append(f"  {buf.reg} = alloc {size}")
        self.lines.append(f"  {buf.slot} = slot i8*")
        self.effect(f"store i8* {buf.reg}, {buf.slot}")
        self.buffers.append(buf)

    def segment(self, kind: str) -> None:
        buffers = self.live()
        if kind == "global" or not buffers:
            self.global_table()
            return
        buf = self.rng.choice(buffers)
        getattr(self, f"seg_{kind}")(buf)

    # ─── Segments (all in bounds) ───

    def seg_access(self, buf: _Buffer) -> None:
        base = self.value(f"load i8*, {buf.slot}", "c")
        if buf.room >= 8 and self.rng.random() < 0.3:
            index = self.rng.randrange(buf.room // 8)
            ptr = self.value(f"ptradd i64, {base}, {index}", "w")
            self.effect(f"store i64 {self.rng.randint(0, 10_000)}, {ptr}")
            loaded = self.value(f"load i64, {ptr}", "v")
            self.effect(f"call void @print_i64({loaded})")
            return
        ptr = self.value(f"ptradd i8, {base}, {self.rng.randrange(buf.room)}", "p")
        self.effect(f"store i8 {self.byte()}, {ptr}")
        if buf.room > 1 and self.rng.random() < 0.5:
            other = self.value(f"ptradd i8, {base}, {self.rng.randrange(buf.room)}", "p")
            loaded = self.value(f"load i8, {other}", "v")
            self.effect(f"call void @print_i64({loaded})")

    def loop(self, buf: _Buffer, bound: int, wide: bool = False) -> str:
        """Counted loop writing ``buf[i]`` for i < bound; returns the ptradd name."""
        head, body, done = (self.fresh(s) for s in ("head", "body", "exit"))
        counter = f"%{self.fresh('i')}"
        step = f"%{self.fresh('i')}"
        entry_label = self.label
        self.effect(f"br {head}")
        self.block(head)
        self.lines.append(f"  {counter} = phi i64 [0, {entry_label}], [{step}, {body}]")
        more = self.value(f"cmp lt i64 {counter}, {bound}", "m")
        self.effect(f"condbr {more}, {body}, {done}")
        self.block(body)
        elem = "i64" if wide else "i8"
        ptr = self.value(f"ptradd {elem}, {buf.reg}, {counter}", "q")
        self.effect(f"store {elem} {self.byte()}, {ptr}")
        self.lines.append(f"  {step} = binop add i64 {counter}, 1")
        self.effect(f"br {head}")
        self.block(done)
        return ptr

    def seg_loop(self, buf: _Buffer) -> None:
        wide = buf.size >= 8 and self.rng.random() < 0.3
        limit = buf.size // 8 if wide else buf.size
        self.loop(buf, self.rng.randint(1, min(limit, self.cfg.loop_bound)), wide)
        if self.rng.random() < 0.5:
            first = self.value(f"ptradd i8, {buf.reg}, 0", "p")
            loaded = self.value(f"load i8, {first}", "v")
            self.effect(f"call void @print_i64({loaded})")

    def seg_record(self, buf: _Buffer) -> None:
        raw = self.value(f"alloc {NODE_SIZE}", "r")
        self.records.append(raw)
        node = self.value(f"cast {raw} to Node*", "o")
        key = self.value(f"ptradd Node, {node}, 0, 0", "f")
        self.effect(f"store i64 {self.rng.randint(0, 10_000)}, {key}")
        link = self.value(f"ptradd Node, {node}, 0, 2", "f")
        self.effect(f"store i8* {buf.reg}, {link}")
        target = self.value(f"load i8*, {link}", "g")
        ptr = self.value(f"ptradd i8, {target}, {self.rng.randrange(buf.size)}", "p")
        self.effect(f"store i8 {self.byte()}, {ptr}")
        loaded = self.value(f"load i64, {key}", "v")
        self.effect(f"call void @print_i64({loaded})")

    def record(self) -> Tuple[str, str]:
        """A fresh Node: the allocation and its Node* view."""
        raw = self.value(f"alloc {NODE_SIZE}", "r")
        return raw, self.value(f"cast {raw} to Node*", "o")

    def seg_call(self, buf: _Buffer) -> None:
        if self.rng.random() < 0.3:
            raw, node = self.record()
            self.records.append(raw)
            result = self.value(f"call i64 @poke({node}, {self.rng.randint(0, 10_000)})", "t")
            self.effect(f"call void @print_i64({result})")
            return
        result = self.value(
            f"call i8 @touch({buf.reg}, {self.rng.randrange(buf.size)})", "t"
        )
        self.effect(f"call void @print_i64({result})")

    def seg_advance(self, buf: _Buffer) -> None:
        if buf.room < 2:
            self.seg_access(buf)
            return
        base = self.value(f"load i8*, {buf.slot}", "c")
        moved = self.value(f"ptradd i8, {base}, 1", "d")
        self.effect(f"store i8 {self.byte()}, {moved}")
        self.effect(f"store i8* {moved}, {buf.slot}")
        buf.cursor += 1

    def seg_branch(self, buf: _Buffer) -> None:
        lhs = self.value(f"const i64 {self.rng.randint(0, 9)}", "k")
        cond = self.value(f"cmp lt i64 {lhs}, {self.rng.randint(0, 9)}", "k")
        then, other, join = (self.fresh(s) for s in ("then", "else", "join"))
        self.effect(f"condbr {cond}, {then}, {other}")
        for label in (then, other):
            self.block(label)
            ptr = self.value(f"ptradd i8, {buf.reg}, {self.rng.randrange(buf.size)}", "p")
            self.effect(f"store i8 {self.byte()}, {ptr}")
            self.effect(f"br {join}")
        self.block(join)
        ptr = self.value(f"ptradd i8, {buf.reg}, {self.rng.randrange(buf.size)}", "p")
        loaded = self.value(f"load i8, {ptr}", "v")
        self.effect(f"call void @print_i64({loaded})")

    def global_table(self) -> None:
        ptr = self.value(f"ptradd i64, @tbl, {self.rng.randrange(TABLE_LEN)}", "e")
        self.effect(f"store i64 {self.rng.randint(0, 10_000)}, {ptr}")
        loaded = self.value(f"load i64, {ptr}", "v")
        self.effect(f"call void @print_i64({loaded})")

    # ─── Bug injection ───

    def inject(self, kind: str) -> None:
        buffers = self.live()
        if kind not in ("cast", "stale-call") and not buffers:
            kind = "cast"
        buf = self.rng.choice(buffers) if buffers else None

        if kind == "cast":
            raw = self.value(f"alloc {self.rng.randint(1, 15)}", "r")
            node = self.value(f"cast {raw} to Node*", "o")
            self.truth = GroundTruth("oob", f"main:{node}", kind)
            self.records.append(raw)
            return
        if kind == "stale-call":
            self.stale_call(buf)
            return
        assert buf is not None
        if kind == "oob":
            past = object_size_for(buf.size)
            if self.rng.random() < 0.5:
                offset = past + self.rng.randrange(8)
                ptr = self.value(f"ptradd i8, {buf.reg}, {offset}", "x")
                self.effect(f"store i8 {self.byte()}, {ptr}")
            else:
                ptr = self.loop(buf, past + self.rng.randint(1, 4))
            self.truth = GroundTruth("oob", f"main:{ptr}", kind)
        elif kind == "uaf":
            self.effect(f"free {buf.reg}")
            stale = self.value(f"load i8*, {buf.slot}", "c")
            ptr = self.value(f"ptradd i8, {stale}, 0", "x")
            site = self.effect(f"store i8 {self.byte()}, {ptr}")
            buf.live = False
            self.truth = GroundTruth("uaf", site, kind)
        elif kind == "double-free":
            self.effect(f"free {buf.reg}")
            site = self.effect(f"free {buf.reg}")
            buf.live = False
            self.truth = GroundTruth("double-free", site, kind)
        elif kind == "invalid-free":
            inner = self.value(
                f"ptradd i8, {buf.reg}, {self.rng.randint(1, buf.size - 1)}", "x"
            )
            site = self.effect(f"free {inner}")
            self.truth = GroundTruth("invalid-free", site, kind)

    def stale_call(self, buf: Optional[_Buffer]) -> None:
        """Free an object, then pass it to a callee that writes through it."""
        if buf is None or self.rng.random() < 0.5:
            raw, node = self.record()
            self.effect(f"free {raw}")
            self.value(f"call i64 @poke({node}, 1)", "t")
            self.truth = GroundTruth("uaf", "poke:%f", "stale-call")
            return
        self.effect(f"free {buf.reg}")
        self.value(f"call i8 @touch({buf.reg}, {self.rng.randrange(buf.size)})", "t")
        buf.live = False
        self.truth = GroundTruth("uaf", "touch:%a", "stale-call")


def generate(cfg: GenConfig) -> GeneratedProgram:
    """Generate, parse and validate one program; deterministic in ``cfg``."""
    builder = _Builder(cfg)
    text = builder.build()
    program = load_program(text)
    logger.debug(
        f"Generated seed {cfg.seed}: {len(text.splitlines())} lines, "
        f"truth {builder.truth.verdict} at {builder.truth.site}"
    )
    return GeneratedProgram(cfg.seed, program, text, builder.truth)


def gen_random_program(cfg: GenConfig) -> Program:
    return generate(cfg).program
