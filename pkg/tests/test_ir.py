"""Tests for the IR parser, validator, CFG and dominance queries."""

import os
import random
from glob import glob

import pytest

from core.resources import corpus_dir
from ir.analysis import HeapClass, Origin, is_heap_pointer, trace_base
from ir.cfg import build_cfg, intervening, reaching
from ir.dominators import compute_dominators, compute_postdominators
from ir.errors import IRSyntaxError, IRValidationError
from ir.model import Const, GlobalRef, Position, Value
from ir.parser import parse_program
from ir.printer import print_program
from ir.validate import load_program, validate_program

CORPUS_FILES = sorted(glob(os.path.join(corpus_dir(), "*", "*.ir")))

DIAMOND = """
func @main() -> i64 {
entry:
  %buf = alloc 16
  %c = const i64 1
  condbr %c, left, right
left:
  %l = ptradd i8, %buf, 1
  store i8 1, %l
  br join
right:
  %r = ptradd i8, %buf, 2
  store i8 2, %r
  br join
join:
  %v = load i8, %buf
  free %buf
  ret 0
}
"""

LOOP = """
func @main() -> i64 {
entry:
  %buf = alloc 32
  br head
head:
  %i = phi i64 [0, entry], [%n, body]
  %go = cmp lt i64 %i, 8
  condbr %go, body, done
body:
  %p = ptradd i8, %buf, %i
  store i8 7, %p
  %n = binop add i64 %i, 1
  br head
done:
  ret 0
}
"""

RECORDS = """
type Pair { i64 a @0; i32 b @8; size 16 }
type Blob flexible { i64 len @0; i8 data[] @8; size 8 }
global @tbl : i64 x 4 = "0100000000000000"

func @main() -> i64 {
  %p = alloc 16
  %pp = cast %p to Pair*
  %b = ptradd Pair, %pp, 0, 1
  store i32 5, %b
  %q = alloc 24
  %qq = cast %q to Blob*
  %d = ptradd Blob, %qq, 0, 1, 3
  %t = ptradd i64, @tbl, 2
  ret 0
}
"""


def _syntax_error(text):
    with pytest.raises(IRSyntaxError) as exc:
        parse_program(text)
    return exc.value


def _diagnostics(text):
    return [d.message for d in validate_program(parse_program(text))]


# ─── Parsing ──────────────────────────────────────────────────────────────────


def test_parse_blocks_and_entry_label():
    program = load_program(DIAMOND)
    fn = program.function("main")
    assert [b.label for b in fn.blocks] == ["entry", "left", "right", "join"]
    assert fn.ret_type == "i64"
    assert program.entry == "main"
    assert program.instrumented is None


def test_missing_first_label_means_entry():
    program = load_program(RECORDS)
    assert program.function("main").entry_label == "entry"


def test_uids_number_effect_instructions(load_fixture):
    fn = load_fixture("list1.ir").function("main")
    refs = [inst.ref for _, inst in fn.iter_instructions() if inst.result is None]
    assert refs == ["#0", "#1", "#2", "#3", "#4"]


def test_void_call_gets_uid(load_fixture):
    fn = load_fixture("list5.ir").function("main")
    call = next(inst for _, inst in fn.iter_instructions() if inst.callee == "foo")
    assert call.ref == "#0"


def test_comments_are_ignored():
    program = load_program(
        "# header\nfunc @main() -> i64 {  # trailing\nentry:\n  ret 0 # done\n}\n"
    )
    assert len(program.function("main").blocks[0].instructions) == 1


def test_record_layout_offsets():
    fn = load_program(RECORDS).function("main")
    defs = fn.definitions
    assert defs["b"].static_offset == 8
    assert defs["b"].rtype == "i32*"
    assert defs["d"].static_offset == 11
    assert defs["d"].rtype == "i8*"
    assert defs["t"].static_offset == 16


def test_global_initializer_bytes():
    program = load_program(RECORDS)
    tbl = program.global_map["tbl"]
    assert tbl.count == 4
    assert tbl.init == bytes([1, 0, 0, 0, 0, 0, 0, 0])
    assert tbl.type == "i64*"


def test_instrumented_marker_and_meta():
    program = load_program(
        "instrumented range\n"
        "func @main() -> i64 {\n"
        "entry:\n"
        "  %b = alloc 8\n"
        "  %p = ptradd i8, %b, 2\n"
        "  checkrange %b, %p, 1 !site=%p\n"
        "  ret 0\n"
        "}\n"
    )
    assert program.instrumented == frozenset({"range"})
    check = program.function("main").blocks[0].instructions[2]
    assert check.opcode == "checkrange"
    assert check.get_meta("site") == "%p"
    assert check.uid is None
    assert check.args == (Value("b"), Value("p"), Const(1))


def test_printed_program_parses_to_same_text(load_fixture):
    text = print_program(load_fixture("list4.ir"))
    assert print_program(load_program(text)) == text


@pytest.mark.parametrize("path", CORPUS_FILES, ids=os.path.basename)
def test_corpus_round_trips(path):
    with open(path, "r", encoding="utf-8") as f:
        program = parse_program(f.read())
    assert parse_program(print_program(program)) == program


# ─── Syntax errors ────────────────────────────────────────────────────────────


def test_unknown_value_reports_line_and_column():
    err = _syntax_error("func @main() -> i64 {\nentry:\n  ret %nope\n}\n")
    assert err.line == 3
    assert err.column == 7
    assert "%nope" in str(err)


def test_int_to_pointer_cast_rejected():
    err = _syntax_error(
        "func @main() -> i64 {\nentry:\n  %x = const i64 4\n  %p = cast %x to i8*\n  ret 0\n}\n"
    )
    assert "int-to-pointer" in err.message


def test_duplicate_definition_rejected():
    err = _syntax_error(
        "func @main() -> i64 {\nentry:\n  %x = const i64 1\n  %x = const i64 2\n  ret 0\n}\n"
    )
    assert "duplicate" in err.message


@pytest.mark.parametrize(
    "text",
    [
        "type T { i64 a @0 }\n",
        "type T { i8 tail[] @0; size 0 }\n",
        "func @main() -> i64 {\nentry:\n  %p = bogus 1\n  ret 0\n}\n",
        "func @main() -> i64 {\nentry:\n  ret 0\n",
        "func @main() -> Missing {\nentry:\n  ret 0\n}\n",
        "global @g : i8 x 1 = \"0102\"\n",
        "func @main() -> i64 {\nentry:\n  store i8 1\n  ret 0\n}\n",
    ],
)
def test_malformed_text_rejected(text):
    _syntax_error(text)


# ─── Validation ───────────────────────────────────────────────────────────────


def test_missing_terminator_diagnosed():
    messages = _diagnostics("func @main() -> i64 {\nentry:\n  %x = const i64 1\n}\n")
    assert any("terminator" in m for m in messages)


def test_use_not_dominated_diagnosed():
    messages = _diagnostics(
        "func @main() -> i64 {\n"
        "entry:\n"
        "  %c = const i64 0\n"
        "  condbr %c, a, b\n"
        "a:\n"
        "  %x = const i64 1\n"
        "  br b\n"
        "b:\n"
        "  ret %x\n"
        "}\n"
    )
    assert any("not dominated" in m for m in messages)


def test_store_type_mismatch_diagnosed():
    messages = _diagnostics(
        "func @main() -> i64 {\nentry:\n  %b = alloc 8\n  store i64 1, %b\n  ret 0\n}\n"
    )
    assert any("expected i64*" in m for m in messages)


def test_entry_with_parameters_diagnosed():
    messages = _diagnostics("func @main(i64 %n) -> i64 {\nentry:\n  ret %n\n}\n")
    assert any("no parameters" in m for m in messages)


def test_unknown_callee_diagnosed():
    messages = _diagnostics(
        "func @main() -> i64 {\nentry:\n  call void @nowhere()\n  ret 0\n}\n"
    )
    assert any("unknown function" in m for m in messages)


def test_load_program_raises_with_diagnostics():
    with pytest.raises(IRValidationError) as exc:
        load_program("func @main() -> i64 {\nentry:\n  br nowhere\n}\n")
    assert exc.value.diagnostics
    assert "nowhere" in str(exc.value.diagnostics[0])


def test_valid_programs_have_no_diagnostics():
    for text in (DIAMOND, LOOP, RECORDS):
        assert validate_program(parse_program(text)) == []


# ─── CFG ──────────────────────────────────────────────────────────────────────


def test_cfg_edges():
    cfg = build_cfg(load_program(DIAMOND).function("main"))
    assert cfg.successors["entry"] == ("left", "right")
    assert set(cfg.predecessors["join"]) == {"left", "right"}
    assert cfg.exits == ("join",)
    assert cfg.unreachable == ()


def test_unreachable_block_flagged():
    fn = load_program(
        "func @main() -> i64 {\nentry:\n  ret 0\ndead:\n  br dead\n}\n"
    ).function("main")
    assert build_cfg(fn).unreachable == ("dead",)


def test_reaching_follows_back_edges():
    cfg = build_cfg(load_program(LOOP).function("main"))
    assert reaching(cfg, "body") == {"entry", "head", "body"}


def test_intervening_within_block():
    fn = load_program(DIAMOND).function("main")
    between = intervening(fn, build_cfg(fn), Position("left", 0), Position("left", 2))
    assert between == [Position("left", 1)]


def test_intervening_across_branches():
    fn = load_program(DIAMOND).function("main")
    between = intervening(fn, build_cfg(fn), Position("entry", 0), Position("join", 1))
    labels = {p.label for p in between}
    assert labels == {"entry", "left", "right", "join"}
    assert Position("join", 0) in between
    assert Position("join", 1) not in between


def test_intervening_around_loop_stops_at_start():
    fn = load_program(LOOP).function("main")
    start = Position("body", 0)
    between = intervening(fn, build_cfg(fn), start, Position("body", 1))
    assert between == []
    around = intervening(fn, build_cfg(fn), Position("body", 1), Position("body", 0))
    assert Position("head", 0) in around
    assert Position("done", 0) not in around


# ─── Dominance ────────────────────────────────────────────────────────────────


def test_dominators_of_diamond():
    dom = compute_dominators(build_cfg(load_program(DIAMOND).function("main")))
    assert dom.dominates(Position("entry", 0), Position("join", 0))
    assert not dom.dominates(Position("left", 0), Position("join", 0))
    assert dom.dominates(Position("left", 0), Position("left", 1))
    assert not dom.dominates(Position("left", 1), Position("left", 0))
    assert dom.nearest_common(["left", "right"]) == "entry"


def test_postdominators_of_diamond():
    pdom = compute_postdominators(build_cfg(load_program(DIAMOND).function("main")))
    assert pdom.postdominates(Position("join", 0), Position("entry", 0))
    assert not pdom.postdominates(Position("left", 0), Position("entry", 0))
    assert pdom.postdominates(Position("left", 1), Position("left", 0))


def test_loop_header_dominates_body():
    dom = compute_dominators(build_cfg(load_program(LOOP).function("main")))
    assert dom.dominates_block("head", "body")
    assert dom.dominates_block("head", "done")
    assert not dom.dominates_block("body", "done")


def test_list4_join_postdominates_branch(load_fixture):
    fn = load_fixture("list4.ir").function("foo")
    cfg = build_cfg(fn)
    dom, pdom = compute_dominators(cfg), compute_postdominators(cfg)
    p256, p48, p1b = (fn.positions[name] for name in ("p256", "p48", "p1b"))
    assert pdom.dominates_block("join", "then")
    assert pdom.postdominates(p1b, p48)
    assert not pdom.postdominates(p48, p1b)
    assert dom.dominates(p256, p48)
    assert not dom.dominates(p48, p1b)
    assert pdom.idom["then"] == "join"


def _random_cfg(rng, count):
    """Function of ``count`` blocks with random br/condbr/ret terminators."""
    lines = ["func @main() -> i64 {"]
    for k in range(count):
        lines.append(f"b{k}:")
        roll = rng.random()
        if roll < 0.25:
            lines.append("  ret 0")
        elif roll < 0.5:
            lines.append(f"  br b{rng.randrange(count)}")
        else:
            lines.append(f"  %c{k} = const i64 1")
            lines.append(f"  condbr %c{k}, b{rng.randrange(count)}, b{rng.randrange(count)}")
    lines.append("}")
    return parse_program("\n".join(lines) + "\n").function("main")


def _simple_paths(successors, start, goals):
    """Every cycle-free block path from ``start`` that ends in ``goals``."""
    found, stack = [], [(start, (start,))]
    while stack:
        node, path = stack.pop()
        if node in goals:
            found.append(path)
            continue
        for nxt in successors[node]:
            if nxt not in path:
                stack.append((nxt, path + (nxt,)))
    return found


def test_dominance_matches_path_enumeration():
    rng = random.Random(31)
    for _ in range(300):
        cfg = build_cfg(_random_cfg(rng, rng.randint(1, 8)))
        dom, pdom = compute_dominators(cfg), compute_postdominators(cfg)
        live = sorted(cfg.reachable)
        for b in live:
            to_b = _simple_paths(cfg.successors, cfg.entry, {b})
            to_exit = _simple_paths(cfg.successors, b, set(cfg.exits))
            for a in live:
                assert dom.dominates_block(a, b) == all(a in p for p in to_b)
                if to_exit:
                    assert pdom.dominates_block(a, b) == all(a in p for p in to_exit)


# ─── Base tracing ─────────────────────────────────────────────────────────────


def test_trace_base_accumulates_static_offsets():
    fn = load_program(RECORDS).function("main")
    info = trace_base(fn, Value("b"))
    assert info.base == Value("p")
    assert info.origin is Origin.HEAP
    assert info.chain == ("b", "pp")
    assert info.cumulative_static_offset == 8


def test_dynamic_step_drops_offset():
    fn = load_program(LOOP).function("main")
    info = trace_base(fn, Value("p"))
    assert info.base == Value("buf")
    assert info.cumulative_static_offset is None


def test_globals_and_slots_are_not_heap():
    fn = load_program(RECORDS).function("main")
    assert trace_base(fn, Value("t")).base == GlobalRef("tbl")
    assert is_heap_pointer(fn, Value("t")) is HeapClass.NON_HEAP
    slot_fn = load_program(
        "func @main() -> i64 {\nentry:\n  %s = slot i64\n  %v = load i64, %s\n  ret %v\n}\n"
    ).function("main")
    assert is_heap_pointer(slot_fn, Value("s")) is HeapClass.NON_HEAP


def test_parameters_and_loaded_pointers_are_unknown(load_fixture):
    foo = load_fixture("list5.ir").function("foo")
    assert is_heap_pointer(foo, Value("ptr")) is HeapClass.UNKNOWN
    main = load_fixture("list1.ir").function("main")
    assert is_heap_pointer(main, Value("b1")) is HeapClass.UNKNOWN


def test_phi_of_heap_pointers_is_heap():
    fn = load_program(
        "func @main() -> i64 {\n"
        "entry:\n"
        "  %a = alloc 8\n"
        "  %b = alloc 8\n"
        "  %c = const i64 1\n"
        "  condbr %c, x, y\n"
        "x:\n"
        "  br z\n"
        "y:\n"
        "  br z\n"
        "z:\n"
        "  %p = phi i8* [%a, x], [%b, y]\n"
        "  ret 0\n"
        "}\n"
    ).function("main")
    assert is_heap_pointer(fn, Value("p")) is HeapClass.HEAP


def test_trace_base_is_idempotent():
    for path in CORPUS_FILES:
        with open(path, "r", encoding="utf-8") as f:
            program = load_program(f.read())
        for fn in program.functions:
            for name in fn.definitions:
                info = trace_base(fn, Value(name))
                again = trace_base(fn, info.base)
                assert again.base == info.base
                assert again.origin is info.origin
                assert again.chain == ()
                assert again.cumulative_static_offset == 0


def test_phi_of_heap_and_global_is_unknown():
    fn = load_program(
        "global @buf : i8 x 16\n"
        "\n"
        "func @main() -> i64 {\n"
        "entry:\n"
        "  %a = alloc 8\n"
        "  %c = const i64 1\n"
        "  condbr %c, x, y\n"
        "x:\n"
        "  br z\n"
        "y:\n"
        "  br z\n"
        "z:\n"
        "  %p = phi i8* [%a, x], [@buf, y]\n"
        "  ret 0\n"
        "}\n"
    ).function("main")
    assert trace_base(fn, Value("p")).origin is Origin.UNKNOWN
    assert is_heap_pointer(fn, Value("p")) is HeapClass.UNKNOWN
