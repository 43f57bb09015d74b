"""Tests for instrumentation insertion and the check-site inventory."""

import pytest

from instrument.passes import (AlreadyInstrumentedError, InstrumentOptions,
                               instrument_program)
from instrument.sites import SiteKind, WindowEntry, collect_sites, parse_window
from ir.model import Const, Value
from ir.printer import print_program
from ir.validate import load_program


def _count(sites, kind):
    return sum(1 for s in sites if s.kind is kind)


def _opcodes(program, function="main"):
    return [inst.opcode for _, inst in program.function(function).iter_instructions()]


# ─── Insertion ────────────────────────────────────────────────────────────────


@pytest.mark.parametrize(
    "name, ranges, casts, escapes",
    [
        ("list1.ir", 2, 0, 1),
        ("list3.ir", 2, 1, 0),
        ("list4.ir", 4, 0, 2),
        ("list5.ir", 3, 0, 0),
        ("sieve.ir", 4, 0, 0),
    ],
)
def test_fixture_site_counts(load_fixture, name, ranges, casts, escapes):
    _, sites = instrument_program(load_fixture(name))
    assert _count(sites, SiteKind.RANGE_CHECK) == ranges
    assert _count(sites, SiteKind.CAST_CHECK) == casts
    assert _count(sites, SiteKind.ESCAPE_TRACK) == escapes


def test_check_follows_ptradd_and_escape_precedes_store(load_fixture):
    program, _ = instrument_program(load_fixture("list1.ir"))
    ops = _opcodes(program)
    assert ops[:4] == ["slot", "alloc", "escape", "store"]
    p = ops.index("ptradd")
    assert ops[p + 1] == "checkrange"


def test_range_check_operands(load_fixture):
    program, _ = instrument_program(load_fixture("list1.ir"))
    check = next(
        inst for _, inst in program.function("main").iter_instructions() if inst.opcode == "checkrange"
    )
    assert check.args == (Value("b1"), Value("p"), Const(1))
    assert check.get_meta("site") == "%p"


def test_cast_check_uses_record_size(load_fixture):
    program, sites = instrument_program(load_fixture("list3.ir"))
    cast_site = next(s for s in sites if s.kind is SiteKind.CAST_CHECK)
    assert cast_site.id == "bar:%o"
    assert cast_site.access_size == 8
    assert _opcodes(program, "bar") == ["alloc", "cast", "castcheck", "ret"]


def test_stack_and_global_bases_are_not_checked():
    program = load_program(
        "global @g : i64 x 4\n"
        "func @main() -> i64 {\n"
        "entry:\n"
        "  %s = slot i64, 4\n"
        "  %a = ptradd i64, %s, 3\n"
        "  store i64 1, %a\n"
        "  %b = ptradd i64, @g, 2\n"
        "  store i64 2, %b\n"
        "  ret 0\n"
        "}\n"
    )
    _, sites = instrument_program(program)
    assert sites == []


def test_identity_cast_is_not_checked():
    program = load_program(
        "func @main() -> i64 {\nentry:\n  %a = alloc 4\n  %b = cast %a to i8*\n  ret 0\n}\n"
    )
    _, sites = instrument_program(program)
    assert _count(sites, SiteKind.CAST_CHECK) == 0


def test_integer_stores_are_not_tracked(load_fixture):
    _, sites = instrument_program(load_fixture("sieve.ir"))
    assert _count(sites, SiteKind.ESCAPE_TRACK) == 0


def test_marker_records_enabled_kinds(load_fixture):
    program, _ = instrument_program(
        load_fixture("list1.ir"), InstrumentOptions(cast_checks=False, escapes=False)
    )
    assert program.instrumented == frozenset({"range"})
    assert "escape" not in _opcodes(program)


def test_already_instrumented_rejected(load_fixture):
    program, _ = instrument_program(load_fixture("list1.ir"))
    with pytest.raises(AlreadyInstrumentedError):
        instrument_program(program)


def test_instrumented_text_reloads(load_fixture):
    program, sites = instrument_program(load_fixture("list4.ir"))
    reloaded = load_program(print_program(program))
    assert reloaded.instrumented == frozenset({"range", "cast", "escape"})
    assert [s.id for s in collect_sites(reloaded)] == [s.id for s in sites]


def test_plain_fixture_has_no_sites(load_fixture):
    assert collect_sites(load_fixture("list4.ir")) == []


# ─── Options ──────────────────────────────────────────────────────────────────


def test_from_kinds_parses_list():
    options = InstrumentOptions.from_kinds([" range", "escape ", ""])
    assert options.range_checks and options.escapes
    assert not options.cast_checks
    assert options.kinds == frozenset({"range", "escape"})


def test_from_kinds_rejects_unknown():
    with pytest.raises(ValueError, match="bounds"):
        InstrumentOptions.from_kinds(["range", "bounds"])


# ─── Site inventory ───────────────────────────────────────────────────────────


def test_site_offsets_relative_to_group_base(load_fixture):
    _, sites = instrument_program(load_fixture("list4.ir"))
    by_id = {s.id: s for s in sites}
    p256 = by_id["foo:%p256"]
    assert p256.group_base == "%m"
    assert p256.base_offset == 256
    assert p256.end == 257
    assert p256.src_offset == 0
    assert by_id["foo:%p1b"].static_offset == 1


def test_dynamic_site_has_no_offset(load_fixture):
    _, sites = instrument_program(load_fixture("sieve.ir"))
    by_id = {s.id: s for s in sites}
    assert by_id["main:%f0"].base_offset == 0
    assert by_id["main:%fj"].base_offset is None
    assert by_id["main:%fj"].end is None
    assert by_id["main:%fj"].group_base == "%arr"


def test_escape_site_anchors_on_store_uid(load_fixture):
    _, sites = instrument_program(load_fixture("list4.ir"))
    escapes = [s.id for s in sites if s.kind is SiteKind.ESCAPE_TRACK]
    assert escapes == ["foo:#7", "main:#0"]


def test_parse_window():
    assert parse_window("%p:1;%q:8") == (WindowEntry("p", 1), WindowEntry("q", 8))
    assert parse_window(None) == ()
