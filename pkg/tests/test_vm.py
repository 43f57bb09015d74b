"""Tests for the interpreter and its verdicts."""

import os

import pytest

from instrument.passes import instrument_program
from ir.validate import load_program
from optimize.pipeline import run_pipeline
from vm.interpreter import VM, run, wrap
from vm.report import EXIT_CODES, Verdict


def _case(corpus_dir, name):
    with open(os.path.join(corpus_dir, "cases", name), "r", encoding="utf-8") as f:
        return load_program(f.read())


def _instrumented(program):
    instrumented, _ = instrument_program(program)
    return instrumented


def _main(*body, head=""):
    return load_program(head + "func @main() -> i64 {\nentry:\n" + "\n".join(body) + "\n}\n")


# ─── Arithmetic ───────────────────────────────────────────────────────────────


def test_wrap_to_type_width():
    assert wrap(128, "i8") == -128
    assert wrap(-1, "i32") == -1
    assert wrap(1 << 40, "i32") == 0
    assert wrap(-1, "i8*") == (1 << 64) - 1


def test_integer_overflow_wraps():
    program = _main(
        "  %x = const i8 127",
        "  %y = binop add i8 %x, 1",
        "  call void @print_i64(%y)",
        "  ret 0",
    )
    assert run(program).output == [-128]


def test_division_by_zero_yields_zero():
    program = _main(
        "  %q = binop sdiv i64 7, 0",
        "  %r = binop srem i64 -7, 2",
        "  %s = binop sdiv i64 -7, 2",
        "  call void @print_i64(%q)",
        "  call void @print_i64(%r)",
        "  call void @print_i64(%s)",
        "  ret 0",
    )
    report = run(program)
    assert report.verdict is Verdict.OK
    assert report.output == [0, -1, -3]


def test_global_initializer_is_visible():
    program = _main(
        "  %v = load i64, @g",
        "  call void @print_i64(%v)",
        "  ret %v",
        head='global @g : i64 x 2 = "2a00000000000000"\n',
    )
    report = run(program)
    assert report.output == [42]
    assert report.return_value == 42


def test_calls_pass_arguments_and_results(load_fixture):
    report = run(load_fixture("list3.ir"))
    assert report.output == [3]
    assert report.verdict is Verdict.OK
    assert report.exit_code == 0


# ─── Steps and limits ─────────────────────────────────────────────────────────


def test_instrumentation_does_not_count_as_steps(load_fixture):
    plain = load_fixture("list5.ir")
    assert run(_instrumented(plain)).steps == run(plain).steps


def test_runtime_calls_counted(load_fixture):
    plain = load_fixture("list5.ir")
    assert run(plain).runtime_calls == 0
    assert run(_instrumented(plain)).runtime_calls == 3


def test_step_limit():
    program = load_program("func @main() -> i64 {\nentry:\n  br loop\nloop:\n  br loop\n}\n")
    report = run(program, step_limit=50)
    assert report.verdict is Verdict.LIMIT
    assert report.exit_code == 20
    assert report.steps == 50


def test_call_depth_limit():
    program = load_program(
        "func @rec(i64 %n) -> i64 {\n"
        "entry:\n"
        "  %m = binop add i64 %n, 1\n"
        "  %r = call i64 @rec(%m)\n"
        "  ret %r\n"
        "}\n"
        "func @main() -> i64 {\n"
        "entry:\n"
        "  %v = call i64 @rec(0)\n"
        "  ret %v\n"
        "}\n"
    )
    report = VM(program, call_depth_limit=16).run()
    assert report.verdict is Verdict.LIMIT


# ─── Verdicts ─────────────────────────────────────────────────────────────────


def test_exit_code_table():
    assert EXIT_CODES[Verdict.OOB] == EXIT_CODES[Verdict.ASSERT_FAIL] == 10
    assert EXIT_CODES[Verdict.UAF] == 11
    assert EXIT_CODES[Verdict.DOUBLE_FREE] == 12
    assert EXIT_CODES[Verdict.INVALID_FREE] == 13


def test_assert_fail_compares_as_oob():
    assert Verdict.ASSERT_FAIL.equivalence_class == "oob"
    assert Verdict.UAF.equivalence_class == "uaf"


def test_overflow_detected_at_access(load_fixture):
    report = run(_instrumented(load_fixture("list1.ir")))
    assert report.verdict is Verdict.OOB
    assert report.site == "main:%p"
    assert report.exit_code == 10


def test_plain_run_misses_the_bugs(load_fixture):
    report = run(load_fixture("list1.ir"))
    assert report.verdict is Verdict.OK


def test_keep_going_reports_every_violation(load_fixture):
    report = run(_instrumented(load_fixture("list1.ir")), keep_going=True)
    assert [(v.kind, v.site) for v in report.violations] == [
        (Verdict.OOB, "main:%p"),
        (Verdict.UAF, "main:#3"),
    ]
    assert report.verdict is Verdict.OOB
    assert report.stats.neutralized == 1


def test_double_free_verdict(corpus_dir):
    report = run(_case(corpus_dir, "double_free_bad.ir"))
    assert report.verdict is Verdict.DOUBLE_FREE
    assert report.site == "main:#2"
    assert report.exit_code == 12


def test_invalid_free_verdict(corpus_dir):
    report = run(_instrumented(_case(corpus_dir, "invalid_free_interior_bad.ir")))
    assert report.verdict is Verdict.INVALID_FREE
    assert report.exit_code == 13


def test_dangling_store_through_poisoned_slot(corpus_dir):
    report = run(_instrumented(_case(corpus_dir, "uaf_slot_bad.ir")))
    assert report.verdict is Verdict.UAF
    assert report.site == "main:#3"
    assert report.exit_code == 11


def test_overflow_into_slack_is_mitigated(corpus_dir):
    report = run(_instrumented(_case(corpus_dir, "inbound_overflow_bad.ir")))
    assert report.verdict is Verdict.OK
    assert report.mitigated
    assert report.stats.mitigated_overflows == 1


def test_merged_assertion_failure(corpus_dir):
    unoptimized = _instrumented(_case(corpus_dir, "heap_overflow_loop_bad.ir"))
    optimized, _ = run_pipeline(unoptimized, "all")
    expected, actual = run(unoptimized), run(optimized)
    assert expected.verdict is Verdict.OOB
    assert actual.verdict in (Verdict.OOB, Verdict.ASSERT_FAIL)
    assert actual.signature() == expected.signature() == ("oob", "main:%p")


def test_report_to_dict(load_fixture):
    data = run(load_fixture("list5.ir")).to_dict()
    assert data["verdict"] == "ok"
    assert data["exit_code"] == 0
    assert data["output"] == [2]
    assert data["stats"]["allocations"] == 1


@pytest.mark.parametrize("cache_cap", [1, 64])
def test_cache_capacity_does_not_change_verdict(load_fixture, cache_cap):
    report = run(_instrumented(load_fixture("list1.ir")), keep_going=True, cache_cap=cache_cap)
    assert report.violations[-1].site == "main:#3"
