"""Tests for the plain / unoptimized / optimized comparison."""

from dataclasses import replace

import pytest

from vm.differential import prepare_variants, run_differential
from vm.report import Verdict

CHECK_OPCODES = ("checkrange", "castcheck", "assertrange")


def _strip_checks(name, program):
    """Pipeline hook that drops every bounds check the passes left behind."""
    functions = tuple(
        replace(
            fn,
            blocks=tuple(
                replace(
                    block,
                    instructions=tuple(
                        inst for inst in block.instructions if inst.opcode not in CHECK_OPCODES
                    ),
                )
                for block in fn.blocks
            ),
        )
        for fn in program.functions
    )
    return program.with_functions(functions)


def _diff(plain, flags="all", hook=None):
    unoptimized, optimized, stats = prepare_variants(plain, flags, hook=hook)
    return run_differential(plain, optimized, unoptimized), stats


@pytest.mark.parametrize("name", ["list3.ir", "list4.ir", "list5.ir", "sieve.ir"])
def test_clean_fixtures_are_equivalent(load_fixture, name):
    result, _ = _diff(load_fixture(name))
    assert result.equivalent
    assert result.plain.output == result.unoptimized.output == result.optimized.output
    assert result.calls_saved >= 0


def test_buggy_fixture_keeps_verdict(load_fixture):
    result, _ = _diff(load_fixture("list1.ir"))
    assert result.plain.verdict is Verdict.OK
    assert result.unoptimized.signature() == ("oob", "main:%p")
    assert result.verdicts_match


def test_sieve_saves_runtime_calls(load_fixture):
    result, stats = _diff(load_fixture("sieve.ir"))
    assert result.calls_saved > 0
    assert stats.passes["merge"].merged > 0


def test_no_passes_saves_nothing(load_fixture):
    result, _ = _diff(load_fixture("list5.ir"), "none")
    assert result.calls_saved == 0
    assert result.equivalent


def test_dropped_checks_are_inequivalent(load_fixture):
    result, _ = _diff(load_fixture("list1.ir"), hook=_strip_checks)
    assert not result.verdicts_match
    assert not result.equivalent
    assert result.optimized.signature() != ("oob", "main:%p")


def test_diff_to_dict(load_fixture):
    result, _ = _diff(load_fixture("list5.ir"))
    data = result.to_dict()
    assert data["equivalent"] is True
    assert data["optimized"]["output"] == [2]
    assert set(data) >= {"plain", "unoptimized", "optimized", "verdicts_match", "outputs_match"}
