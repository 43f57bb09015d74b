"""Subcommand implementations. Each returns a process exit code."""

import functools
import json
import os
import sys
from typing import Callable, Dict, Optional

from cli.corpus import ManifestError, run_corpus
from cli.fuzz import FUZZ_CONFIGS, run_campaign
from cli.generator import GenConfig, generate
from core.config import config
from core.export_service import ExportService
from core.logger import logger
from core.resources import corpus_dir as bundled_corpus_dir
from instrument.passes import (AlreadyInstrumentedError, InstrumentOptions,
                               instrument_program)
from instrument.sites import SiteKind, collect_sites
from ir.errors import IRSyntaxError, IRValidationError
from ir.model import Program
from ir.printer import print_program
from ir.validate import load_program
from optimize.pipeline import PipelineConfigError, run_pipeline
from vm.differential import prepare_variants, run_differential
from vm.interpreter import run

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_INVALID = 3


def _emit(data: dict, as_json: bool, text: Callable[[], str]) -> None:
    if as_json:
        print(json.dumps(data, indent=2, sort_keys=True))
    else:
        print(text())


def _fail(message: str) -> None:
    print(f"error: {message}", file=sys.stderr)


def exit_codes(func: Callable[..., int]) -> Callable[..., int]:
    """Turn input errors into the documented exit codes instead of tracebacks."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs) -> int:
        try:
            return func(*args, **kwargs)
        except FileNotFoundError as e:
            logger.error(f"{func.__name__}: {e}", exc_info=True)
            _fail(f"file not found: {e.filename or e}")
            return EXIT_USAGE
        except IRValidationError as e:
            logger.error(f"{func.__name__}: {e}", exc_info=True)
            for diagnostic in e.diagnostics:
                _fail(str(diagnostic))
            return EXIT_INVALID
        except (IRSyntaxError, AlreadyInstrumentedError) as e:
            logger.error(f"{func.__name__}: {e}", exc_info=True)
            _fail(str(e))
            return EXIT_INVALID
        except (PipelineConfigError, ManifestError, ValueError) as e:
            logger.error(f"{func.__name__}: {e}", exc_info=True)
            _fail(str(e))
            return EXIT_USAGE

    return wrapper


def read_program(path: str) -> Program:
    """Read, parse and validate an IR file."""
    with open(path, "r", encoding="utf-8") as f:
        return load_program(f.read())


def _flags(flags: Optional[str]) -> str:
    return flags if flags is not None else config.get("optimize.passes", "all")


def static_counts(program: Program) -> Dict[str, int]:
    counts = {kind.value: 0 for kind in SiteKind}
    for site in collect_sites(program):
        counts[site.kind.value] += 1
    return counts


# ─── instrument ───


@exit_codes
def cmd_instrument(
    path: str,
    flags: Optional[str] = None,
    output: Optional[str] = None,
    options: Optional[InstrumentOptions] = None,
    as_json: bool = False,
) -> int:
    """Write ``<input>.inst.ir`` (or ``output``) and its OptStats as JSON alongside."""
    flags = _flags(flags)
    plain = read_program(path)
    instrumented, _ = instrument_program(plain, options)
    optimized, stats = run_pipeline(instrumented, flags)

    if output is None:
        stem, _ = os.path.splitext(path)
        output = f"{stem}.inst.ir"
    stats_path = f"{os.path.splitext(output)[0]}.json"
    with open(output, "w", encoding="utf-8") as f:
        f.write(print_program(optimized))
    data = {
        "input": path,
        "output": output,
        "flags": flags,
        "before": static_counts(instrumented),
        "after": static_counts(optimized),
        "stats": stats.to_dict(),
    }
    with open(stats_path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, sort_keys=True)
    logger.info(f"Instrumented {path} -> {output} ({flags})")

    def text() -> str:
        before, after = data["before"], data["after"]
        return (
            f"{output}: range checks {before['range-check']} -> {after['range-check']}, "
            f"cast checks {before['cast-check']} -> {after['cast-check']}, "
            f"escapes {before['escape-track']} -> {after['escape-track']}, "
            f"removed {stats.total('removed')}"
        )

    _emit(data, as_json, text)
    return EXIT_OK


# ─── run ───


@exit_codes
def cmd_run(
    path: str,
    flags: Optional[str] = None,
    plain: bool = False,
    keep_going: Optional[bool] = None,
    step_limit: Optional[int] = None,
    cache_cap: Optional[int] = None,
    as_json: bool = False,
) -> int:
    """Run a program and exit with the VM's code for its verdict.

    Plain programs are instrumented and optimized first unless ``plain`` is
    set; programs that already carry instrumentation run as they are.
    """
    program = read_program(path)
    if program.instrumented is None and not plain:
        program, _ = instrument_program(program)
        program, _ = run_pipeline(program, _flags(flags))
    report = run(program, step_limit=step_limit, keep_going=keep_going, cache_cap=cache_cap)

    def text() -> str:
        lines = [f"verdict: {report.verdict.value} (exit {report.exit_code})"]
        for violation in report.violations:
            lines.append(f"  {violation.kind.value} at {violation.site}: {violation.message}")
        if report.output:
            lines.append(f"output: {' '.join(str(v) for v in report.output)}")
        if report.mitigated:
            lines.append(f"mitigated overflows: {report.stats.mitigated_overflows}")
        lines.append(f"steps: {report.steps}, runtime calls: {report.runtime_calls}")
        return "\n".join(lines)

    _emit(report.to_dict(), as_json, text)
    return report.exit_code


# ─── diff ───


@exit_codes
def cmd_diff(
    path: str,
    flags: Optional[str] = None,
    step_limit: Optional[int] = None,
    cache_cap: Optional[int] = None,
    as_json: bool = False,
) -> int:
    flags = _flags(flags)
    plain = read_program(path)
    unoptimized, optimized, _ = prepare_variants(plain, flags)
    result = run_differential(plain, optimized, unoptimized, step_limit, cache_cap)

    def text() -> str:
        rows = [
            ("plain", result.plain),
            ("unoptimized", result.unoptimized),
            ("optimized", result.optimized),
        ]
        lines = [
            f"{label:<12} {r.verdict.value:<13} {r.site or '-':<16} calls={r.runtime_calls}"
            for label, r in rows
        ]
        lines.append(f"equivalent: {'yes' if result.equivalent else 'NO'}")
        return "\n".join(lines)

    _emit(result.to_dict(), as_json, text)
    return EXIT_OK if result.equivalent else EXIT_FAILED


# ─── corpus ───


@exit_codes
def cmd_corpus(
    directory: Optional[str] = None,
    flags: Optional[str] = None,
    step_limit: Optional[int] = None,
    cache_cap: Optional[int] = None,
    xlsx: Optional[str] = None,
    as_json: bool = False,
) -> int:
    summary = run_corpus(
        directory or bundled_corpus_dir(), _flags(flags), step_limit=step_limit, cache_cap=cache_cap
    )
    if xlsx:
        ExportService.save(ExportService.build_workbook(corpus=summary), xlsx)

    def text() -> str:
        lines = []
        for category, row in summary.by_category().items():
            lines.append(f"{category:<22} {row['passed']}/{row['total']}")
        for r in summary.results:
            if r.note:
                lines.append(f"  {r.name} ({r.variant}): {r.verdict}, {r.note}")
        for r in summary.failures:
            lines.append(f"  FAILED {r.name} ({r.variant}): expected {r.expected}, got {r.verdict}")
        return "\n".join(lines)

    _emit(summary.to_dict(), as_json, text)
    return EXIT_OK if summary.passed else EXIT_FAILED


# ─── fuzz ───


@exit_codes
def cmd_fuzz(
    count: Optional[int] = None,
    seed: Optional[int] = None,
    bug_rate: Optional[float] = None,
    jobs: Optional[int] = None,
    step_limit: Optional[int] = None,
    reproducer_dir: Optional[str] = None,
    as_json: bool = False,
    progress: bool = True,
) -> int:
    count = count if count is not None else config.get("fuzz.seeds")
    cfg = GenConfig(
        seed=seed if seed is not None else config.get("fuzz.seed", 0),
        bug_rate=bug_rate if bug_rate is not None else config.get("fuzz.bug_rate"),
    )
    report = run_campaign(
        count,
        cfg,
        FUZZ_CONFIGS,
        jobs=jobs if jobs is not None else config.get("fuzz.jobs", 1),
        step_limit=step_limit,
        reproducer_dir=reproducer_dir or config.get("fuzz.reproducer_dir"),
        progress=progress and not as_json,
    )

    def text() -> str:
        lines = [
            f"seeds: {report.seeds} from {report.first_seed}, runs: {report.runs}",
            "verdicts: " + ", ".join(f"{k}={v}" for k, v in sorted(report.verdicts.items())),
            f"inequivalences: {len(report.inequivalences)}",
        ]
        for i in report.inequivalences:
            lines.append(f"  seed {i.seed} [{i.flags}]: {i.unoptimized} vs {i.optimized} -> {i.reproducer}")
        return "\n".join(lines)

    _emit(report.to_dict(), as_json, text)
    return EXIT_OK if report.ok else EXIT_FAILED


# ─── stats ───


@exit_codes
def cmd_stats(
    path: str,
    flags: Optional[str] = None,
    xlsx: Optional[str] = None,
    as_json: bool = False,
) -> int:
    flags = _flags(flags)
    instrumented, _ = instrument_program(read_program(path))
    optimized, stats = run_pipeline(instrumented, flags)
    before, after = static_counts(instrumented), static_counts(optimized)
    if xlsx:
        counts = {f"before {k}": v for k, v in before.items()}
        counts.update({f"after {k}": v for k, v in after.items()})
        ExportService.save(ExportService.build_workbook(stats=stats, check_counts=counts), xlsx)

    data = {"flags": flags, "before": before, "after": after, "stats": stats.to_dict()}

    def text() -> str:
        lines = [f"{'pass':<12} examined removed merged rewritten flagged"]
        for name, c in stats.passes.items():
            lines.append(
                f"{name:<12} {c.examined:>8} {c.removed:>7} {c.merged:>6} {c.rewritten:>9} {c.flagged:>7}"
            )
        for kind in before:
            lines.append(f"{kind:<14} {before[kind]:>4} -> {after[kind]}")
        return "\n".join(lines)

    _emit(data, as_json, text)
    return EXIT_OK


# ─── gen ───


@exit_codes
def cmd_gen(
    seed: Optional[int] = None,
    bug_rate: float = 0.0,
    output: Optional[str] = None,
    as_json: bool = False,
) -> int:
    generated = generate(
        GenConfig(seed=seed if seed is not None else config.get("fuzz.seed", 0), bug_rate=bug_rate)
    )
    if output:
        with open(output, "w", encoding="utf-8") as f:
            f.write(generated.text)
    if as_json:
        _emit(
            {"seed": generated.seed, "truth": generated.truth.to_dict(), "text": generated.text},
            True,
            str,
        )
    elif not output:
        print(generated.text, end="")
    return EXIT_OK
