"""Run a program plain, instrumented, and instrumented+optimized, then compare."""

from dataclasses import dataclass
from typing import Optional, Tuple

from instrument.passes import InstrumentOptions, instrument_program
from ir.model import Program
from optimize.pipeline import PipelineHook, run_pipeline
from optimize.stats import OptStats
from vm.interpreter import run
from vm.report import ExecutionReport, Verdict


@dataclass
class DiffResult:
    plain: ExecutionReport
    unoptimized: ExecutionReport
    optimized: ExecutionReport

    @property
    def verdicts_match(self) -> bool:
        return self.unoptimized.signature() == self.optimized.signature()

    @property
    def outputs_match(self) -> bool:
        """Clean runs print the same values as the uninstrumented program."""
        ok = Verdict.OK
        if self.unoptimized.verdict is ok and self.plain.verdict is ok:
            if self.unoptimized.output != self.plain.output:
                return False
        if self.unoptimized.verdict is ok and self.optimized.verdict is ok:
            return self.optimized.output == self.unoptimized.output
        return True

    @property
    def equivalent(self) -> bool:
        return self.verdicts_match and self.outputs_match

    @property
    def calls_saved(self) -> int:
        return self.unoptimized.runtime_calls - self.optimized.runtime_calls

    def to_dict(self) -> dict:
        return {
            "equivalent": self.equivalent,
            "verdicts_match": self.verdicts_match,
            "outputs_match": self.outputs_match,
            "plain": self.plain.to_dict(),
            "unoptimized": self.unoptimized.to_dict(),
            "optimized": self.optimized.to_dict(),
        }


def prepare_variants(
    plain: Program,
    flags: str = "all",
    options: Optional[InstrumentOptions] = None,
    hook: Optional[PipelineHook] = None,
) -> Tuple[Program, Program, OptStats]:
    """Instrumented and optimized variants of ``plain``, plus the optimizer's stats."""
    unoptimized, _ = instrument_program(plain, options)
    optimized, stats = run_pipeline(unoptimized, flags, hook=hook)
    return unoptimized, optimized, stats


def run_differential(
    p_plain: Program,
    p_opt: Program,
    p_unopt: Program,
    step_limit: Optional[int] = None,
    cache_cap: Optional[int] = None,
) -> DiffResult:
    def execute(program: Program) -> ExecutionReport:
        return run(program, step_limit=step_limit, keep_going=False, cache_cap=cache_cap)

    return DiffResult(
        plain=execute(p_plain),
        unoptimized=execute(p_unopt),
        optimized=execute(p_opt),
    )
