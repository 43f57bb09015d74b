from vm.differential import DiffResult, prepare_variants, run_differential
from vm.interpreter import VM, Frame, run
from vm.report import EXIT_CODES, ExecutionReport, Verdict, Violation

__all__ = [
    "EXIT_CODES",
    "VM",
    "DiffResult",
    "ExecutionReport",
    "Frame",
    "Verdict",
    "Violation",
    "prepare_variants",
    "run",
    "run_differential",
]
