"""Pass registry, flag parsing and the fixed-order optimization pipeline."""

from typing import Callable, Dict, Iterable, Optional, Tuple, Union

from core.logger import logger
from ir.model import Function, Program
from optimize.builtin_query import builtin_query
from optimize.context import FunctionContext
from optimize.merge import merge_runtime_calls
from optimize.redundant import remove_redundant
from optimize.self_escape import elide_self_update_escapes
from optimize.stats import PASS_ORDER, OptStats
from optimize.struct_checks import optimize_struct_checks
from optimize.unsatisfiable import remove_unsatisfiable

PassFn = Callable[[FunctionContext, OptStats], Function]
# Called after every pass with the pass name and the program it produced.
PipelineHook = Callable[[str, Program], Program]

PASSES: Dict[str, PassFn] = {
    "unsat": remove_unsatisfiable,
    "builtin": builtin_query,
    "struct": optimize_struct_checks,
    "redundant": remove_redundant,
    "selfescape": elide_self_update_escapes,
    "merge": merge_runtime_calls,
}


class PipelineConfigError(ValueError):
    """Rejected pass selection."""


def parse_pass_flags(flags: Union[str, Iterable[str], None]) -> Tuple[str, ...]:
    """Resolve ``all``, ``none``, comma lists and ``-name`` exclusions.

    The result is always in pipeline order, e.g. ``"all,-merge"`` or
    ``"redundant,struct"``.
    """
    if flags is None:
        return PASS_ORDER
    items = flags.split(",") if isinstance(flags, str) else list(flags)
    chosen = set()
    for raw in items:
        item = raw.strip().lower()
        if not item:
            continue
        if item == "all":
            chosen.update(PASS_ORDER)
        elif item == "none":
            chosen.clear()
        elif item.startswith("-"):
            name = item[1:]
            if name not in PASSES:
                raise PipelineConfigError(f"unknown optimization pass '{name}'")
            chosen.discard(name)
        elif item in PASSES:
            chosen.add(item)
        else:
            raise PipelineConfigError(
                f"unknown optimization pass '{item}' (expected one of {', '.join(PASS_ORDER)})"
            )
    return tuple(name for name in PASS_ORDER if name in chosen)


def run_pipeline(
    program: Program,
    flags: Union[str, Iterable[str], None] = "all",
    hook: Optional[PipelineHook] = None,
) -> Tuple[Program, OptStats]:
    """Run the selected passes over every function in fixed order.

    Raises:
        PipelineConfigError: unknown pass, uninstrumented input, or struct
            elimination requested without cast checks to back it.
    """
    passes = parse_pass_flags(flags)
    stats = OptStats()
    if program.instrumented is None:
        raise PipelineConfigError("optimization needs an instrumented program")
    if "struct" in passes and "cast" not in program.instrumented:
        raise PipelineConfigError(
            "struct check elimination relies on cast checks; instrument with cast checks "
            "or disable the struct pass"
        )

    for name in passes:
        run_pass = PASSES[name]
        functions = []
        for fn in program.functions:
            functions.append(run_pass(FunctionContext(program, fn), stats))
        program = program.with_functions(tuple(functions))
        if hook is not None:
            program = hook(name, program)
        logger.info(
            f"Pass {name}: removed {stats.passes[name].removed}, "
            f"merged {stats.passes[name].merged}, rewritten {stats.passes[name].rewritten}"
        )
    return program, stats
