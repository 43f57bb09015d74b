from optimize.builtin_query import builtin_query
from optimize.context import FunctionContext, FunctionEditor
from optimize.merge import PointerGroup, merge_runtime_calls, pointer_groups
from optimize.pipeline import (PASSES, PipelineConfigError, parse_pass_flags,
                               run_pipeline)
from optimize.redundant import redundant_pair, remove_redundant
from optimize.self_escape import elide_self_update_escapes
from optimize.stats import PASS_ORDER, OptStats, PassCounters
from optimize.struct_checks import optimize_struct_checks
from optimize.unsatisfiable import remove_unsatisfiable

__all__ = [
    "PASSES",
    "PASS_ORDER",
    "FunctionContext",
    "FunctionEditor",
    "OptStats",
    "PassCounters",
    "PipelineConfigError",
    "PointerGroup",
    "builtin_query",
    "elide_self_update_escapes",
    "merge_runtime_calls",
    "optimize_struct_checks",
    "parse_pass_flags",
    "pointer_groups",
    "redundant_pair",
    "remove_redundant",
    "remove_unsatisfiable",
    "run_pipeline",
]
