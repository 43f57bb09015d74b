"""Counters the runtime exposes after a run."""

from dataclasses import asdict, dataclass


@dataclass
class RuntimeStats:
    allocations: int = 0
    frees: int = 0
    checks: int = 0
    range_queries: int = 0
    violations: int = 0
    escape_calls: int = 0
    escapes_recorded: int = 0
    duplicate_escapes: int = 0
    cache_flushes: int = 0
    neutralized: int = 0
    mitigated_overflows: int = 0
    query_ops: int = 0
    failed_allocations: int = 0

    def to_dict(self) -> dict:
        return asdict(self)
