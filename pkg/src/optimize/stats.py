"""Per-pass and per-function accounting for the optimizer."""

from dataclasses import asdict, dataclass, field, fields
from typing import Dict, List, Tuple

PASS_ORDER: Tuple[str, ...] = ("unsat", "builtin", "struct", "redundant", "selfescape", "merge")


@dataclass
class PassCounters:
    examined: int = 0
    removed: int = 0
    merged: int = 0
    rewritten: int = 0
    flagged: int = 0

    def add(self, other: "PassCounters") -> None:
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))

    @property
    def is_zero(self) -> bool:
        return not any(asdict(self).values())


@dataclass(frozen=True)
class RemovedSite:
    pass_name: str
    function: str
    site: str
    reason: str = ""


@dataclass(frozen=True)
class FlaggedSite:
    """A check proven to fail whenever it runs."""

    function: str
    site: str
    end: int
    limit: int


@dataclass
class OptStats:
    passes: Dict[str, PassCounters] = field(
        default_factory=lambda: {name: PassCounters() for name in PASS_ORDER}
    )
    per_function: Dict[str, Dict[str, PassCounters]] = field(default_factory=dict)
    removed_log: List[RemovedSite] = field(default_factory=list)
    flagged_log: List[FlaggedSite] = field(default_factory=list)

    def counters(self, pass_name: str, function: str) -> PassCounters:
        by_pass = self.per_function.setdefault(function, {})
        return by_pass.setdefault(pass_name, PassCounters())

    def record(self, pass_name: str, function: str, **counts: int) -> None:
        delta = PassCounters(**counts)
        self.passes.setdefault(pass_name, PassCounters()).add(delta)
        self.counters(pass_name, function).add(delta)

    def log_removed(self, pass_name: str, function: str, site: str, reason: str = "") -> None:
        self.removed_log.append(RemovedSite(pass_name, function, site, reason))
        self.record(pass_name, function, removed=1)

    def log_flagged(self, function: str, site: str, end: int, limit: int) -> None:
        self.flagged_log.append(FlaggedSite(function, site, end, limit))
        self.record("builtin", function, flagged=1)

    def merge(self, other: "OptStats") -> "OptStats":
        for name, counters in other.passes.items():
            self.passes.setdefault(name, PassCounters()).add(counters)
        for function, by_pass in other.per_function.items():
            for name, counters in by_pass.items():
                self.counters(name, function).add(counters)
        self.removed_log.extend(other.removed_log)
        self.flagged_log.extend(other.flagged_log)
        return self

    def total(self, counter: str) -> int:
        return sum(getattr(c, counter) for c in self.passes.values())

    @property
    def is_zero(self) -> bool:
        return all(c.is_zero for c in self.passes.values()) and not self.removed_log

    def to_dict(self) -> dict:
        return {
            "passes": {name: asdict(c) for name, c in self.passes.items()},
            "per_function": {
                fn: {name: asdict(c) for name, c in by_pass.items()}
                for fn, by_pass in self.per_function.items()
            },
            "removed": [asdict(r) for r in self.removed_log],
            "flagged": [asdict(f) for f in self.flagged_log],
        }
