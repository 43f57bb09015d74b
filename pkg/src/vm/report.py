"""Verdicts and execution reports produced by the VM."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

from runtime.stats import RuntimeStats


class Verdict(Enum):
    OK = "ok"
    OOB = "oob"
    UAF = "uaf"
    DOUBLE_FREE = "double-free"
    INVALID_FREE = "invalid-free"
    ASSERT_FAIL = "assert-fail"
    LIMIT = "limit-exceeded"

    @property
    def equivalence_class(self) -> str:
        """Merged assertions stand in for range checks, so they compare as oob."""
        return Verdict.OOB.value if self is Verdict.ASSERT_FAIL else self.value


EXIT_CODES: Dict[Verdict, int] = {
    Verdict.OK: 0,
    Verdict.OOB: 10,
    Verdict.ASSERT_FAIL: 10,
    Verdict.UAF: 11,
    Verdict.DOUBLE_FREE: 12,
    Verdict.INVALID_FREE: 13,
    Verdict.LIMIT: 20,
}


@dataclass(frozen=True)
class Violation:
    kind: Verdict
    site: str
    message: str
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "site": self.site,
            "message": self.message,
            "details": dict(self.details),
        }


@dataclass
class ExecutionReport:
    verdict: Verdict = Verdict.OK
    violations: List[Violation] = field(default_factory=list)
    steps: int = 0
    runtime_calls: int = 0
    output: List[int] = field(default_factory=list)
    return_value: Optional[int] = None
    stats: RuntimeStats = field(default_factory=RuntimeStats)

    @property
    def first(self) -> Optional[Violation]:
        return self.violations[0] if self.violations else None

    @property
    def site(self) -> Optional[str]:
        return self.first.site if self.first else None

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.verdict]

    @property
    def mitigated(self) -> bool:
        return self.verdict is Verdict.OK and self.stats.mitigated_overflows > 0

    def signature(self) -> tuple:
        """What must match between differently optimized runs of one program."""
        return self.verdict.equivalence_class, self.site

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "site": self.site,
            "violations": [v.to_dict() for v in self.violations],
            "steps": self.steps,
            "runtime_calls": self.runtime_calls,
            "output": list(self.output),
            "return_value": self.return_value,
            "exit_code": self.exit_code,
            "mitigated": self.mitigated,
            "stats": self.stats.to_dict(),
        }
