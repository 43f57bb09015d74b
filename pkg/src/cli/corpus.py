"""Bundled good/bad corpus: manifest loading and expectation checking."""

import json
import os
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

from core.logger import logger
from instrument.passes import InstrumentOptions, instrument_program
from instrument.sites import SiteKind, collect_sites
from ir.validate import load_program
from optimize.pipeline import run_pipeline
from vm.interpreter import run
from vm.report import Verdict

MANIFEST_NAME = "manifest.json"
CATEGORIES = (
    "heap-overflow",
    "non-linear-overflow",
    "uaf",
    "double-free",
    "invalid-free",
    "in-bound-overflow",
    "clean",
)
MITIGATED_NOTE = "mitigated by rounding"


class ManifestError(ValueError):
    """The corpus manifest is missing, malformed or points at missing files."""


@dataclass(frozen=True)
class CorpusCase:
    name: str
    category: str
    good: Optional[str]
    bad: Optional[str]
    expect: str
    site: Optional[str] = None
    note: Optional[str] = None
    output: Optional[List[int]] = None

    def variants(self) -> Dict[str, str]:
        return {k: v for k, v in (("good", self.good), ("bad", self.bad)) if v}


@dataclass
class CaseResult:
    name: str
    category: str
    variant: str
    expected: str
    verdict: str
    site: Optional[str]
    passed: bool
    mitigated: bool = False
    checks: int = 0
    escapes: int = 0
    runtime_calls: int = 0
    note: Optional[str] = None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class CorpusSummary:
    flags: str
    results: List[CaseResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> List[CaseResult]:
        return [r for r in self.results if not r.passed]

    def by_category(self) -> Dict[str, Dict[str, int]]:
        table: Dict[str, Dict[str, int]] = {}
        for result in self.results:
            row = table.setdefault(result.category, {"passed": 0, "total": 0})
            row["total"] += 1
            row["passed"] += int(result.passed)
        return dict(sorted(table.items()))

    def to_dict(self) -> dict:
        return {
            "flags": self.flags,
            "passed": self.passed,
            "categories": self.by_category(),
            "results": [r.to_dict() for r in self.results],
        }


def load_manifest(corpus_dir: str) -> List[CorpusCase]:
    """Read and check ``manifest.json`` under ``corpus_dir``.

    Raises:
        ManifestError: missing manifest, unknown category or verdict,
            duplicate names, or case files that do not exist.
    """
    path = os.path.join(corpus_dir, MANIFEST_NAME)
    if not os.path.exists(path):
        raise ManifestError(f"No {MANIFEST_NAME} in {corpus_dir}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ManifestError(f"Malformed manifest {path}: {e}") from e

    verdicts = {v.value for v in Verdict}
    cases: List[CorpusCase] = []
    seen = set()
    for entry in data.get("cases", []):
        try:
            case = CorpusCase(
                name=entry["name"],
                category=entry["category"],
                good=entry.get("good"),
                bad=entry.get("bad"),
                expect=entry["expect"],
                site=entry.get("site"),
                note=entry.get("note"),
                output=entry.get("output"),
            )
        except (KeyError, TypeError) as e:
            raise ManifestError(f"Manifest entry {entry!r} lacks {e}") from e
        if case.name in seen:
            raise ManifestError(f"Duplicate corpus case '{case.name}'")
        if case.category not in CATEGORIES:
            raise ManifestError(f"Case '{case.name}': unknown category '{case.category}'")
        if case.expect not in verdicts:
            raise ManifestError(f"Case '{case.name}': unknown verdict '{case.expect}'")
        if not case.variants():
            raise ManifestError(f"Case '{case.name}' has neither a good nor a bad variant")
        for variant, rel in case.variants().items():
            if not os.path.exists(os.path.join(corpus_dir, rel)):
                raise ManifestError(f"Case '{case.name}': {variant} file {rel} not found")
        seen.add(case.name)
        cases.append(case)
    logger.debug(f"Loaded {len(cases)} corpus case(s) from {path}")
    return cases


def _judge(case: CorpusCase, variant: str, report) -> bool:
    if variant == "good":
        if report.verdict is not Verdict.OK:
            return False
        return case.output is None or report.output == case.output
    if report.verdict.equivalence_class != case.expect:
        return False
    if case.expect == Verdict.OK.value:
        return case.category != "in-bound-overflow" or report.mitigated
    return case.site is None or report.site == case.site


def run_case(
    case: CorpusCase,
    corpus_dir: str,
    flags: str = "all",
    options: Optional[InstrumentOptions] = None,
    step_limit: Optional[int] = None,
    cache_cap: Optional[int] = None,
) -> List[CaseResult]:
    results = []
    for variant, rel in case.variants().items():
        with open(os.path.join(corpus_dir, rel), "r", encoding="utf-8") as f:
            plain = load_program(f.read())
        instrumented, _ = instrument_program(plain, options)
        optimized, _ = run_pipeline(instrumented, flags)
        report = run(optimized, step_limit=step_limit, cache_cap=cache_cap)
        sites = collect_sites(optimized)
        passed = _judge(case, variant, report)
        note = case.note
        if variant == "bad" and report.mitigated:
            note = MITIGATED_NOTE
        result = CaseResult(
            name=case.name,
            category=case.category,
            variant=variant,
            expected="ok" if variant == "good" else case.expect,
            verdict=report.verdict.value,
            site=report.site,
            passed=passed,
            mitigated=report.mitigated,
            checks=sum(1 for s in sites if s.is_check),
            escapes=sum(1 for s in sites if s.kind is SiteKind.ESCAPE_TRACK),
            runtime_calls=report.runtime_calls,
            note=note,
        )
        if not passed:
            logger.warning(
                f"Corpus case {case.name} ({variant}): expected {result.expected}, "
                f"got {result.verdict} at {result.site}"
            )
        results.append(result)
    return results


def run_corpus(
    corpus_dir: str,
    flags: str = "all",
    options: Optional[InstrumentOptions] = None,
    step_limit: Optional[int] = None,
    cache_cap: Optional[int] = None,
) -> CorpusSummary:
    """Run every variant of every case under ``flags`` and judge the verdicts."""
    summary = CorpusSummary(flags=flags)
    for case in load_manifest(corpus_dir):
        summary.results.extend(
            run_case(case, corpus_dir, flags, options, step_limit, cache_cap)
        )
    logger.info(
        f"Corpus run ({flags}): {len(summary.results) - len(summary.failures)}"
        f"/{len(summary.results)} variant(s) as expected"
    )
    return summary
