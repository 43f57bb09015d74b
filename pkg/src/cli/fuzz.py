"""Differential fuzz campaigns over generated programs.

Each seed is generated once, run plain and with unoptimized instrumentation,
then optimized under the full pipeline and under every single-pass-off set.
An optimized run whose verdict class or first site differs from the
unoptimized run is an inequivalence; its program is saved as a reproducer.
"""

import json
import os
from dataclasses import dataclass, field, replace
from multiprocessing import Pool
from typing import Dict, List, Optional, Tuple

from tqdm import tqdm

from cli.generator import GenConfig, generate
from core.logger import logger
from instrument.passes import instrument_program
from optimize.pipeline import PipelineHook, run_pipeline
from optimize.stats import PASS_ORDER
from vm.differential import DiffResult
from vm.interpreter import run

FUZZ_CONFIGS: Tuple[str, ...] = ("all",) + tuple(f"all,-{name}" for name in PASS_ORDER)


@dataclass(frozen=True)
class Inequivalence:
    seed: int
    flags: str
    unoptimized: Tuple[str, Optional[str]]
    optimized: Tuple[str, Optional[str]]
    outputs_match: bool
    reproducer: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "flags": self.flags,
            "unoptimized": list(self.unoptimized),
            "optimized": list(self.optimized),
            "outputs_match": self.outputs_match,
            "reproducer": self.reproducer,
        }


@dataclass
class SeedOutcome:
    seed: int
    truth: str
    verdict: str
    truth_matches: bool
    runs: int = 0
    calls_unoptimized: int = 0
    calls_optimized: Dict[str, int] = field(default_factory=dict)
    inequivalences: List[Inequivalence] = field(default_factory=list)


@dataclass
class CampaignReport:
    first_seed: int
    seeds: int
    configs: Tuple[str, ...] = FUZZ_CONFIGS
    runs: int = 0
    verdicts: Dict[str, int] = field(default_factory=dict)
    truth_mismatches: List[int] = field(default_factory=list)
    calls_unoptimized: int = 0
    calls_optimized: Dict[str, int] = field(default_factory=dict)
    inequivalences: List[Inequivalence] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.inequivalences

    def add(self, outcome: SeedOutcome) -> None:
        self.runs += outcome.runs
        self.verdicts[outcome.verdict] = self.verdicts.get(outcome.verdict, 0) + 1
        if not outcome.truth_matches:
            self.truth_mismatches.append(outcome.seed)
        self.calls_unoptimized += outcome.calls_unoptimized
        for flags, calls in outcome.calls_optimized.items():
            self.calls_optimized[flags] = self.calls_optimized.get(flags, 0) + calls
        self.inequivalences.extend(outcome.inequivalences)

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "first_seed": self.first_seed,
            "seeds": self.seeds,
            "configs": list(self.configs),
            "runs": self.runs,
            "verdicts": dict(sorted(self.verdicts.items())),
            "truth_mismatches": sorted(self.truth_mismatches),
            "calls_unoptimized": self.calls_unoptimized,
            "calls_optimized": dict(self.calls_optimized),
            "inequivalences": [
                i.to_dict() for i in sorted(self.inequivalences, key=lambda i: (i.seed, i.flags))
            ],
        }


def save_reproducer(
    directory: str, seed: int, text: str, details: dict
) -> str:
    """Write ``seed_<n>.ir`` and ``seed_<n>.json``; returns the .ir path."""
    os.makedirs(directory, exist_ok=True)
    ir_path = os.path.join(directory, f"seed_{seed}.ir")
    with open(ir_path, "w", encoding="utf-8") as f:
        f.write(text)
    with open(os.path.join(directory, f"seed_{seed}.json"), "w", encoding="utf-8") as f:
        json.dump(details, f, indent=2, sort_keys=True)
    logger.warning(f"Reproducer for seed {seed} saved to {ir_path}")
    return ir_path


def check_seed(
    cfg: GenConfig,
    configs: Tuple[str, ...] = FUZZ_CONFIGS,
    step_limit: Optional[int] = None,
    reproducer_dir: Optional[str] = None,
    hook: Optional[PipelineHook] = None,
) -> SeedOutcome:
    """Run one generated program through every pass configuration."""
    generated = generate(cfg)
    unoptimized, _ = instrument_program(generated.program)
    plain_report = run(generated.program, step_limit=step_limit)
    unopt_report = run(unoptimized, step_limit=step_limit)

    truth = generated.truth
    outcome = SeedOutcome(
        seed=cfg.seed,
        truth=truth.verdict,
        verdict=unopt_report.verdict.value,
        truth_matches=(
            unopt_report.verdict.equivalence_class == truth.verdict
            and unopt_report.site == truth.site
        ),
        runs=2,
        calls_unoptimized=unopt_report.runtime_calls,
    )
    if not outcome.truth_matches:
        logger.warning(
            f"Seed {cfg.seed}: expected {truth.verdict} at {truth.site}, "
            f"got {unopt_report.verdict.value} at {unopt_report.site}"
        )

    failures: List[dict] = []
    for flags in configs:
        optimized, _ = run_pipeline(unoptimized, flags, hook=hook)
        result = DiffResult(
            plain=plain_report,
            unoptimized=unopt_report,
            optimized=run(optimized, step_limit=step_limit),
        )
        outcome.runs += 1
        outcome.calls_optimized[flags] = result.optimized.runtime_calls
        if result.equivalent:
            continue
        outcome.inequivalences.append(
            Inequivalence(
                seed=cfg.seed,
                flags=flags,
                unoptimized=result.unoptimized.signature(),
                optimized=result.optimized.signature(),
                outputs_match=result.outputs_match,
            )
        )
        failures.append({"flags": flags, "diff": result.to_dict()})

    if failures and reproducer_dir:
        path = save_reproducer(
            reproducer_dir,
            cfg.seed,
            generated.text,
            {"seed": cfg.seed, "truth": truth.to_dict(), "failures": failures},
        )
        outcome.inequivalences = [replace(i, reproducer=path) for i in outcome.inequivalences]
    return outcome


def _check_seed_args(args: tuple) -> SeedOutcome:
    return check_seed(*args)


def run_campaign(
    count: int,
    cfg: GenConfig,
    configs: Tuple[str, ...] = FUZZ_CONFIGS,
    jobs: int = 1,
    step_limit: Optional[int] = None,
    reproducer_dir: Optional[str] = None,
    hook: Optional[PipelineHook] = None,
    progress: bool = True,
) -> CampaignReport:
    """Check seeds ``cfg.seed .. cfg.seed + count - 1``.

    Raises:
        ValueError: count < 1.
    """
    if count < 1:
        raise ValueError(f"Campaign needs at least one seed, got {count}")

    logger.info(
        f"Fuzz campaign: {count} seed(s) from {cfg.seed}, {len(configs)} config(s), jobs={jobs}"
    )
    tasks = [
        (replace(cfg, seed=cfg.seed + offset), configs, step_limit, reproducer_dir, hook)
        for offset in range(count)
    ]
    report = CampaignReport(first_seed=cfg.seed, seeds=count, configs=configs)
    bar = tqdm(total=count, disable=not progress, desc="fuzz")

    def absorb(outcome: SeedOutcome) -> None:
        report.add(outcome)
        bar.set_description(
            f"Inequivalent: {len(report.inequivalences)}", refresh=False
        )
        bar.update(1)

    if jobs > 1:
        with Pool(jobs) as pool:
            for outcome in pool.imap_unordered(_check_seed_args, tasks):
                absorb(outcome)
    else:
        for task in tasks:
            absorb(_check_seed_args(task))
    bar.close()

    if report.ok:
        logger.info(f"Fuzz campaign finished: {report.runs} runs, no inequivalence")
    else:
        logger.warning(
            f"Fuzz campaign finished: {len(report.inequivalences)} inequivalence(s)"
        )
    return report
