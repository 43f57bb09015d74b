from cli.commands import (EXIT_FAILED, EXIT_INVALID, EXIT_OK, EXIT_USAGE,
                          cmd_corpus, cmd_diff, cmd_fuzz, cmd_gen,
                          cmd_instrument, cmd_run, cmd_stats)
from cli.corpus import (CaseResult, CorpusCase, CorpusSummary, ManifestError,
                        load_manifest, run_corpus)
from cli.fuzz import (FUZZ_CONFIGS, CampaignReport, Inequivalence, check_seed,
                      run_campaign)
from cli.generator import (GenConfig, GeneratedProgram, GroundTruth,
                           gen_random_program, generate)

__all__ = [
    "EXIT_FAILED",
    "EXIT_INVALID",
    "EXIT_OK",
    "EXIT_USAGE",
    "FUZZ_CONFIGS",
    "CampaignReport",
    "CaseResult",
    "CorpusCase",
    "CorpusSummary",
    "GenConfig",
    "GeneratedProgram",
    "GroundTruth",
    "Inequivalence",
    "ManifestError",
    "check_seed",
    "cmd_corpus",
    "cmd_diff",
    "cmd_fuzz",
    "cmd_gen",
    "cmd_instrument",
    "cmd_run",
    "cmd_stats",
    "gen_random_program",
    "generate",
    "load_manifest",
    "run_campaign",
    "run_corpus",
]
