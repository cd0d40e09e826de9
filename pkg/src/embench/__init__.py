"""Toolkit for building, auditing, and evaluating entity-matching benchmarks
under open-environment conditions (open entities, imbalanced labels,
multi-modal records)."""

from .audit import AuditReport, audit, audit_external
from .builder import (
    PARADIGMS,
    BenchmarkBundle,
    BuildContext,
    GenConfig,
    SplitPlan,
    build_all,
    build_cfm_test,
    build_om_test,
    build_rl_test,
    build_shared_train_val,
    build_vanilla,
    partition_corpus,
)
from .corpus import (
    Corpus,
    CorpusStats,
    EntityRecord,
    corpus_stats,
    filter_by_category,
    load_corpus,
    save_corpus,
)
from .evaluation import (
    EvalReport,
    ScoreResult,
    SweepCurve,
    render_report,
    run_findings_1,
    run_findings_2,
    run_findings_3,
    score,
)
from .features import IdfTable, PairFeatures, featurize, fit_idf
from .matchers import MatcherModel, TrainConfig, predict, train
from .pairs import LabeledPair, PairSet, matched_pairs, sample_mismatched
from .synth import PerturbConfig, SynthConfig, describe, generate
from .util import ContractError, ToolkitError, ValidationError

__version__ = "0.1.0"

__all__ = [
    "AuditReport",
    "BenchmarkBundle",
    "BuildContext",
    "ContractError",
    "Corpus",
    "CorpusStats",
    "EntityRecord",
    "EvalReport",
    "GenConfig",
    "IdfTable",
    "LabeledPair",
    "MatcherModel",
    "PARADIGMS",
    "PairFeatures",
    "PairSet",
    "PerturbConfig",
    "ScoreResult",
    "SplitPlan",
    "SweepCurve",
    "SynthConfig",
    "ToolkitError",
    "TrainConfig",
    "ValidationError",
    "audit",
    "audit_external",
    "build_all",
    "build_cfm_test",
    "build_om_test",
    "build_rl_test",
    "build_shared_train_val",
    "build_vanilla",
    "corpus_stats",
    "describe",
    "featurize",
    "filter_by_category",
    "fit_idf",
    "generate",
    "load_corpus",
    "matched_pairs",
    "partition_corpus",
    "predict",
    "render_report",
    "run_findings_1",
    "run_findings_2",
    "run_findings_3",
    "sample_mismatched",
    "save_corpus",
    "score",
    "train",
]
