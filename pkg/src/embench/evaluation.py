"""Metrics, imbalance sweeps, and trend-reproduction experiments.

The matched class is the positive class throughout. score() keeps exact
rational arithmetic until the final division. The three canned experiments
mirror the benchmark study design: (1) one matcher across the four
paradigms per category, (2) F1 versus the mismatched:matched ratio k, and
(3) text/visual/fused matchers under balanced and imbalanced test sets.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .builder import PARADIGMS, BuildContext, SplitPlan, plan_for_category
from .corpus import Corpus, corpus_stats, filter_by_category
from .matchers import MatcherModel, PairScorer, TrainConfig, train
from .pairs import MATCHED, PairSet
from .util import TOOLKIT_VERSION, ValidationError, atomic_write_text, derive_seed, json_dumps_stable

DEFAULT_SWEEP_KS = (3.0, 10.0, 30.0, 100.0)


@dataclass
class ScoreResult:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    tn: int
    degenerate: bool = False

    @property
    def n_pairs(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def score_counts(tp: int, fp: int, fn: int, tn: int) -> ScoreResult:
    """Precision/recall/F1 from confusion counts, exact until the end."""
    precision = Fraction(tp, tp + fp) if tp + fp else Fraction(0)
    recall = Fraction(tp, tp + fn) if tp + fn else Fraction(0)
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall > 0
        else Fraction(0)
    )
    degenerate = (tp + fp == 0) and (tp + fn == 0)
    return ScoreResult(
        precision=float(precision),
        recall=float(recall),
        f1=float(f1),
        tp=tp,
        fp=fp,
        fn=fn,
        tn=tn,
        degenerate=degenerate,
    )


def score(
    decisions: Mapping[tuple[str, str], bool] | Sequence[bool] | np.ndarray,
    gold: PairSet,
) -> ScoreResult:
    """Score binary decisions against a gold PairSet.

    `decisions` is either a mapping from canonical (left_id, right_id) keys
    to booleans covering exactly the gold pairs, or a boolean sequence
    aligned with gold.pairs.
    """
    if isinstance(decisions, Mapping):
        keys = gold.key_set()
        extra = set(decisions) - keys
        missing = keys - set(decisions)
        if extra:
            raise ValidationError(f"decisions cover {len(extra)} pair(s) not in gold")
        if missing:
            raise ValidationError(f"decisions missing for {len(missing)} gold pair(s)")
        dec = [bool(decisions[p.key]) for p in gold.pairs]
    else:
        dec = [bool(d) for d in decisions]
        if len(dec) != len(gold.pairs):
            raise ValidationError(
                f"got {len(dec)} decisions for {len(gold.pairs)} gold pairs"
            )
    tp = fp = fn = tn = 0
    for p, d in zip(gold.pairs, dec):
        positive = p.label == MATCHED
        if d and positive:
            tp += 1
        elif d and not positive:
            fp += 1
        elif not d and positive:
            fn += 1
        else:
            tn += 1
    return score_counts(tp, fp, fn, tn)


@dataclass
class EvalCell:
    paradigm: str
    category: str
    matcher: str
    k: float
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    tn: int
    flags: list[str] = field(default_factory=list)


@dataclass
class EvalReport:
    cells: list[EvalCell]
    config: dict = field(default_factory=dict)

    def cell(self, paradigm: str, category: str = "all", matcher: str = "text", k: float | None = None) -> EvalCell:
        for c in self.cells:
            if (
                c.paradigm == paradigm
                and c.category == category
                and c.matcher == matcher
                and (k is None or c.k == k)
            ):
                return c
        raise KeyError((paradigm, category, matcher, k))

    def to_json_obj(self) -> dict:
        return {
            "kind": "eval_report",
            "toolkit_version": TOOLKIT_VERSION,
            "config": self.config,
            "cells": [asdict(c) for c in self.cells],
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "EvalReport":
        return cls(
            cells=[EvalCell(**c) for c in obj["cells"]],
            config=obj.get("config", {}),
        )


@dataclass
class SweepPoint:
    k: float
    f1_by_paradigm: dict[str, float]
    flags: list[str] = field(default_factory=list)


@dataclass
class SweepCurve:
    axis: str  # "test_ratio" | "train_and_test_ratio"
    points: list[SweepPoint]
    seeds: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def validate(self) -> None:
        ks = [p.k for p in self.points]
        if any(b <= a for a, b in zip(ks, ks[1:])):
            raise ValidationError("sweep k values must be strictly increasing")

    def to_json_obj(self) -> dict:
        return {
            "kind": "sweep_curve",
            "toolkit_version": TOOLKIT_VERSION,
            "axis": self.axis,
            "seeds": self.seeds,
            "config": self.config,
            "points": [asdict(p) for p in self.points],
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "SweepCurve":
        return cls(
            axis=obj["axis"],
            points=[SweepPoint(**p) for p in obj["points"]],
            seeds=obj.get("seeds", {}),
            config=obj.get("config", {}),
        )


def _train_seeded(kind: str, ctx: BuildContext, corpus: Corpus, hyper: TrainConfig, scope: str) -> MatcherModel:
    seeded = replace(hyper, seed=derive_seed(ctx.plan.seed, f"train:{kind}:{scope}"))
    return train(kind, ctx.train, ctx.val, corpus, seeded)


def _eval_cell(
    scorer: PairScorer, test: PairSet, paradigm: str, category: str, matcher: str, k: float
) -> EvalCell:
    _, decisions = scorer.score_pairs(test.pairs)
    res = score(decisions, test)
    return EvalCell(
        paradigm=paradigm,
        category=category,
        matcher=matcher,
        k=k,
        precision=res.precision,
        recall=res.recall,
        f1=res.f1,
        tp=res.tp,
        fp=res.fp,
        fn=res.fn,
        tn=res.tn,
        flags=list(test.warnings),
    )


def _scoped_contexts(corpus: Corpus, plan: SplitPlan, per_category: bool):
    yield "all", corpus, BuildContext(corpus, plan)
    if per_category:
        for category in sorted(corpus.categories()):
            scoped = filter_by_category(corpus, category)
            scoped_plan = plan_for_category(plan, scoped, corpus, category)
            yield category, scoped, BuildContext(scoped, scoped_plan)


def run_findings_1(
    corpus: Corpus,
    plan: SplitPlan,
    hyper: TrainConfig | None = None,
    per_category: bool = True,
) -> EvalReport:
    """Train the text matcher once per scope on the shared train/val sets and
    evaluate it on all four paradigm test sets at the plan's test ratio."""
    hyper = hyper or TrainConfig()
    cells: list[EvalCell] = []
    for scope, scoped_corpus, ctx in _scoped_contexts(corpus, plan, per_category):
        model = _train_seeded("text", ctx, scoped_corpus, hyper, scope)
        scorer = PairScorer(model, scoped_corpus)
        for paradigm in PARADIGMS:
            test = ctx.test_set(paradigm)
            cells.append(_eval_cell(scorer, test, paradigm, scope, "text", ctx.plan.k_test))
    return EvalReport(
        cells=cells,
        config={
            "experiment": "findings_1",
            "plan": plan.to_json_obj(),
            "corpus_hash": corpus.content_hash(),
            "hyper": hyper.to_json_obj(),
        },
    )


def run_findings_2(
    corpus: Corpus,
    plan: SplitPlan,
    ks: Sequence[float] = DEFAULT_SWEEP_KS,
    axis: str = "test_ratio",
    hyper: TrainConfig | None = None,
    kind: str = "text",
) -> SweepCurve:
    """F1 versus mismatched:matched ratio, one curve per paradigm.

    axis="test_ratio" keeps the training ratio fixed and regenerates only
    the test sets; axis="train_and_test_ratio" rebuilds train/val at each k
    and retrains. Mismatched pairs are re-sampled independently per k.
    """
    if axis not in ("test_ratio", "train_and_test_ratio"):
        raise ValidationError(f"unknown sweep axis {axis!r}")
    ks = [float(k) for k in ks]
    if not ks or any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValidationError("ks must be non-empty and strictly increasing")
    hyper = hyper or TrainConfig()

    points: list[SweepPoint] = []
    if axis == "test_ratio":
        ctx = BuildContext(corpus, plan)
        model = _train_seeded(kind, ctx, corpus, hyper, "all")
        scorer = PairScorer(model, corpus)
        for k in ks:
            f1s: dict[str, float] = {}
            flags: list[str] = []
            for paradigm in PARADIGMS:
                test = ctx.test_set(paradigm, k)
                cell = _eval_cell(scorer, test, paradigm, "all", kind, k)
                f1s[paradigm] = cell.f1
                flags.extend(cell.flags)
            points.append(SweepPoint(k=k, f1_by_paradigm=f1s, flags=flags))
    else:
        for k in ks:
            plan_k = replace(plan, k_train=k, k_test=k)
            ctx = BuildContext(corpus, plan_k)
            model = _train_seeded(kind, ctx, corpus, hyper, "all")
            scorer = PairScorer(model, corpus)
            f1s = {}
            flags = []
            for paradigm in PARADIGMS:
                test = ctx.test_set(paradigm, k)
                cell = _eval_cell(scorer, test, paradigm, "all", kind, k)
                f1s[paradigm] = cell.f1
                flags.extend(cell.flags)
            points.append(SweepPoint(k=k, f1_by_paradigm=f1s, flags=flags))

    curve = SweepCurve(
        axis=axis,
        points=points,
        seeds={"plan_seed": plan.seed},
        config={
            "experiment": "findings_2",
            "plan": plan.to_json_obj(),
            "corpus_hash": corpus.content_hash(),
            "hyper": hyper.to_json_obj(),
            "kind": kind,
            "ks": ks,
        },
    )
    curve.validate()
    return curve


def run_findings_3(
    corpus: Corpus,
    plan: SplitPlan,
    ks: Sequence[float] = (3.0, 100.0),
    hyper: TrainConfig | None = None,
) -> EvalReport:
    """Text, visual, and fused matchers across the four paradigms under
    balanced and imbalanced test ratios. Needs full image coverage."""
    stats = corpus_stats(corpus)
    if stats.image_coverage < 1.0:
        raise ValidationError(
            f"multi-modal evaluation needs image_vec on every record "
            f"(coverage {stats.image_coverage:.1%})"
        )
    hyper = hyper or TrainConfig()
    ks = [float(k) for k in ks]
    ctx = BuildContext(corpus, plan)
    cells: list[EvalCell] = []
    tests = {k: {p: ctx.test_set(p, k) for p in PARADIGMS} for k in ks}
    for kind in ("text", "visual", "fused"):
        model = _train_seeded(kind, ctx, corpus, hyper, "all")
        scorer = PairScorer(model, corpus)
        for k in ks:
            for paradigm in PARADIGMS:
                cells.append(
                    _eval_cell(scorer, tests[k][paradigm], paradigm, "all", kind, k)
                )
    return EvalReport(
        cells=cells,
        config={
            "experiment": "findings_3",
            "plan": plan.to_json_obj(),
            "corpus_hash": corpus.content_hash(),
            "hyper": hyper.to_json_obj(),
            "ks": ks,
        },
    )


# -- rendering --


def _eval_report_text(report: EvalReport) -> str:
    lines: list[str] = []
    ks = sorted({c.k for c in report.cells})
    paradigms = [p for p in PARADIGMS if any(c.paradigm == p for c in report.cells)]
    for k in ks:
        lines.append(f"F1 (%) at mismatched:matched = {k:g}:1")
        rows = sorted(
            {(c.category, c.matcher) for c in report.cells if c.k == k},
            key=lambda t: ("" if t[0] == "all" else t[0], t[1]),
        )
        head = f"{'category':<14}{'matcher':<10}" + "".join(f"{p:>10}" for p in paradigms)
        lines.append(head)
        for category, matcher in rows:
            vals = []
            for p in paradigms:
                try:
                    cell = report.cell(p, category, matcher, k)
                    vals.append(f"{cell.f1 * 100:>10.2f}")
                except KeyError:
                    vals.append(f"{'-':>10}")
            lines.append(f"{category:<14}{matcher:<10}" + "".join(vals))
        lines.append("")
    return "\n".join(lines).rstrip() + "\n"


def _sweep_text(curve: SweepCurve) -> str:
    paradigms = [p for p in PARADIGMS if any(p in pt.f1_by_paradigm for pt in curve.points)]
    lines = [f"F1 (%) vs mismatched:matched ratio ({curve.axis})"]
    lines.append(f"{'k':>8}" + "".join(f"{p:>10}" for p in paradigms))
    for pt in curve.points:
        row = f"{pt.k:>8g}" + "".join(
            f"{pt.f1_by_paradigm.get(p, float('nan')) * 100:>10.2f}" for p in paradigms
        )
        if pt.flags:
            row += "  [flagged]"
        lines.append(row)
    return "\n".join(lines) + "\n"


def _eval_report_csv(report: EvalReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["paradigm", "category", "matcher", "k", "precision", "recall", "f1", "tp", "fp", "fn", "tn"])
    for c in report.cells:
        w.writerow([c.paradigm, c.category, c.matcher, c.k, c.precision, c.recall, c.f1, c.tp, c.fp, c.fn, c.tn])
    return buf.getvalue()


def _sweep_csv(curve: SweepCurve) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["axis", "k", "paradigm", "f1", "flagged"])
    for pt in curve.points:
        for paradigm, f1 in sorted(pt.f1_by_paradigm.items()):
            w.writerow([curve.axis, pt.k, paradigm, f1, bool(pt.flags)])
    return buf.getvalue()


def render_report(
    obj: EvalReport | SweepCurve, format: str = "json", path: str | Path | None = None
) -> str:
    """Render a report or sweep to json/text/csv; optionally write it."""
    if format == "json":
        text = json_dumps_stable(obj.to_json_obj()) + "\n"
    elif format == "text":
        text = _eval_report_text(obj) if isinstance(obj, EvalReport) else _sweep_text(obj)
    elif format == "csv":
        text = _eval_report_csv(obj) if isinstance(obj, EvalReport) else _sweep_csv(obj)
    else:
        raise ValidationError(f"unknown report format {format!r}")
    if path is not None:
        atomic_write_text(path, text)
    return text


def load_report(path: str | Path) -> EvalReport | SweepCurve:
    import json as _json

    obj = _json.loads(Path(path).read_text(encoding="utf-8"))
    if obj.get("kind") == "sweep_curve" or "points" in obj:
        return SweepCurve.from_json_obj(obj)
    return EvalReport.from_json_obj(obj)
