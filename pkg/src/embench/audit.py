"""Leakage audit: how much of a test set is already covered by training.

A record is "seen" when it occurs in at least one train or val pair (val
counts because model selection observes it); a cluster is seen when any of
its records is. Ratios are computed over distinct test records/clusters;
pair-level variants are reported alongside for transparency. Paradigm
contracts are exact set statements with no tolerance:

  om      seen_cluster_ratio == 0.0
  cfm     seen_cluster_ratio == 1.0 and seen_record_ratio == 0.0
  rl      every test pair has exactly one seen record
  vanilla no structural restriction
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .builder import BenchmarkBundle
from .corpus import load_corpus
from .pairs import MATCHED, PairSet
from .util import ContractError, ValidationError, atomic_write_text, json_dumps_stable

CONTRACT_PARADIGMS = ("vanilla", "rl", "cfm", "om")


@dataclass
class AuditReport:
    paradigm: str | None
    n_test_pairs: int
    n_test_records: int
    n_test_clusters: int
    seen_cluster_ratio: float
    seen_record_ratio: float
    exactly_one_seen_pair_fraction: float
    pair_both_seen_fraction: float
    pair_none_seen_fraction: float
    n_matched: int
    n_mismatched: int
    matched_mismatched_ratio: float | None
    per_split_counts: dict
    contract_passed: bool | None = None
    contract_failures: list[str] = field(default_factory=list)

    def to_json_obj(self) -> dict:
        return {
            "paradigm": self.paradigm,
            "test": {
                "n_pairs": self.n_test_pairs,
                "n_records": self.n_test_records,
                "n_clusters": self.n_test_clusters,
                "n_matched": self.n_matched,
                "n_mismatched": self.n_mismatched,
                "matched_mismatched_ratio": self.matched_mismatched_ratio,
            },
            "seen_cluster_ratio": self.seen_cluster_ratio,
            "seen_record_ratio": self.seen_record_ratio,
            "exactly_one_seen_pair_fraction": self.exactly_one_seen_pair_fraction,
            "pair_both_seen_fraction": self.pair_both_seen_fraction,
            "pair_none_seen_fraction": self.pair_none_seen_fraction,
            "per_split_counts": self.per_split_counts,
            "contract_passed": self.contract_passed,
            "contract_failures": self.contract_failures,
        }

    def text_table(self) -> str:
        ratio = (
            f"1:{self.matched_mismatched_ratio:g}"
            if self.matched_mismatched_ratio is not None
            else "n/a"
        )
        rows = [
            ("Matched:Mismatched", ratio),
            ("Seen Clusters", f"{self.seen_cluster_ratio:.1%}"),
            ("Seen Records", f"{self.seen_record_ratio:.1%}"),
            ("Pairs with exactly one seen record", f"{self.exactly_one_seen_pair_fraction:.1%}"),
            ("Pairs with both records seen", f"{self.pair_both_seen_fraction:.1%}"),
            ("Test pairs", str(self.n_test_pairs)),
        ]
        if self.contract_passed is not None:
            status = "pass" if self.contract_passed else "FAIL"
            rows.append((f"Contract ({self.paradigm})", status))
        width = max(len(r[0]) for r in rows)
        lines = [f"{name.ljust(width)}  {value}" for name, value in rows]
        if self.contract_failures:
            lines.extend(f"  - {f}" for f in self.contract_failures)
        return "\n".join(lines)


def contract_failures(paradigm: str, report: "AuditReport") -> list[str]:
    failures = []
    if paradigm == "om":
        if report.seen_cluster_ratio != 0.0:
            failures.append(
                f"om requires seen_cluster_ratio == 0.0, got {report.seen_cluster_ratio}"
            )
    elif paradigm == "cfm":
        if report.seen_cluster_ratio != 1.0:
            failures.append(
                f"cfm requires seen_cluster_ratio == 1.0, got {report.seen_cluster_ratio}"
            )
        if report.seen_record_ratio != 0.0:
            failures.append(
                f"cfm requires seen_record_ratio == 0.0, got {report.seen_record_ratio}"
            )
    elif paradigm == "rl":
        if report.exactly_one_seen_pair_fraction != 1.0:
            failures.append(
                "rl requires every test pair to have exactly one seen record, got "
                f"{report.exactly_one_seen_pair_fraction}"
            )
    elif paradigm != "vanilla":
        failures.append(f"unknown paradigm {paradigm!r}")
    return failures


def compute_audit(
    train: PairSet,
    val: PairSet,
    test: PairSet,
    cluster_of: Mapping[str, str],
    paradigm: str | None = None,
) -> AuditReport:
    """Pure set computation of the leakage statistics; raises on any pair
    that references a record absent from `cluster_of`."""
    for name, ps in (("train", train), ("val", val), ("test", test)):
        for rid in ps.record_ids():
            if rid not in cluster_of:
                raise ValidationError(f"{name} pair references unknown record {rid!r}")

    seen_records = train.record_ids() | val.record_ids()
    seen_clusters = {cluster_of[r] for r in seen_records}

    test_records = test.record_ids()
    test_clusters = {cluster_of[r] for r in test_records}

    n_rec = len(test_records)
    n_clu = len(test_clusters)
    seen_rec = sum(1 for r in test_records if r in seen_records)
    seen_clu = sum(1 for c in test_clusters if c in seen_clusters)

    one = both = none = 0
    for p in test.pairs:
        s = (p.left_id in seen_records) + (p.right_id in seen_records)
        if s == 2:
            both += 1
        elif s == 1:
            one += 1
        else:
            none += 1
    n_pairs = len(test.pairs)

    n_matched = test.n_matched
    n_mismatched = test.n_mismatched
    report = AuditReport(
        paradigm=paradigm,
        n_test_pairs=n_pairs,
        n_test_records=n_rec,
        n_test_clusters=n_clu,
        seen_cluster_ratio=(seen_clu / n_clu) if n_clu else 0.0,
        seen_record_ratio=(seen_rec / n_rec) if n_rec else 0.0,
        exactly_one_seen_pair_fraction=(one / n_pairs) if n_pairs else 0.0,
        pair_both_seen_fraction=(both / n_pairs) if n_pairs else 0.0,
        pair_none_seen_fraction=(none / n_pairs) if n_pairs else 0.0,
        n_matched=n_matched,
        n_mismatched=n_mismatched,
        matched_mismatched_ratio=(n_mismatched / n_matched) if n_matched else None,
        per_split_counts={
            "train": {"matched": train.n_matched, "mismatched": train.n_mismatched},
            "val": {"matched": val.n_matched, "mismatched": val.n_mismatched},
            "test": {"matched": n_matched, "mismatched": n_mismatched},
        },
    )
    if paradigm is not None:
        report.contract_failures = contract_failures(paradigm, report)
        report.contract_passed = not report.contract_failures
    return report


def audit(bundle: BenchmarkBundle) -> AuditReport:
    """Audit a bundle against its declared paradigm contract."""
    return compute_audit(
        bundle.train,
        bundle.val,
        bundle.test,
        bundle.records.cluster_of(),
        paradigm=bundle.paradigm,
    )


def audit_external(
    train_path: str | Path,
    val_path: str | Path,
    test_path: str | Path,
    records_path: str | Path,
    paradigm: str | None = None,
) -> AuditReport:
    """Same statistics for third-party split files (PairSet JSONL plus a
    record JSONL file)."""
    return compute_audit(
        PairSet.load(train_path),
        PairSet.load(val_path),
        PairSet.load(test_path),
        load_corpus(records_path).cluster_of(),
        paradigm=paradigm,
    )


def save_bundle_with_audit(bundle: BenchmarkBundle, directory: str | Path) -> AuditReport:
    """Audit, embed the report into the manifest, and persist the bundle.

    A bundle that violates its paradigm contract is never written.
    """
    report = audit(bundle)
    if report.contract_passed is False:
        raise ContractError(
            f"bundle {bundle.paradigm!r} violates its contract: "
            + "; ".join(report.contract_failures)
        )
    bundle.manifest["audit"] = report.to_json_obj()
    bundle.save(directory)
    return report


def save_report(report: AuditReport, path: str | Path, format: str = "json") -> None:
    if format == "json":
        atomic_write_text(path, json_dumps_stable(report.to_json_obj()) + "\n")
    elif format == "text":
        atomic_write_text(path, report.text_table() + "\n")
    else:
        raise ValidationError(f"unknown audit report format {format!r}")
