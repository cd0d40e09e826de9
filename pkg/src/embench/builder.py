"""Benchmark assembly: one corpus partition drives four paradigm bundles.

Paradigms:
  vanilla - pair-level random split over the retained training records;
            test pairs reuse the same (seen) record population.
  rl      - record linking: each test pair joins one held-out record of a
            training cluster with one training record.
  cfm     - cluster-focused matching: test pairs join held-out records of
            training clusters (unseen records, seen clusters).
  om      - open matching: test pairs drawn entirely from held-out clusters.

All four bundles share byte-identical train/val sets. Matched pairs are
apportioned across splits by the split ratio; mismatched pairs are sampled
to hit round(k * n_matched) exactly per split, with a recorded shortfall
warning when the cross-cluster pair universe runs out. Every random choice
flows from the plan seed through named derivations, so any test set can be
regenerated independently (e.g. at a different imbalance ratio) without
disturbing the others.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .corpus import Corpus, dumps_jsonl, loads_jsonl
from .pairs import (
    MATCHED,
    MISMATCHED,
    LabeledPair,
    PairSet,
    PairUniverse,
    apportion_pairs,
    interleave,
    matched_pairs,
    sample_mismatched_keys,
)
from .util import (
    TOOLKIT_VERSION,
    ValidationError,
    atomic_write_text,
    derive_seed,
    json_dumps_stable,
    largest_remainder_split,
    round_half_up,
    sha256_bytes,
)

PARADIGMS = ("vanilla", "rl", "cfm", "om")

_AUTO_FAMILY_BIAS = 0.5


def _rng(seed: int, label: str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, label))


def _klabel(k: float) -> str:
    return f"{k:g}"


@dataclass
class GenConfig:
    """Parameters of the vanilla construction over one corpus."""

    seed: int
    mismatched_matched_ratio: float = 3.0
    split_ratio: tuple[float, float, float] = (0.6, 0.2, 0.2)
    max_matched_per_cluster: int | None = None
    family_bias: float | None = None  # None: 0.5 when hard-negative families are derivable

    def validate(self) -> None:
        if self.mismatched_matched_ratio < 0:
            raise ValidationError("mismatched:matched ratio must be non-negative")
        if len(self.split_ratio) != 3 or any(r <= 0 for r in self.split_ratio):
            raise ValidationError("split_ratio must be three positive parts")
        if self.family_bias is not None and not 0.0 <= self.family_bias <= 1.0:
            raise ValidationError("family_bias must be in [0,1]")


@dataclass
class SplitPlan:
    seed: int
    n_train_clusters: int = 250
    n_holdout_clusters: int = 100
    holdout_record_fraction: float = 0.4
    k_train: float = 3.0
    k_test: float = 3.0
    split_ratio: tuple[float, float, float] = (0.6, 0.2, 0.2)
    family_bias: float | None = None

    def validate(self, corpus: Corpus | None = None) -> None:
        if self.n_train_clusters <= 0 or self.n_holdout_clusters <= 0:
            raise ValidationError("cluster counts must be positive")
        if not 0.0 < self.holdout_record_fraction < 1.0:
            raise ValidationError("holdout_record_fraction must be in (0,1)")
        if self.k_train < 0 or self.k_test < 0:
            raise ValidationError("ratios must be non-negative")
        if len(self.split_ratio) != 3 or any(r <= 0 for r in self.split_ratio):
            raise ValidationError("split_ratio must be three positive parts")
        if self.family_bias is not None and not 0.0 <= self.family_bias <= 1.0:
            raise ValidationError("family_bias must be in [0,1]")
        if corpus is not None:
            need = self.n_train_clusters + self.n_holdout_clusters
            if need > corpus.n_clusters:
                raise ValidationError(
                    f"plan needs {need} clusters but corpus has {corpus.n_clusters}"
                )

    def to_json_obj(self) -> dict:
        obj = asdict(self)
        obj["split_ratio"] = list(self.split_ratio)
        return obj

    @classmethod
    def from_json_obj(cls, obj: dict) -> "SplitPlan":
        data = dict(obj)
        data["split_ratio"] = tuple(data.get("split_ratio", (0.6, 0.2, 0.2)))
        return cls(**data)


@dataclass
class Partition:
    """Cluster/record assignment underlying one benchmark family."""

    train_clusters: list[str]
    holdout_clusters: list[str]
    train_records: dict[str, list[str]]
    heldout_records: dict[str, list[str]]
    warnings: list[str] = field(default_factory=list)

    def to_json_obj(self) -> dict:
        return {
            "train_clusters": self.train_clusters,
            "holdout_clusters": self.holdout_clusters,
            "train_records": self.train_records,
            "heldout_records": self.heldout_records,
        }

    def content_hash(self) -> str:
        return sha256_bytes(json_dumps_stable(self.to_json_obj(), indent=None).encode())


def partition_corpus(corpus: Corpus, plan: SplitPlan) -> Partition:
    """Sample training and holdout clusters, then hold out a fraction of each
    training cluster's records as unseen records."""
    plan.validate(corpus)
    cluster_ids = sorted(corpus.clusters)
    rng = _rng(plan.seed, "partition")
    need = plan.n_train_clusters + plan.n_holdout_clusters
    perm = rng.permutation(len(cluster_ids))
    chosen = [cluster_ids[int(i)] for i in perm[:need]]
    holdout = sorted(chosen[: plan.n_holdout_clusters])
    train = sorted(chosen[plan.n_holdout_clusters :])

    warnings: list[str] = []
    train_records: dict[str, list[str]] = {}
    heldout_records: dict[str, list[str]] = {}
    singletons = 0
    for cluster_id in train:
        records = corpus.clusters[cluster_id]
        m = len(records)
        if m == 1:
            singletons += 1
            train_records[cluster_id] = [records[0].record_id]
            heldout_records[cluster_id] = []
            continue
        # round before ceil so 0.4 * 15 does not creep past 6.0 in floats
        h = math.ceil(round(plan.holdout_record_fraction * m, 9))
        h = max(1, min(h, m - 1))
        picks = set(int(i) for i in rng.permutation(m)[:h])
        heldout_records[cluster_id] = [
            rec.record_id for i, rec in enumerate(records) if i in picks
        ]
        train_records[cluster_id] = [
            rec.record_id for i, rec in enumerate(records) if i not in picks
        ]
    if singletons:
        warnings.append(
            f"{singletons} single-record training cluster(s): retained with zero holdout"
        )
    return Partition(
        train_clusters=train,
        holdout_clusters=holdout,
        train_records=train_records,
        heldout_records=heldout_records,
        warnings=warnings,
    )


def _resolve_family_bias(corpus: Corpus, requested: float | None) -> float:
    if requested is not None:
        return requested
    return _AUTO_FAMILY_BIAS if corpus.family_map() is not None else 0.0


def _assemble(matched: list[LabeledPair], mismatched: list[LabeledPair], seed: int, label: str) -> PairSet:
    pairs = interleave(matched, mismatched, _rng(seed, f"assemble:{label}"))
    return PairSet(pairs=pairs)


class _VanillaSplitter:
    """Ratio-controlled three-way split of the pairs over one record pool.

    Matched pairs are apportioned into train/val/test shares; each share is
    padded with exactly round(k * share) freshly sampled mismatched pairs,
    pairwise disjoint across shares. The test share can be regenerated at
    any ratio without touching train/val.
    """

    def __init__(
        self,
        corpus: Corpus,
        seed: int,
        k_train: float,
        ratios: tuple[float, float, float],
        family_bias: float,
        cap: int | None = None,
    ):
        self.seed = seed
        self.family_bias = family_bias
        self.universe = PairUniverse(corpus)
        self.warnings: list[str] = []
        matched_all = matched_pairs(corpus, cap=cap, seed=derive_seed(seed, "matched:shared"))
        parts = apportion_pairs(matched_all.pairs, tuple(ratios), _rng(seed, "apportion:shared"))
        self.m_train, self.m_val, self.m_test = parts

        q_train = round_half_up(k_train * len(self.m_train))
        q_val = round_half_up(k_train * len(self.m_val))
        keys, warns = sample_mismatched_keys(
            self.universe,
            q_train + q_val,
            _rng(seed, "mismatched:shared"),
            family_bias=family_bias,
        )
        self.warnings.extend(f"train/val: {w}" for w in warns)
        perm = _rng(seed, "assign:shared").permutation(keys.shape[0])
        if keys.shape[0] >= q_train + q_val:
            sizes = [q_train, q_val]
        else:
            sizes = largest_remainder_split(keys.shape[0], (max(q_train, 1), max(q_val, 1)))
        tr_keys = np.sort(keys[perm[: sizes[0]]])
        va_keys = np.sort(keys[perm[sizes[0] : sizes[0] + sizes[1]]])
        self.tv_keys = keys
        self.train = _assemble(
            self.m_train, self.universe.pairs_from_keys(tr_keys, MISMATCHED), seed, "train"
        )
        self.val = _assemble(
            self.m_val, self.universe.pairs_from_keys(va_keys, MISMATCHED), seed, "val"
        )

    def test_at(self, k: float) -> PairSet:
        q = round_half_up(k * len(self.m_test))
        keys, warns = sample_mismatched_keys(
            self.universe,
            q,
            _rng(self.seed, f"mismatched:vanilla:k={_klabel(k)}"),
            family_bias=self.family_bias,
            exclude=self.tv_keys,
        )
        mismatched = self.universe.pairs_from_keys(keys, MISMATCHED)
        ps = _assemble(self.m_test, mismatched, self.seed, f"vanilla:k={_klabel(k)}")
        ps.warnings = [f"vanilla test: {w}" for w in warns]
        return ps


class BuildContext:
    """Everything derivable from (corpus, plan): the partition, the shared
    train/val sets, and regenerable paradigm test sets."""

    def __init__(self, corpus: Corpus, plan: SplitPlan):
        plan.validate(corpus)
        self.corpus = corpus
        self.plan = plan
        self.corpus_hash = corpus.content_hash()
        self.partition = partition_corpus(corpus, plan)
        self.family_bias = _resolve_family_bias(corpus, plan.family_bias)
        self.warnings: list[str] = list(self.partition.warnings)

        retained_ids = [
            r for c in self.partition.train_clusters for r in self.partition.train_records[c]
        ]
        self.heldout_ids = [
            r for c in self.partition.train_clusters for r in self.partition.heldout_records[c]
        ]
        self.retained_corpus = corpus.subset(retained_ids)

        self._splitter = _VanillaSplitter(
            self.retained_corpus,
            plan.seed,
            plan.k_train,
            tuple(plan.split_ratio),
            self.family_bias,
        )
        self.warnings.extend(self._splitter.warnings)
        self.train = self._splitter.train
        self.val = self._splitter.val
        self.train.source_corpus_hash = self.corpus_hash
        self.val.source_corpus_hash = self.corpus_hash

        self.seen_ids = self.train.record_ids() | self.val.record_ids()
        self._om_corpus = corpus.subset(
            [r.record_id for c in self.partition.holdout_clusters for r in corpus.clusters[c]]
        )
        cfm_ids: list[str] = []
        unseen_cluster_count = 0
        few_heldout = 0
        for c in self.partition.train_clusters:
            if not any(r in self.seen_ids for r in self.partition.train_records[c]):
                unseen_cluster_count += 1
                continue
            held = self.partition.heldout_records[c]
            if len(held) < 2:
                few_heldout += 1
            cfm_ids.extend(held)
        if unseen_cluster_count:
            self.warnings.append(
                f"{unseen_cluster_count} training cluster(s) have no record in train/val pairs; "
                "their held-out records are excluded from cfm/rl"
            )
        if few_heldout:
            self.warnings.append(
                f"{few_heldout} training cluster(s) have <2 held-out records and add no cfm matched pair"
            )
        self._cfm_corpus = corpus.subset(cfm_ids)
        self._rl = _RlPools(self, anchor_ids=cfm_ids)

    def test_set(self, paradigm: str, k: float | None = None) -> PairSet:
        k = self.plan.k_test if k is None else float(k)
        if paradigm == "vanilla":
            ps = self._splitter.test_at(k)
        elif paradigm == "om":
            ps = self._simple_test("om", self._om_corpus, k)
        elif paradigm == "cfm":
            ps = self._simple_test("cfm", self._cfm_corpus, k)
        elif paradigm == "rl":
            ps = self._rl.test_set(k)
        else:
            raise ValidationError(f"unknown paradigm {paradigm!r}")
        ps.source_corpus_hash = self.corpus_hash
        return ps

    def _simple_test(self, paradigm: str, sub_corpus: Corpus, k: float) -> PairSet:
        plan = self.plan
        matched = matched_pairs(sub_corpus, seed=derive_seed(plan.seed, f"matched:{paradigm}"))
        q = round_half_up(k * len(matched.pairs))
        warns: list[str] = []
        mismatched: list[LabeledPair] = []
        if sub_corpus.n_clusters >= 2:
            universe = PairUniverse(sub_corpus)
            keys, warns = sample_mismatched_keys(
                universe,
                q,
                _rng(plan.seed, f"mismatched:{paradigm}:k={_klabel(k)}"),
                family_bias=self.family_bias,
            )
            mismatched = universe.pairs_from_keys(keys, MISMATCHED)
        elif q:
            warns = [f"fewer than 2 clusters available for {paradigm} mismatched pairs"]
        ps = _assemble(matched.pairs, mismatched, plan.seed, f"{paradigm}:k={_klabel(k)}")
        ps.warnings = [f"{paradigm} test: {w}" for w in warns]
        return ps

    def bundle(self, paradigm: str, category: str = "all", k: float | None = None) -> "BenchmarkBundle":
        k_test = self.plan.k_test if k is None else float(k)
        test = self.test_set(paradigm, k_test)
        used = self.train.record_ids() | self.val.record_ids() | test.record_ids()
        records = self.corpus.subset(used)
        counts = {
            name: {"matched": ps.n_matched, "mismatched": ps.n_mismatched}
            for name, ps in (("train", self.train), ("val", self.val), ("test", test))
        }
        manifest = {
            "toolkit_version": TOOLKIT_VERSION,
            "paradigm": paradigm,
            "category": category,
            "plan": self.plan.to_json_obj(),
            "k_test": k_test,
            "corpus_hash": self.corpus_hash,
            "partition_hash": self.partition.content_hash(),
            "family_bias": self.family_bias,
            "counts": counts,
            "warnings": self.warnings + test.warnings,
        }
        return BenchmarkBundle(
            paradigm=paradigm,
            train=self.train,
            val=self.val,
            test=test,
            records=records,
            manifest=manifest,
        )


class _RlPools:
    """Record-linking pools: held-out anchors joined to seen training records."""

    def __init__(self, ctx: "BuildContext", anchor_ids: list[str]):
        self.ctx = ctx
        partner_ids = sorted(
            r
            for c in ctx.partition.train_clusters
            for r in ctx.partition.train_records[c]
            if r in ctx.seen_ids
        )
        anchor_ids = sorted(anchor_ids)
        self.universe = PairUniverse(ctx.corpus.subset(anchor_ids + partner_ids))
        u = self.universe
        self.anchors = np.array(sorted(u.index[r] for r in anchor_ids), dtype=np.int64)
        partner_rows = np.array(sorted(u.index[r] for r in partner_ids), dtype=np.int64)
        order = np.argsort(u.cluster_idx[partner_rows], kind="stable")
        self.partners = partner_rows[order]
        n_clusters = len(u.cluster_ids)
        self.partner_counts = np.bincount(u.cluster_idx[self.partners], minlength=n_clusters)
        self.partner_indptr = np.zeros(n_clusters + 1, dtype=np.int64)
        np.cumsum(self.partner_counts, out=self.partner_indptr[1:])
        self.anchor_cluster = (
            u.cluster_idx[self.anchors] if self.anchors.size else np.empty(0, np.int64)
        )
        self.n_eligible = (
            int(np.sum(self.partner_counts[self.anchor_cluster] > 0)) if self.anchors.size else 0
        )
        skipped = self.anchors.shape[0] - self.n_eligible
        if skipped:
            ctx.warnings.append(
                f"rl: {skipped} held-out record(s) have no seen training partner in their cluster"
            )

    def _matched_universe(self) -> int:
        if not self.anchors.size:
            return 0
        return int(np.sum(self.partner_counts[self.anchor_cluster]))

    def _enumerate_matched(self) -> np.ndarray:
        u = self.universe
        keys: list[int] = []
        for a in self.anchors:
            c = int(u.cluster_idx[a])
            for p in self.partners[self.partner_indptr[c] : self.partner_indptr[c + 1]]:
                keys.append(min(int(a), int(p)) * u.n + max(int(a), int(p)))
        return np.array(sorted(keys), dtype=np.int64)

    def test_set(self, k: float) -> PairSet:
        ctx, u = self.ctx, self.universe
        plan = ctx.plan
        warnings: list[str] = []
        n_matched = self.n_eligible
        universe_size = self._matched_universe()
        rng = _rng(plan.seed, "matched:rl")
        if n_matched == 0:
            warnings.append("no anchor has a seen same-cluster training partner")
            matched_keys = np.empty(0, dtype=np.int64)
        elif n_matched > 0.4 * universe_size:
            all_keys = self._enumerate_matched()
            chosen = rng.choice(all_keys.shape[0], size=n_matched, replace=False)
            matched_keys = all_keys[np.sort(chosen)]
        else:
            matched_keys = self._reject_sample_matched(n_matched, rng)

        n_mis = round_half_up(k * matched_keys.shape[0])
        mis_keys, mis_warns = self._sample_mismatched(n_mis, k)
        warnings.extend(mis_warns)

        matched = u.pairs_from_keys(matched_keys, MATCHED)
        mismatched = u.pairs_from_keys(mis_keys, MISMATCHED)
        ps = _assemble(matched, mismatched, plan.seed, f"rl:k={_klabel(k)}")
        ps.warnings = [f"rl test: {w}" for w in warnings]
        return ps

    def _reject_sample_matched(self, n: int, rng: np.random.Generator) -> np.ndarray:
        u = self.universe
        eligible = self.anchors[self.partner_counts[self.anchor_cluster] > 0]
        drawn = np.empty(0, dtype=np.int64)
        tries = 0
        while drawn.shape[0] < n and tries < 64:
            tries += 1
            batch = max(1024, int((n - drawn.shape[0]) * 1.8))
            a = eligible[rng.integers(0, eligible.shape[0], size=batch)]
            c = u.cluster_idx[a]
            off = rng.integers(0, self.partner_counts[c])
            p = self.partners[self.partner_indptr[c] + off]
            keys = np.unique(u.encode(a, p))
            if drawn.size:
                keys = keys[~np.isin(keys, drawn, assume_unique=True)]
            if keys.shape[0] > n - drawn.shape[0]:
                chosen = rng.choice(keys.shape[0], size=n - drawn.shape[0], replace=False)
                keys = keys[np.sort(chosen)]
            drawn = np.sort(np.concatenate([drawn, keys]))
        return drawn

    def _sample_mismatched(self, n: int, k: float) -> tuple[np.ndarray, list[str]]:
        ctx, u = self.ctx, self.universe
        warnings: list[str] = []
        if n <= 0 or self.anchors.size == 0 or self.partners.size == 0:
            return np.empty(0, dtype=np.int64), warnings
        rng = _rng(ctx.plan.seed, f"mismatched:rl:k={_klabel(k)}")
        drawn = np.empty(0, dtype=np.int64)

        n_fam = round_half_up(ctx.family_bias * n)
        if n_fam > 0:
            fam_keys = self._enumerate_family_mismatched()
            take = min(n_fam, fam_keys.shape[0])
            if take:
                chosen = rng.choice(fam_keys.shape[0], size=take, replace=False)
                drawn = fam_keys[np.sort(chosen)]

        need = n - drawn.shape[0]
        total = int(np.sum(self.partners.shape[0] - self.partner_counts[self.anchor_cluster]))
        if need > 0:
            if need > 0.4 * max(total - drawn.shape[0], 1):
                all_keys = self._enumerate_all_mismatched()
                if drawn.size:
                    all_keys = all_keys[~np.isin(all_keys, drawn, assume_unique=True)]
                take = min(need, all_keys.shape[0])
                if take:
                    chosen = rng.choice(all_keys.shape[0], size=take, replace=False)
                    drawn = np.sort(np.concatenate([drawn, all_keys[np.sort(chosen)]]))
            else:
                tries = 0
                while n - drawn.shape[0] > 0 and tries < 64:
                    tries += 1
                    need = n - drawn.shape[0]
                    batch = max(1024, int(need * 1.8))
                    a = self.anchors[rng.integers(0, self.anchors.shape[0], size=batch)]
                    p = self.partners[rng.integers(0, self.partners.shape[0], size=batch)]
                    ok = u.cluster_idx[a] != u.cluster_idx[p]
                    keys = np.unique(u.encode(a[ok], p[ok]))
                    if drawn.size:
                        keys = keys[~np.isin(keys, drawn, assume_unique=True)]
                    if keys.shape[0] > need:
                        chosen = rng.choice(keys.shape[0], size=need, replace=False)
                        keys = keys[np.sort(chosen)]
                    drawn = np.sort(np.concatenate([drawn, keys]))
        if drawn.shape[0] < n:
            warnings.append(
                f"mismatched shortfall: requested {n}, anchor-partner universe yielded {drawn.shape[0]}"
            )
        return drawn, warnings

    def _enumerate_family_mismatched(self) -> np.ndarray:
        u = self.universe
        if not self.anchors.size or not self.partners.size:
            return np.empty(0, dtype=np.int64)
        fam_of_partner = u.family_idx[self.partners]
        cl_of_partner = u.cluster_idx[self.partners]
        keys: list[np.ndarray] = []
        for a in self.anchors:
            mask = (fam_of_partner == u.family_idx[a]) & (cl_of_partner != u.cluster_idx[a])
            if mask.any():
                p = self.partners[mask]
                keys.append(u.encode(np.full(p.shape[0], a, dtype=np.int64), p))
        if not keys:
            return np.empty(0, dtype=np.int64)
        return np.unique(np.concatenate(keys))

    def _enumerate_all_mismatched(self) -> np.ndarray:
        u = self.universe
        a = np.repeat(self.anchors, self.partners.shape[0])
        p = np.tile(self.partners, self.anchors.shape[0])
        ok = u.cluster_idx[a] != u.cluster_idx[p]
        return np.unique(u.encode(a[ok], p[ok]))


@dataclass
class BenchmarkBundle:
    paradigm: str
    train: PairSet
    val: PairSet
    test: PairSet
    records: Corpus
    manifest: dict

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        atomic_write_text(directory / "manifest.json", json_dumps_stable(self.manifest) + "\n")
        self.train.save(directory / "train.jsonl")
        self.val.save(directory / "val.jsonl")
        self.test.save(directory / "test.jsonl")
        atomic_write_text(directory / "records.jsonl", dumps_jsonl(self.records))

    @classmethod
    def load(cls, directory: str | Path) -> "BenchmarkBundle":
        directory = Path(directory)
        manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
        records = loads_jsonl((directory / "records.jsonl").read_text(encoding="utf-8"))
        bundle = cls(
            paradigm=manifest["paradigm"],
            train=PairSet.load(directory / "train.jsonl"),
            val=PairSet.load(directory / "val.jsonl"),
            test=PairSet.load(directory / "test.jsonl"),
            records=records,
            manifest=manifest,
        )
        for ps in (bundle.train, bundle.val, bundle.test):
            ps.source_corpus_hash = manifest.get("corpus_hash", "")
        return bundle


# -- module-level operations --


def build_shared_train_val(corpus: Corpus, plan: SplitPlan) -> tuple[PairSet, PairSet]:
    ctx = BuildContext(corpus, plan)
    return ctx.train, ctx.val


def build_om_test(corpus: Corpus, plan: SplitPlan, k: float | None = None) -> PairSet:
    return BuildContext(corpus, plan).test_set("om", k)


def build_cfm_test(corpus: Corpus, plan: SplitPlan, k: float | None = None) -> PairSet:
    return BuildContext(corpus, plan).test_set("cfm", k)


def build_rl_test(corpus: Corpus, plan: SplitPlan, k: float | None = None) -> PairSet:
    return BuildContext(corpus, plan).test_set("rl", k)


def build_all(corpus: Corpus, plan: SplitPlan, category: str = "all") -> dict[str, BenchmarkBundle]:
    ctx = BuildContext(corpus, plan)
    return {p: ctx.bundle(p, category=category) for p in PARADIGMS}


def build_vanilla(corpus: Corpus, cfg: GenConfig) -> BenchmarkBundle:
    """Classic three-way pair-level split over one whole corpus (no record
    holdout); records and clusters recur freely across the splits."""
    cfg.validate()
    family_bias = _resolve_family_bias(corpus, cfg.family_bias)
    splitter = _VanillaSplitter(
        corpus,
        cfg.seed,
        cfg.mismatched_matched_ratio,
        tuple(cfg.split_ratio),
        family_bias,
        cap=cfg.max_matched_per_cluster,
    )
    test = splitter.test_at(cfg.mismatched_matched_ratio)
    corpus_hash = corpus.content_hash()
    for ps in (splitter.train, splitter.val, test):
        ps.source_corpus_hash = corpus_hash
    counts = {
        name: {"matched": ps.n_matched, "mismatched": ps.n_mismatched}
        for name, ps in (("train", splitter.train), ("val", splitter.val), ("test", test))
    }
    manifest = {
        "toolkit_version": TOOLKIT_VERSION,
        "paradigm": "vanilla",
        "category": "all",
        "gen_config": {
            "seed": cfg.seed,
            "mismatched_matched_ratio": cfg.mismatched_matched_ratio,
            "split_ratio": list(cfg.split_ratio),
            "max_matched_per_cluster": cfg.max_matched_per_cluster,
            "family_bias": cfg.family_bias,
        },
        "corpus_hash": corpus_hash,
        "family_bias": family_bias,
        "counts": counts,
        "warnings": splitter.warnings + test.warnings,
    }
    return BenchmarkBundle(
        paradigm="vanilla",
        train=splitter.train,
        val=splitter.val,
        test=test,
        records=corpus.subset(
            splitter.train.record_ids() | splitter.val.record_ids() | test.record_ids()
        ),
        manifest=manifest,
    )


def plan_for_category(
    plan: SplitPlan, category_corpus: Corpus, full_corpus: Corpus, category: str
) -> SplitPlan:
    """Scale a plan to one category's cluster count, deterministically."""
    n_cat = category_corpus.n_clusters
    if n_cat < 2:
        raise ValidationError(f"category {category!r} has too few clusters to build benchmarks")
    scale = n_cat / max(full_corpus.n_clusters, 1)
    n_train = max(1, round_half_up(plan.n_train_clusters * scale))
    n_holdout = max(1, round_half_up(plan.n_holdout_clusters * scale))
    while n_train + n_holdout > n_cat and (n_train > 1 or n_holdout > 1):
        if n_train >= n_holdout and n_train > 1:
            n_train -= 1
        elif n_holdout > 1:
            n_holdout -= 1
    scaled = replace(
        plan,
        seed=derive_seed(plan.seed, f"category:{category}"),
        n_train_clusters=n_train,
        n_holdout_clusters=n_holdout,
    )
    scaled.validate(category_corpus)
    return scaled
