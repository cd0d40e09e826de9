"""Labeled record-pair construction: exhaustive matched pairs within
clusters and ratio-controlled mismatched sampling across clusters.

Pairs are canonical: (a, b) and (b, a) are the same pair, stored with
left_id < right_id. Mismatched sampling is without replacement (distinct
pairs); when the requested count approaches the size of the cross-cluster
pair universe, sampling switches from rejection to exhaustive enumeration
so it terminates, and shortfalls are reported as warnings instead of
errors.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import Corpus
from .util import ValidationError, round_half_up, sha256_bytes

MATCHED = "matched"
MISMATCHED = "mismatched"

# Above this fill fraction of the remaining universe, rejection sampling
# degenerates; enumerate and draw without replacement instead.
_ENUMERATE_THRESHOLD = 0.4


@dataclass(frozen=True)
class LabeledPair:
    left_id: str
    right_id: str
    label: str

    def __post_init__(self):
        if self.left_id == self.right_id:
            raise ValidationError(f"pair cannot join a record to itself: {self.left_id!r}")
        if self.label not in (MATCHED, MISMATCHED):
            raise ValidationError(f"invalid pair label {self.label!r}")
        if self.left_id > self.right_id:
            lo, hi = self.right_id, self.left_id
            object.__setattr__(self, "left_id", lo)
            object.__setattr__(self, "right_id", hi)

    @property
    def key(self) -> tuple[str, str]:
        return (self.left_id, self.right_id)


def make_pair(a: str, b: str, label: str) -> LabeledPair:
    """Canonical pair constructor; orders the two ids."""
    if a == b:
        raise ValidationError(f"pair cannot join a record to itself: {a!r}")
    left, right = (a, b) if a < b else (b, a)
    return LabeledPair(left, right, label)


@dataclass
class PairSet:
    pairs: list[LabeledPair]
    source_corpus_hash: str = ""
    warnings: list[str] = field(default_factory=list)

    @property
    def n_matched(self) -> int:
        return sum(1 for p in self.pairs if p.label == MATCHED)

    @property
    def n_mismatched(self) -> int:
        return sum(1 for p in self.pairs if p.label == MISMATCHED)

    def __len__(self) -> int:
        return len(self.pairs)

    def key_set(self) -> set[tuple[str, str]]:
        return {p.key for p in self.pairs}

    def record_ids(self) -> set[str]:
        ids: set[str] = set()
        for p in self.pairs:
            ids.add(p.left_id)
            ids.add(p.right_id)
        return ids

    def validate(self, corpus: Corpus | None = None) -> None:
        keys = self.key_set()
        if len(keys) != len(self.pairs):
            raise ValidationError("PairSet contains duplicate canonical pairs")
        if corpus is not None:
            cluster_of = corpus.cluster_of()
            for p in self.pairs:
                if p.left_id not in cluster_of or p.right_id not in cluster_of:
                    raise ValidationError(
                        f"pair references unknown record: {p.left_id!r} / {p.right_id!r}"
                    )
                same = cluster_of[p.left_id] == cluster_of[p.right_id]
                if same != (p.label == MATCHED):
                    raise ValidationError(
                        f"pair ({p.left_id!r}, {p.right_id!r}) labeled {p.label} but "
                        f"cluster co-membership says otherwise"
                    )

    def to_jsonl(self) -> str:
        lines = [
            json.dumps(
                {"left_id": p.left_id, "right_id": p.right_id, "label": p.label},
                ensure_ascii=False,
                separators=(",", ":"),
            )
            for p in self.pairs
        ]
        return "\n".join(lines) + ("\n" if lines else "")

    def content_hash(self) -> str:
        return sha256_bytes(self.to_jsonl().encode("utf-8"))

    @classmethod
    def from_jsonl(cls, text: str, source_corpus_hash: str = "") -> "PairSet":
        pairs = []
        for line_no, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                pairs.append(make_pair(obj["left_id"], obj["right_id"], obj["label"]))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValidationError(f"pair line {line_no}: {exc}") from None
        return cls(pairs=pairs, source_corpus_hash=source_corpus_hash)

    @classmethod
    def load(cls, path: str | Path) -> "PairSet":
        return cls.from_jsonl(Path(path).read_text(encoding="utf-8"))

    def save(self, path: str | Path) -> None:
        from .util import atomic_write_text

        atomic_write_text(path, self.to_jsonl())


class PairUniverse:
    """Vectorized index over a corpus for pair sampling.

    Records are numbered in canonical corpus order; an unordered index pair
    (i, j), i < j, is encoded as the int64 key i * n + j.
    """

    def __init__(self, corpus: Corpus):
        self.records = list(corpus.iter_records())
        self.n = len(self.records)
        self.record_ids = [r.record_id for r in self.records]
        self.index = {rid: i for i, rid in enumerate(self.record_ids)}
        cluster_ids = sorted(corpus.clusters)
        cluster_index = {c: i for i, c in enumerate(cluster_ids)}
        self.cluster_ids = cluster_ids
        self.cluster_idx = np.array(
            [cluster_index[r.cluster_id] for r in self.records], dtype=np.int64
        )
        cats = sorted({r.category for r in self.records})
        cat_index = {c: i for i, c in enumerate(cats)}
        self.category_idx = np.array(
            [cat_index[r.category] for r in self.records], dtype=np.int64
        )
        fam_map = corpus.family_map()
        if fam_map is None:
            # hard-negative grouping falls back to the category
            fam_keys = [r.category for r in self.records]
        else:
            fam_keys = [fam_map[r.cluster_id] for r in self.records]
        fams = sorted(set(fam_keys))
        fam_index = {f: i for i, f in enumerate(fams)}
        self.family_idx = np.array([fam_index[f] for f in fam_keys], dtype=np.int64)
        self.cluster_sizes = np.bincount(self.cluster_idx, minlength=len(cluster_ids))

    def encode(self, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        lo = np.minimum(i, j).astype(np.int64)
        hi = np.maximum(i, j).astype(np.int64)
        return lo * self.n + hi

    def decode(self, keys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return keys // self.n, keys % self.n

    def cross_cluster_universe_size(self, within_category: bool = False) -> int:
        total = self.n * (self.n - 1) // 2
        same_cluster = int(np.sum(self.cluster_sizes * (self.cluster_sizes - 1) // 2))
        if not within_category:
            return total - same_cluster
        cat_sizes = np.bincount(self.category_idx)
        within_cat = int(np.sum(cat_sizes * (cat_sizes - 1) // 2))
        # clusters are single-category here by usage; same-cluster pairs are within-category
        return within_cat - same_cluster

    def enumerate_cross_pairs(
        self, within_category: bool = False, same_family_only: bool = False
    ) -> np.ndarray:
        """All cross-cluster pair keys, ascending.

        The same-family variant enumerates per family group and stays cheap;
        the full variant is quadratic in record count (desk-scale only) and
        is reached only when sampling nearly exhausts the universe.
        """
        if same_family_only:
            keys: list[np.ndarray] = []
            order = np.argsort(self.family_idx, kind="stable")
            bounds = np.flatnonzero(np.diff(self.family_idx[order])) + 1
            for group in np.split(order, bounds):
                if group.shape[0] < 2:
                    continue
                i, j = np.triu_indices(group.shape[0], k=1)
                gi, gj = group[i], group[j]
                mask = self.cluster_idx[gi] != self.cluster_idx[gj]
                if within_category:
                    mask &= self.category_idx[gi] == self.category_idx[gj]
                if mask.any():
                    keys.append(self.encode(gi[mask], gj[mask]))
            if not keys:
                return np.empty(0, dtype=np.int64)
            return np.sort(np.concatenate(keys))
        i, j = np.triu_indices(self.n, k=1)
        mask = self.cluster_idx[i] != self.cluster_idx[j]
        if within_category:
            mask &= self.category_idx[i] == self.category_idx[j]
        return self.encode(i[mask], j[mask])

    def pairs_from_keys(self, keys: np.ndarray, label: str) -> list[LabeledPair]:
        i, j = self.decode(keys)
        return [make_pair(self.record_ids[int(a)], self.record_ids[int(b)], label) for a, b in zip(i, j)]


def matched_pairs(corpus: Corpus, cap: int | None = None, seed: int | None = None) -> PairSet:
    """All unordered within-cluster pairs, per cluster.

    With `cap`, each cluster contributes a uniform random subset of at most
    `cap` of its pairs (seeded, deterministic).
    """
    rng = np.random.default_rng(seed if seed is not None else 0)
    pairs: list[LabeledPair] = []
    for cluster_id in sorted(corpus.clusters):
        records = corpus.clusters[cluster_id]
        combos = list(itertools.combinations(range(len(records)), 2))
        if cap is not None and len(combos) > cap:
            chosen = rng.choice(len(combos), size=cap, replace=False)
            combos = [combos[int(c)] for c in sorted(chosen)]
        for a, b in combos:
            pairs.append(make_pair(records[a].record_id, records[b].record_id, MATCHED))
    return PairSet(pairs=pairs, source_corpus_hash=corpus.content_hash())


def _draw_without_replacement(
    rng: np.random.Generator, pool: np.ndarray, count: int
) -> np.ndarray:
    if count >= pool.shape[0]:
        return pool.copy()
    chosen = rng.choice(pool.shape[0], size=count, replace=False)
    return pool[np.sort(chosen)]


def sample_mismatched_keys(
    universe: PairUniverse,
    n: int,
    rng: np.random.Generator,
    within_category: bool = False,
    family_bias: float = 0.0,
    exclude: np.ndarray | None = None,
) -> tuple[np.ndarray, list[str]]:
    """Sample `n` distinct cross-cluster pair keys; returns (keys, warnings).

    A `family_bias` fraction of the draws comes from same-family
    cross-cluster pairs (hard negatives); when that sub-universe is too
    small the remainder falls back to the general universe. `exclude` is a
    sorted key array of pairs that must not be drawn.
    """
    warnings: list[str] = []
    if len(universe.cluster_ids) < 2:
        raise ValidationError("mismatched sampling needs at least 2 clusters")
    if n <= 0:
        return np.empty(0, dtype=np.int64), warnings
    excl = np.sort(exclude) if exclude is not None and exclude.size else np.empty(0, np.int64)

    drawn = np.empty(0, dtype=np.int64)

    n_fam = round_half_up(family_bias * n)
    if n_fam > 0:
        fam_keys = universe.enumerate_cross_pairs(
            within_category=within_category, same_family_only=True
        )
        if excl.size:
            fam_keys = fam_keys[~np.isin(fam_keys, excl, assume_unique=True)]
        take = min(n_fam, fam_keys.shape[0])
        drawn = _draw_without_replacement(rng, fam_keys, take)

    need = n - drawn.shape[0]
    total_universe = universe.cross_cluster_universe_size(within_category=within_category)
    available = total_universe - drawn.shape[0] - excl.size
    if need > 0 and available > 0:
        if need > _ENUMERATE_THRESHOLD * available:
            all_keys = universe.enumerate_cross_pairs(within_category=within_category)
            forbidden = np.concatenate([drawn, excl])
            if forbidden.size:
                all_keys = all_keys[~np.isin(all_keys, np.sort(forbidden))]
            extra = _draw_without_replacement(rng, all_keys, need)
            drawn = np.sort(np.concatenate([drawn, extra]))
        else:
            drawn = np.sort(drawn)
            tries = 0
            while need > 0 and tries < 64:
                tries += 1
                batch = max(1024, int(need * 1.8))
                i = rng.integers(0, universe.n, size=batch)
                j = rng.integers(0, universe.n, size=batch)
                ok = (i != j) & (universe.cluster_idx[i] != universe.cluster_idx[j])
                if within_category:
                    ok &= universe.category_idx[i] == universe.category_idx[j]
                keys = np.unique(universe.encode(i[ok], j[ok]))
                if drawn.size:
                    keys = keys[~np.isin(keys, drawn, assume_unique=True)]
                if excl.size:
                    keys = keys[~np.isin(keys, excl, assume_unique=True)]
                if keys.size > need:
                    keys = _draw_without_replacement(rng, keys, need)
                drawn = np.sort(np.concatenate([drawn, keys]))
                need = n - drawn.shape[0]

    if drawn.shape[0] < n:
        warnings.append(
            f"mismatched shortfall: requested {n}, cross-cluster universe yielded {drawn.shape[0]}"
        )
    return np.sort(drawn), warnings


def sample_mismatched(
    corpus: Corpus,
    n: int,
    seed: int,
    within_category: bool = False,
    family_bias: float = 0.0,
) -> PairSet:
    """Exactly `n` distinct cross-cluster pairs labeled mismatched (or fewer,
    with a warning, when the pair universe runs out)."""
    universe = PairUniverse(corpus)
    rng = np.random.default_rng(seed)
    keys, warnings = sample_mismatched_keys(
        universe, n, rng, within_category=within_category, family_bias=family_bias
    )
    return PairSet(
        pairs=universe.pairs_from_keys(keys, MISMATCHED),
        source_corpus_hash=corpus.content_hash(),
        warnings=warnings,
    )


def apportion_pairs(
    pairs: Sequence[LabeledPair], ratios: tuple[float, ...], rng: np.random.Generator
) -> list[list[LabeledPair]]:
    """Shuffle and split pairs into parts by largest-remainder apportionment."""
    from .util import largest_remainder_split

    order = rng.permutation(len(pairs))
    shuffled = [pairs[int(k)] for k in order]
    sizes = largest_remainder_split(len(pairs), ratios)
    parts: list[list[LabeledPair]] = []
    at = 0
    for s in sizes:
        parts.append(shuffled[at : at + s])
        at += s
    return parts


def interleave(matched: Iterable[LabeledPair], mismatched: Iterable[LabeledPair], rng: np.random.Generator) -> list[LabeledPair]:
    """Deterministic shuffle of the union of two pair lists."""
    combined = list(matched) + list(mismatched)
    order = rng.permutation(len(combined))
    return [combined[int(k)] for k in order]
