"""Core data model for entity records, clusters, and corpora.

A corpus is a set of entity clusters; each cluster holds the records that
refer to one real-world entity. Records carry opaque textual attributes and
an optional fixed-length image feature vector. Gold pair labels are never
stored: two records match exactly when they share a cluster.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .util import ValidationError, sha256_bytes

logger = logging.getLogger(__name__)

RECORD_KEYS = ("record_id", "cluster_id", "category", "attrs", "image_vec")

# Synthetic cluster ids look like "f0012-c00345"; the prefix names the
# hard-negative family the cluster belongs to.
_FAMILY_ID_RE = re.compile(r"^(f\d+)-")


@dataclass
class EntityRecord:
    """One observation of an entity: id, cluster, category, text attributes,
    optional image feature vector."""

    record_id: str
    cluster_id: str
    category: str
    attrs: dict[str, str]
    image_vec: list[float] | None = None

    def validate(self, image_dim: int | None = None) -> None:
        if not self.record_id:
            raise ValidationError("record_id must be non-empty")
        if not self.cluster_id:
            raise ValidationError(f"record {self.record_id!r}: cluster_id must be non-empty")
        if not any(v.strip() for v in self.attrs.values()):
            raise ValidationError(
                f"record {self.record_id!r}: attrs must contain at least one non-empty text value"
            )
        if self.image_vec is not None:
            if image_dim is not None and len(self.image_vec) != image_dim:
                raise ValidationError(
                    f"record {self.record_id!r}: image_vec length {len(self.image_vec)} "
                    f"differs from corpus image_dim {image_dim}"
                )

    def to_json_obj(self) -> dict:
        obj: dict = {
            "record_id": self.record_id,
            "cluster_id": self.cluster_id,
            "category": self.category,
            "attrs": dict(self.attrs),
        }
        if self.image_vec is not None:
            obj["image_vec"] = list(self.image_vec)
        return obj


@dataclass
class Corpus:
    """Immutable-by-convention set of entity clusters.

    `clusters` maps cluster_id to the records of that cluster in load order.
    Treat a loaded corpus as read-only; it is then safe to share across
    threads.
    """

    clusters: dict[str, list[EntityRecord]]
    image_dim: int | None = None
    meta: dict = field(default_factory=dict)

    def validate(self) -> None:
        seen_ids: set[str] = set()
        for cluster_id, records in self.clusters.items():
            if not records:
                raise ValidationError(f"cluster {cluster_id!r} is empty")
            for rec in records:
                if rec.cluster_id != cluster_id:
                    raise ValidationError(
                        f"record {rec.record_id!r} carries cluster_id {rec.cluster_id!r} "
                        f"but is stored under cluster {cluster_id!r}"
                    )
                if rec.record_id in seen_ids:
                    raise ValidationError(f"duplicate record_id {rec.record_id!r}")
                seen_ids.add(rec.record_id)
                rec.validate(image_dim=self.image_dim)

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    @property
    def n_records(self) -> int:
        return sum(len(records) for records in self.clusters.values())

    def iter_records(self) -> Iterator[EntityRecord]:
        """Records in canonical order: clusters sorted by id, file order within."""
        for cluster_id in sorted(self.clusters):
            yield from self.clusters[cluster_id]

    def records_by_id(self) -> dict[str, EntityRecord]:
        return {rec.record_id: rec for rec in self.iter_records()}

    def cluster_of(self) -> dict[str, str]:
        return {rec.record_id: rec.cluster_id for rec in self.iter_records()}

    def categories(self) -> dict[str, int]:
        """Record counts per category."""
        counts: dict[str, int] = {}
        for rec in self.iter_records():
            counts[rec.category] = counts.get(rec.category, 0) + 1
        return counts

    def subset(self, record_ids: Iterable[str]) -> "Corpus":
        """Corpus restricted to the given records, keeping cluster structure,
        image_dim, and meta. Clusters left empty are dropped."""
        wanted = set(record_ids)
        clusters: dict[str, list[EntityRecord]] = {}
        for cluster_id in sorted(self.clusters):
            kept = [r for r in self.clusters[cluster_id] if r.record_id in wanted]
            if kept:
                clusters[cluster_id] = kept
        return Corpus(clusters=clusters, image_dim=self.image_dim, meta=dict(self.meta))

    def content_hash(self) -> str:
        """Digest of the canonical JSONL serialization."""
        return sha256_bytes(dumps_jsonl(self).encode("utf-8"))

    def family_map(self) -> dict[str, str] | None:
        """cluster_id -> hard-negative family key, when derivable.

        Precedence: an explicit `meta["families"]` map, then the synthetic
        cluster-id naming convention, then None (caller may fall back to
        category grouping).
        """
        families = self.meta.get("families")
        if isinstance(families, dict) and families:
            return {c: str(families[c]) for c in self.clusters if c in families}
        derived: dict[str, str] = {}
        for cluster_id in self.clusters:
            m = _FAMILY_ID_RE.match(cluster_id)
            if not m:
                return None
            derived[cluster_id] = m.group(1)
        return derived or None


@dataclass
class CorpusStats:
    n_clusters: int
    n_records: int
    cluster_size_min: int | None
    cluster_size_mean: float | None
    cluster_size_max: int | None
    categories: dict[str, int]
    image_coverage: float

    def to_json_obj(self) -> dict:
        return {
            "n_clusters": self.n_clusters,
            "n_records": self.n_records,
            "cluster_size_min": self.cluster_size_min,
            "cluster_size_mean": self.cluster_size_mean,
            "cluster_size_max": self.cluster_size_max,
            "categories": dict(sorted(self.categories.items())),
            "image_coverage": self.image_coverage,
        }


def corpus_stats(corpus: Corpus) -> CorpusStats:
    """Exact descriptive summary: counts, cluster-size range, categories,
    image coverage fraction."""
    sizes = [len(records) for records in corpus.clusters.values()]
    n_records = sum(sizes)
    with_image = sum(
        1 for rec in corpus.iter_records() if rec.image_vec is not None
    )
    return CorpusStats(
        n_clusters=len(sizes),
        n_records=n_records,
        cluster_size_min=min(sizes) if sizes else None,
        cluster_size_mean=(n_records / len(sizes)) if sizes else None,
        cluster_size_max=max(sizes) if sizes else None,
        categories=corpus.categories(),
        image_coverage=(with_image / n_records) if n_records else 0.0,
    )


def filter_by_category(corpus: Corpus, category: str) -> Corpus:
    """Corpus restricted to clusters whose records all carry `category`.

    Mixed-category clusters are excluded (a cluster is one real-world
    entity, so it is never split); the exclusion count lands in
    `meta["mixed_clusters_excluded"]`. An unknown category yields an empty
    corpus, not an error.
    """
    clusters: dict[str, list[EntityRecord]] = {}
    mixed = 0
    for cluster_id in sorted(corpus.clusters):
        records = corpus.clusters[cluster_id]
        cats = {rec.category for rec in records}
        if cats == {category}:
            clusters[cluster_id] = list(records)
        elif category in cats:
            mixed += 1
    meta = dict(corpus.meta)
    meta["filtered_category"] = category
    meta["mixed_clusters_excluded"] = mixed
    if mixed:
        logger.warning(
            "category %r: excluded %d mixed-category cluster(s)", category, mixed
        )
    if not clusters:
        logger.warning("category %r matches no cluster", category)
    return Corpus(clusters=clusters, image_dim=corpus.image_dim, meta=meta)


def _record_from_obj(obj: dict, line_no: int, ignored_keys: set[str]) -> EntityRecord:
    try:
        record_id = obj["record_id"]
        cluster_id = obj["cluster_id"]
        category = obj.get("category", "")
        attrs = obj["attrs"]
    except KeyError as exc:
        raise ValidationError(f"line {line_no}: missing required key {exc}") from None
    if not isinstance(attrs, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in attrs.items()
    ):
        raise ValidationError(f"line {line_no}: attrs must map strings to strings")
    image_vec = obj.get("image_vec")
    if image_vec is not None:
        if not isinstance(image_vec, list) or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in image_vec
        ):
            raise ValidationError(f"line {line_no}: image_vec must be a list of numbers")
        image_vec = [float(x) for x in image_vec]
    ignored_keys.update(k for k in obj if k not in RECORD_KEYS)
    return EntityRecord(
        record_id=str(record_id),
        cluster_id=str(cluster_id),
        category=str(category),
        attrs={str(k): str(v) for k, v in attrs.items()},
        image_vec=image_vec,
    )


def loads_jsonl(text: str) -> Corpus:
    """Parse a corpus from JSONL text, one record object per line."""
    clusters: dict[str, list[EntityRecord]] = {}
    ignored_keys: set[str] = set()
    image_dim: int | None = None
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"line {line_no}: malformed JSON ({exc.msg})") from None
        rec = _record_from_obj(obj, line_no, ignored_keys)
        if rec.image_vec is not None:
            if image_dim is None:
                image_dim = len(rec.image_vec)
            elif len(rec.image_vec) != image_dim:
                raise ValidationError(
                    f"line {line_no}: record {rec.record_id!r} has image_vec length "
                    f"{len(rec.image_vec)}, expected {image_dim}"
                )
        clusters.setdefault(rec.cluster_id, []).append(rec)
    meta: dict = {}
    if ignored_keys:
        meta["ignored_keys"] = sorted(ignored_keys)
    corpus = Corpus(clusters=clusters, image_dim=image_dim, meta=meta)
    corpus.validate()
    return corpus


def load_corpus(path: str | Path, format: str = "jsonl") -> Corpus:
    """Load and validate a corpus file. Only the JSONL schema is supported."""
    if format != "jsonl":
        raise ValidationError(f"unsupported corpus format {format!r}")
    text = Path(path).read_text(encoding="utf-8")
    return loads_jsonl(text)


def dumps_jsonl(corpus: Corpus) -> str:
    """Canonical JSONL serialization: clusters sorted by id, records in
    load order, fixed key order per record."""
    lines = [
        json.dumps(rec.to_json_obj(), ensure_ascii=False, separators=(",", ":"))
        for rec in corpus.iter_records()
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    from .util import atomic_write_text

    atomic_write_text(path, dumps_jsonl(corpus))
