"""Pair featurization for the baseline matchers.

Text features per pair: token Jaccard on the title, token Jaccard on all
attributes, cosine over tf-idf vectors, character-trigram Dice, and a
token-count length ratio. Visual features: image-vector cosine, negative
Euclidean distance, and mean/max absolute difference.

The idf table is fit on training records only and fixes the tf-idf
vocabulary: terms outside it (unseen at training time) do not enter the
tf-idf view of a record. Jaccard and Dice always use the raw strings.
"""

from __future__ import annotations

import logging
import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .corpus import Corpus, EntityRecord
from .util import ValidationError

logger = logging.getLogger(__name__)

TEXT_FEATURE_NAMES = (
    "title_jaccard",
    "attrs_jaccard",
    "tfidf_cosine",
    "trigram_dice",
    "length_ratio",
)
VIS_FEATURE_NAMES = (
    "image_cosine",
    "image_neg_l2",
    "image_absdiff_mean",
    "image_absdiff_max",
)

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def title_tokens(record: EntityRecord) -> list[str]:
    """Tokens of the title attribute; falls back to the first attribute."""
    if "title" in record.attrs:
        return tokenize(record.attrs["title"])
    for value in record.attrs.values():
        return tokenize(value)
    return []


def all_tokens(record: EntityRecord) -> list[str]:
    toks: list[str] = []
    for value in record.attrs.values():
        toks.extend(tokenize(value))
    return toks


def char_trigrams(tokens: Sequence[str]) -> set[str]:
    text = " ".join(tokens)
    if len(text) < 3:
        return {text} if text else set()
    return {text[i : i + 3] for i in range(len(text) - 2)}


@dataclass
class IdfTable:
    """Smoothed inverse document frequencies over the training records.

    idf(t) = ln((1 + N) / (1 + df(t))) + 1. The key set is the tf-idf
    vocabulary; terms absent from it carry no tf-idf weight.
    """

    idf: dict[str, float]
    n_docs: int

    def to_json_obj(self) -> dict:
        return {"n_docs": self.n_docs, "idf": dict(sorted(self.idf.items()))}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "IdfTable":
        return cls(idf={str(k): float(v) for k, v in obj["idf"].items()}, n_docs=int(obj["n_docs"]))


def fit_idf(records: Iterable[EntityRecord], min_df: int = 2) -> IdfTable:
    """Document frequencies over the training records.

    Tokens below `min_df` stay out of the vocabulary (record-unique noise
    like SKUs and typos would otherwise dominate the weight mass), matching
    the usual vectorizer practice.
    """
    df: Counter[str] = Counter()
    n = 0
    for rec in records:
        n += 1
        df.update(set(all_tokens(rec)))
    idf = {
        t: math.log((1 + n) / (1 + d)) + 1.0 for t, d in df.items() if d >= min_df
    }
    return IdfTable(idf=idf, n_docs=n)


class _TokenRegistry:
    """Assigns stable integer ids to strings in first-seen order."""

    def __init__(self) -> None:
        self.ids: dict[str, int] = {}

    def get(self, token: str) -> int:
        tid = self.ids.get(token)
        if tid is None:
            tid = len(self.ids)
            self.ids[token] = tid
        return tid


def _csr_from_lists(rows: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    indptr = np.zeros(len(rows) + 1, dtype=np.int64)
    for i, r in enumerate(rows):
        indptr[i + 1] = indptr[i] + r.shape[0]
    ids = np.concatenate(rows) if rows else np.empty(0, dtype=np.int32)
    return indptr, ids.astype(np.int32)


class RecordEncoder:
    """Encodes records into the array layout the kernels consume.

    Build one per (record set, idf table) and reuse it across every pair
    batch; encoding is the cheap part, pair featurization is the hot path.
    """

    def __init__(self, records: Sequence[EntityRecord], idf: IdfTable):
        self.idf = idf
        self.index: dict[str, int] = {}
        reg_tok = _TokenRegistry()
        reg_tri = _TokenRegistry()

        title_rows: list[np.ndarray] = []
        attr_rows: list[np.ndarray] = []
        tri_rows: list[np.ndarray] = []
        w_id_rows: list[np.ndarray] = []
        w_val_rows: list[np.ndarray] = []
        counts = np.zeros(len(records), dtype=np.int64)
        images: list[list[float] | None] = []

        for i, rec in enumerate(records):
            if rec.record_id in self.index:
                raise ValidationError(f"duplicate record_id {rec.record_id!r} in encoder input")
            self.index[rec.record_id] = i

            t_toks = title_tokens(rec)
            a_toks = all_tokens(rec)
            if not a_toks:
                logger.warning("record %r has no tokens; features will be zero", rec.record_id)
            counts[i] = len(a_toks)

            title_rows.append(_sorted_unique_ids(t_toks, reg_tok))
            attr_rows.append(_sorted_unique_ids(a_toks, reg_tok))
            tri_rows.append(_sorted_unique_ids(sorted(char_trigrams(a_toks)), reg_tri))

            tf = Counter(tok for tok in a_toks if tok in idf.idf)
            if tf:
                ids = np.fromiter(
                    (reg_tok.get(t) for t in tf), count=len(tf), dtype=np.int64
                )
                vals = np.fromiter(
                    (tf[t] * idf.idf[t] for t in tf), count=len(tf), dtype=np.float64
                )
                order = np.argsort(ids)
                ids, vals = ids[order], vals[order]
                norm = math.sqrt(float(np.dot(vals, vals)))
                if norm > 0:
                    vals = vals / norm
            else:
                ids = np.empty(0, dtype=np.int64)
                vals = np.empty(0, dtype=np.float64)
            w_id_rows.append(ids.astype(np.int32))
            w_val_rows.append(vals)
            images.append(rec.image_vec)

        self.title_indptr, self.title_ids = _csr_from_lists(title_rows)
        self.attr_indptr, self.attr_ids = _csr_from_lists(attr_rows)
        self.tri_indptr, self.tri_ids = _csr_from_lists(tri_rows)
        self.w_indptr, self.w_ids = _csr_from_lists(w_id_rows)
        self.w_vals = (
            np.concatenate(w_val_rows) if w_val_rows else np.empty(0, dtype=np.float64)
        )
        self.attr_counts = counts

        self.has_images = bool(records) and all(v is not None for v in images)
        self.images = (
            np.array(images, dtype=np.float64) if self.has_images else None
        )

    def rows_for(self, ids: Sequence[str]) -> np.ndarray:
        try:
            return np.array([self.index[r] for r in ids], dtype=np.int64)
        except KeyError as exc:
            raise ValidationError(f"unknown record reference {exc.args[0]!r}") from None

    def text_features(self, left: np.ndarray, right: np.ndarray, impl: str | None = None) -> np.ndarray:
        return kernels.text_pair_features(
            self.title_indptr,
            self.title_ids,
            self.attr_indptr,
            self.attr_ids,
            self.tri_indptr,
            self.tri_ids,
            self.w_indptr,
            self.w_ids,
            self.w_vals,
            self.attr_counts,
            left,
            right,
            impl=impl,
        )

    def vis_features(self, left: np.ndarray, right: np.ndarray, impl: str | None = None) -> np.ndarray:
        if self.images is None:
            raise ValidationError("image features requested but some records lack image_vec")
        return kernels.vis_pair_features(self.images, left, right, impl=impl)


def _sorted_unique_ids(tokens: Iterable[str], registry: _TokenRegistry) -> np.ndarray:
    ids = sorted({registry.get(t) for t in tokens})
    return np.array(ids, dtype=np.int32)


@dataclass
class PairFeatures:
    """Similarity features of one record pair; vis_feats is None when either
    side lacks an image vector."""

    text_feats: np.ndarray
    vis_feats: np.ndarray | None


def featurize(left: EntityRecord, right: EntityRecord, idf_table: IdfTable) -> PairFeatures:
    """Featurize a single pair. Symmetric: featurize(a, b) == featurize(b, a)."""
    enc = RecordEncoder([left, right], idf_table)
    li = np.array([0], dtype=np.int64)
    ri = np.array([1], dtype=np.int64)
    text = enc.text_features(li, ri)[0]
    vis = None
    if left.image_vec is not None and right.image_vec is not None:
        if len(left.image_vec) != len(right.image_vec):
            raise ValidationError("image_vec dimensions differ within a pair")
        vecs = np.array([left.image_vec, right.image_vec], dtype=np.float64)
        vis = kernels.vis_pair_features(vecs, li, ri)[0]
    if not all_tokens(left) and not all_tokens(right):
        logger.warning("both records of a pair have empty attributes; text features are zero")
    return PairFeatures(text_feats=text, vis_feats=vis)


def records_argument(records: Corpus | Mapping[str, EntityRecord]) -> Mapping[str, EntityRecord]:
    """Normalize the `records` argument accepted by matcher entry points."""
    if isinstance(records, Corpus):
        return records.records_by_id()
    return records
