"""Deterministic synthetic corpus generator.

Stands in for a real product corpus at desk scale. Clusters are grouped
into "families" that share brand, line, and attribute vocabulary, so
cross-cluster pairs inside a family are hard negatives rather than random
token soup. Each cluster has a canonical attribute set; every record is an
independently perturbed copy (token drops, adjacent swaps, single-character
typos, whole-attribute drops). The visual modality is a per-cluster latent
centroid plus per-record spherical noise.
"""

from __future__ import annotations

import string
from dataclasses import asdict, dataclass, field

import numpy as np

from .corpus import Corpus, EntityRecord
from .util import TOOLKIT_VERSION, ValidationError

CATEGORY_NAMES = ("clothing", "shoes", "accessories")

_LETTERS = string.ascii_lowercase
_SYLLABLES = [c + v for c in "bcdfghklmnprstvz" for v in "aeiou"]


@dataclass
class PerturbConfig:
    """Per-record text noise probabilities, all in [0, 1]."""

    token_drop_p: float = 0.06
    token_swap_p: float = 0.05
    typo_p: float = 0.10
    attr_drop_p: float = 0.08

    def validate(self) -> None:
        for name, p in asdict(self).items():
            if not 0.0 <= p <= 1.0:
                raise ValidationError(f"perturb.{name} must be in [0,1], got {p}")


@dataclass
class SynthConfig:
    seed: int
    n_clusters: int = 350
    records_per_cluster: tuple[int, int] = (10, 20)
    n_categories: int = 3
    vocab_size: int = 4000
    title_len: tuple[int, int] = (6, 9)
    perturb: PerturbConfig = field(default_factory=PerturbConfig)
    image_dim: int = 16
    image_noise_sigma: float = 0.5
    hard_negative_family_size: int = 5

    def validate(self) -> None:
        if self.seed is None:
            raise ValidationError("seed is required")
        if self.n_clusters <= 0:
            raise ValidationError("n_clusters must be positive")
        lo, hi = self.records_per_cluster
        if not (1 <= lo <= hi):
            raise ValidationError(f"records_per_cluster range {self.records_per_cluster} is empty")
        if self.n_categories <= 0:
            raise ValidationError("n_categories must be positive")
        if self.vocab_size < 100:
            raise ValidationError("vocab_size must be at least 100")
        tlo, thi = self.title_len
        if not (1 <= tlo <= thi):
            raise ValidationError(f"title_len range {self.title_len} is empty")
        if self.image_dim <= 0:
            raise ValidationError("image_dim must be positive")
        if self.image_noise_sigma < 0:
            raise ValidationError("image_noise_sigma must be non-negative")
        if self.hard_negative_family_size <= 0:
            raise ValidationError("hard_negative_family_size must be positive")
        self.perturb.validate()

    def to_json_obj(self) -> dict:
        obj = asdict(self)
        obj["records_per_cluster"] = list(self.records_per_cluster)
        obj["title_len"] = list(self.title_len)
        return obj

    @classmethod
    def from_json_obj(cls, obj: dict) -> "SynthConfig":
        data = dict(obj)
        if "seed" not in data:
            raise ValidationError("seed is required")
        perturb = data.pop("perturb", {})
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**{k: v for k, v in data.items() if k != "perturb"})
        cfg.perturb = PerturbConfig(**perturb) if isinstance(perturb, dict) else perturb
        cfg.records_per_cluster = tuple(cfg.records_per_cluster)  # type: ignore[assignment]
        cfg.title_len = tuple(cfg.title_len)  # type: ignore[assignment]
        cfg.validate()
        return cfg


def describe(config: SynthConfig) -> dict:
    """Provenance block embedded in Corpus.meta; round-trips to an equal config."""
    config.validate()
    return {
        "generator": "embench.synth",
        "toolkit_version": TOOLKIT_VERSION,
        "config": config.to_json_obj(),
    }


def config_from_provenance(block: dict) -> SynthConfig:
    return SynthConfig.from_json_obj(block["config"])


def _make_words(rng: np.random.Generator, count: int, syllables: tuple[int, int]) -> list[str]:
    """Distinct pseudo-words, deterministic given the rng state."""
    words: list[str] = []
    seen: set[str] = set()
    lo, hi = syllables
    while len(words) < count:
        n = int(rng.integers(lo, hi + 1))
        w = "".join(_SYLLABLES[int(i)] for i in rng.integers(0, len(_SYLLABLES), size=n))
        if w not in seen:
            seen.add(w)
            words.append(w)
    return words


@dataclass
class _Pools:
    brands: list[str]
    lines: list[str]
    models: list[str]
    colors: list[str]
    styles: list[str]
    materials: list[str]
    fillers: list[str]


def _build_pools(rng: np.random.Generator, vocab_size: int) -> _Pools:
    n_colors = max(8, vocab_size // 100)
    n_styles = max(8, vocab_size // 80)
    n_materials = max(8, vocab_size // 80)
    n_brands = max(12, vocab_size // 25)
    n_lines = max(24, vocab_size // 12)
    n_fillers = max(30, vocab_size // 12)
    n_models = max(
        60,
        vocab_size - (n_colors + n_styles + n_materials + n_brands + n_lines + n_fillers),
    )
    return _Pools(
        brands=_make_words(rng, n_brands, (2, 3)),
        lines=_make_words(rng, n_lines, (2, 3)),
        models=_make_words(rng, n_models, (2, 4)),
        colors=_make_words(rng, n_colors, (1, 2)),
        styles=_make_words(rng, n_styles, (1, 2)),
        materials=_make_words(rng, n_materials, (1, 2)),
        fillers=_make_words(rng, n_fillers, (1, 3)),
    )


def _pick(rng: np.random.Generator, pool: list[str], k: int = 1) -> list[str]:
    idx = rng.choice(len(pool), size=k, replace=False)
    return [pool[int(i)] for i in idx]


def _typo(rng: np.random.Generator, token: str) -> str:
    pos = int(rng.integers(0, len(token)))
    ch = _LETTERS[int(rng.integers(0, len(_LETTERS)))]
    return token[:pos] + ch + token[pos + 1 :]


# Sellers churn optional descriptors far more than core identity tokens,
# and structured identifiers (brand, line, model, code) are copy-pasted
# rather than retyped. Drop and typo probabilities scale per token class
# around the configured base rates.
_DROP_SCALE_CORE = 0.5
_DROP_SCALE_FILLER = 3.0
_TYPO_SCALE_CORE = 0.0
_TYPO_SCALE_FILLER = 1.5


def _perturb_title(
    rng: np.random.Generator, core: list[str], filler: list[str], p: PerturbConfig
) -> list[str]:
    out: list[tuple[str, float, float]] = [
        (t, _DROP_SCALE_CORE * p.token_drop_p, _TYPO_SCALE_CORE * p.typo_p) for t in core
    ]
    out.extend(
        (t, min(1.0, _DROP_SCALE_FILLER * p.token_drop_p), min(1.0, _TYPO_SCALE_FILLER * p.typo_p))
        for t in filler
    )
    toks = []
    for tok, drop_p, typo_p in out:
        if rng.random() < typo_p:
            tok = _typo(rng, tok)
        if rng.random() >= drop_p:
            toks.append(tok)
    if not toks:
        toks = [core[0] if core else filler[0]]
    if len(toks) >= 2 and rng.random() < p.token_swap_p:
        j = int(rng.integers(0, len(toks) - 1))
        toks[j], toks[j + 1] = toks[j + 1], toks[j]
    return toks


_ALNUM = string.ascii_lowercase + string.digits

# A small fraction of records are bare listings: a code plus a seller tag
# and nothing else. Their pairs are textually hopeless no matter what was
# seen during training; the image is still present.
_BARE_LISTING_P = 0.05

# Records of a cluster arrive in listing waves of this size, sharing a lot
# tag token.
_BATCH_SIZE = 2


def _junk_token(rng: np.random.Generator) -> str:
    # record-unique listing tag, e.g. seller SKU
    return "x" + "".join(_ALNUM[int(i)] for i in rng.integers(0, len(_ALNUM), size=5))


def generate(config: SynthConfig) -> Corpus:
    """Build a corpus of `n_clusters` clusters, fully determined by the seed."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    pools = _build_pools(rng, config.vocab_size)

    fam_size = config.hard_negative_family_size
    n_families = (config.n_clusters + fam_size - 1) // fam_size
    cat_names = [
        CATEGORY_NAMES[i] if i < len(CATEGORY_NAMES) else f"category{i}"
        for i in range(config.n_categories)
    ]

    families = []
    for f in range(n_families):
        families.append(
            {
                "category": cat_names[f % config.n_categories],
                "brand": _pick(rng, pools.brands)[0],
                "line": _pick(rng, pools.lines, 2),
                "palette": _pick(rng, pools.colors, 2),
                "styles": _pick(rng, pools.styles, 1),
                "materials": _pick(rng, pools.materials, 2),
                "fillers": _pick(rng, pools.fillers, 4),
            }
        )

    clusters: dict[str, list[EntityRecord]] = {}
    family_map: dict[str, str] = {}
    tlo, thi = config.title_len
    rlo, rhi = config.records_per_cluster

    # Clusters 0/1 and 2/3 of each family are "colorway twins": identical
    # canonicals except the color pick and the cluster code. Twin
    # cross-pairs are the hardest negatives the corpus produces.
    twin_canon: dict[tuple[int, int], dict] = {}

    for ci in range(config.n_clusters):
        fi = ci // fam_size
        fam = families[fi]
        family_key = f"f{fi:04d}"
        cluster_id = f"{family_key}-c{ci:05d}"
        family_map[cluster_id] = family_key

        code = _LETTERS[int(rng.integers(0, 26))] + "".join(
            str(int(d)) for d in rng.integers(0, 10, size=3)
        )
        within = ci % fam_size
        ean = "e" + "".join(str(int(d)) for d in rng.integers(0, 10, size=4))
        if within in (1, 3) and (fi, within - 1) in twin_canon:
            base = twin_canon[(fi, within - 1)]
            model = base["model"]
            filler = base["filler"]
            palette = fam["palette"]
            other = [c for c in palette if c != base["color"]]
            canonical_attrs = {
                "color": [other[0] if other else base["color"]],
                "style": [base["style"]],
                "material": [base["material"]],
            }
        else:
            model = _pick(rng, pools.models)[0]
            want_len = int(rng.integers(tlo, thi + 1))
            extra = max(1, want_len - 5)
            filler = fam["fillers"][: min(extra, len(fam["fillers"]))]
            canonical_attrs = {
                "color": _pick(rng, fam["palette"]),
                "style": _pick(rng, fam["styles"]),
                "material": _pick(rng, fam["materials"]),
            }
            if within in (0, 2):
                twin_canon[(fi, within)] = {
                    "model": model,
                    "filler": filler,
                    "color": canonical_attrs["color"][0],
                    "style": canonical_attrs["style"][0],
                    "material": canonical_attrs["material"][0],
                }
        core = [fam["brand"], *fam["line"], model, code, ean]

        centroid = rng.normal(0.0, 1.0, size=config.image_dim)
        n_records = int(rng.integers(rlo, rhi + 1))
        # Listings arrive in waves: small groups of records share a lot tag.
        batch_of = rng.permutation(n_records) // _BATCH_SIZE
        records = []
        for rj in range(n_records):
            tag = f"lt{ci:04d}{_LETTERS[int(batch_of[rj]) % 26]}"
            attrs: dict[str, str] = {}
            if rng.random() < _BARE_LISTING_P:
                attrs["title"] = " ".join([code, tag, _junk_token(rng)])
            else:
                title = _perturb_title(rng, core, filler, config.perturb)
                title.append(tag)
                title.extend(_junk_token(rng) for _ in range(2))
                attrs["title"] = " ".join(title)
                for name in ("color", "style", "material"):
                    if rng.random() < config.perturb.attr_drop_p:
                        continue
                    toks = list(canonical_attrs[name])
                    if rng.random() < config.perturb.typo_p:
                        toks[0] = _typo(rng, toks[0])
                    attrs[name] = " ".join(toks)
            noise = rng.normal(0.0, 1.0, size=config.image_dim)
            vec = centroid + config.image_noise_sigma * noise
            records.append(
                EntityRecord(
                    record_id=f"r{ci:05d}-{rj:03d}",
                    cluster_id=cluster_id,
                    category=fam["category"],
                    attrs=attrs,
                    image_vec=[float(x) for x in vec],
                )
            )
        clusters[cluster_id] = records

    corpus = Corpus(
        clusters=clusters,
        image_dim=config.image_dim,
        meta={"provenance": describe(config), "families": family_map},
    )
    corpus.validate()
    return corpus
