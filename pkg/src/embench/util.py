"""Shared plumbing: hashing, seed derivation, rounding, atomic file writes."""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any

TOOLKIT_VERSION = "0.1.0"

_SEED_MASK = (1 << 63) - 1


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def derive_seed(root_seed: int, label: str) -> int:
    """Derive a child seed from a root seed and a purpose label.

    Stable across runs and platforms, so pipeline stages can be re-run
    independently while staying reproducible.
    """
    digest = hashlib.sha256(f"{root_seed}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & _SEED_MASK


def round_half_up(x: float) -> int:
    """Round to nearest integer with ties going up (3.5 -> 4, 2.5 -> 3)."""
    return int(math.floor(x + 0.5))


def largest_remainder_split(total: int, ratios: tuple[float, ...]) -> list[int]:
    """Apportion `total` items by `ratios` using the largest-remainder rule.

    The parts always sum to `total`; ties in remainders are broken by
    position, which keeps the apportionment deterministic.
    """
    if total < 0:
        raise ValueError("total must be non-negative")
    if not ratios or any(r < 0 for r in ratios):
        raise ValueError("ratios must be non-negative and non-empty")
    s = sum(ratios)
    if s <= 0:
        raise ValueError("ratios must sum to a positive value")
    quotas = [total * r / s for r in ratios]
    parts = [int(math.floor(q)) for q in quotas]
    short = total - sum(parts)
    order = sorted(range(len(ratios)), key=lambda i: (-(quotas[i] - parts[i]), i))
    for i in order[:short]:
        parts[i] += 1
    return parts


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write text to `path` via a temp file and rename, so readers never
    observe a partially written file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def json_dumps_stable(obj: Any, indent: int | None = 2) -> str:
    """Serialize with sorted keys so equal objects produce equal bytes."""
    return json.dumps(obj, indent=indent, sort_keys=True, ensure_ascii=False)


class ToolkitError(Exception):
    """Base class for all toolkit failures surfaced to users."""


class ValidationError(ToolkitError):
    """Raised when input data violates a documented invariant."""


class ContractError(ToolkitError):
    """Raised when a benchmark bundle violates its paradigm contract."""
