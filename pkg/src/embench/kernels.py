"""Hot pairwise-similarity kernels with two interchangeable backends.

Pair featurization dominates runtime once benchmarks reach imbalanced
ratios (hundreds of thousands to millions of candidate pairs), so the
inner loops are compiled with numba. Setting the environment variable
``EMBENCH_NO_NUMBA=1`` (or a failed numba import) selects a vectorized
numpy/scipy fallback instead. Both backends compute the same quantities;
results agree to float precision (see tests and benchmarks/).

Records are encoded as CSR-style arrays: for each field, ``indptr`` is an
int64 array of length n_records+1 and ``ids`` holds each record's sorted
unique token ids. The tf-idf field additionally carries per-id weights,
L2-normalized per record.
"""

from __future__ import annotations

import os

import numpy as np

_NUMBA_DISABLED = os.environ.get("EMBENCH_NO_NUMBA", "") not in ("", "0")

try:
    if _NUMBA_DISABLED:
        raise ImportError("numba disabled via EMBENCH_NO_NUMBA")
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

    def njit(*args, **kwargs):  # type: ignore[misc]
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


_CHUNK = 200_000  # pairs per block in the numpy backend, bounds memory

N_TEXT_FEATURES = 5
N_VIS_FEATURES = 4


def backend() -> str:
    """Name of the active kernel backend."""
    return "numba" if HAS_NUMBA else "numpy"


# --- numba backend (also plain-Python-executable when numba is absent) ---


@njit(cache=True)
def _isect_size(ids, s1, e1, s2, e2):
    n = 0
    i, j = s1, s2
    while i < e1 and j < e2:
        a = ids[i]
        b = ids[j]
        if a == b:
            n += 1
            i += 1
            j += 1
        elif a < b:
            i += 1
        else:
            j += 1
    return n


@njit(cache=True)
def _sparse_dot(ids, vals, s1, e1, s2, e2):
    acc = 0.0
    i, j = s1, s2
    while i < e1 and j < e2:
        a = ids[i]
        b = ids[j]
        if a == b:
            acc += vals[i] * vals[j]
            i += 1
            j += 1
        elif a < b:
            i += 1
        else:
            j += 1
    return acc


@njit(cache=True)
def _text_kernel(
    title_indptr,
    title_ids,
    attr_indptr,
    attr_ids,
    tri_indptr,
    tri_ids,
    w_indptr,
    w_ids,
    w_vals,
    attr_counts,
    left,
    right,
    out,
):
    for p in range(left.shape[0]):
        li = left[p]
        ri = right[p]

        s1, e1 = title_indptr[li], title_indptr[li + 1]
        s2, e2 = title_indptr[ri], title_indptr[ri + 1]
        inter = _isect_size(title_ids, s1, e1, s2, e2)
        union = (e1 - s1) + (e2 - s2) - inter
        out[p, 0] = inter / union if union > 0 else 0.0

        s1, e1 = attr_indptr[li], attr_indptr[li + 1]
        s2, e2 = attr_indptr[ri], attr_indptr[ri + 1]
        inter = _isect_size(attr_ids, s1, e1, s2, e2)
        union = (e1 - s1) + (e2 - s2) - inter
        out[p, 1] = inter / union if union > 0 else 0.0

        out[p, 2] = _sparse_dot(
            w_ids, w_vals, w_indptr[li], w_indptr[li + 1], w_indptr[ri], w_indptr[ri + 1]
        )

        s1, e1 = tri_indptr[li], tri_indptr[li + 1]
        s2, e2 = tri_indptr[ri], tri_indptr[ri + 1]
        inter = _isect_size(tri_ids, s1, e1, s2, e2)
        denom = (e1 - s1) + (e2 - s2)
        out[p, 3] = 2.0 * inter / denom if denom > 0 else 0.0

        ca = attr_counts[li]
        cb = attr_counts[ri]
        hi = ca if ca > cb else cb
        lo = ca if ca < cb else cb
        out[p, 4] = lo / hi if hi > 0 else 0.0


@njit(cache=True)
def _vis_kernel(vecs, left, right, out):
    d = vecs.shape[1]
    for p in range(left.shape[0]):
        li = left[p]
        ri = right[p]
        dot = 0.0
        na = 0.0
        nb = 0.0
        l1 = 0.0
        mx = 0.0
        for k in range(d):
            a = vecs[li, k]
            b = vecs[ri, k]
            dot += a * b
            na += a * a
            nb += b * b
            diff = abs(a - b)
            l1 += diff
            if diff > mx:
                mx = diff
        denom = np.sqrt(na) * np.sqrt(nb)
        out[p, 0] = dot / denom if denom > 0 else 0.0
        out[p, 1] = -np.sqrt(na + nb - 2.0 * dot) if na + nb - 2.0 * dot > 0 else 0.0
        out[p, 2] = l1 / d
        out[p, 3] = mx


# --- numpy/scipy backend ---


def _csr_matrix(indptr, ids, vals=None):
    from scipy import sparse

    dim = int(ids.max()) + 1 if ids.size else 1
    data = vals if vals is not None else np.ones(ids.shape[0], dtype=np.float64)
    return sparse.csr_matrix(
        (data, ids.astype(np.int64), indptr), shape=(indptr.shape[0] - 1, dim)
    )


def _numpy_text_features(
    title_indptr,
    title_ids,
    attr_indptr,
    attr_ids,
    tri_indptr,
    tri_ids,
    w_indptr,
    w_ids,
    w_vals,
    attr_counts,
    left,
    right,
):
    title_m = _csr_matrix(title_indptr, title_ids)
    attr_m = _csr_matrix(attr_indptr, attr_ids)
    tri_m = _csr_matrix(tri_indptr, tri_ids)
    w_m = _csr_matrix(w_indptr, w_ids, w_vals)
    title_sz = np.diff(title_indptr).astype(np.float64)
    attr_sz = np.diff(attr_indptr).astype(np.float64)
    tri_sz = np.diff(tri_indptr).astype(np.float64)

    n = left.shape[0]
    out = np.empty((n, N_TEXT_FEATURES), dtype=np.float64)
    for s in range(0, n, _CHUNK):
        e = min(s + _CHUNK, n)
        lf = left[s:e]
        rt = right[s:e]

        inter = np.asarray(title_m[lf].multiply(title_m[rt]).sum(axis=1)).ravel()
        union = title_sz[lf] + title_sz[rt] - inter
        out[s:e, 0] = np.divide(inter, union, out=np.zeros_like(inter), where=union > 0)

        inter = np.asarray(attr_m[lf].multiply(attr_m[rt]).sum(axis=1)).ravel()
        union = attr_sz[lf] + attr_sz[rt] - inter
        out[s:e, 1] = np.divide(inter, union, out=np.zeros_like(inter), where=union > 0)

        out[s:e, 2] = np.asarray(w_m[lf].multiply(w_m[rt]).sum(axis=1)).ravel()

        inter = np.asarray(tri_m[lf].multiply(tri_m[rt]).sum(axis=1)).ravel()
        denom = tri_sz[lf] + tri_sz[rt]
        out[s:e, 3] = np.divide(2.0 * inter, denom, out=np.zeros_like(inter), where=denom > 0)

        ca = attr_counts[lf].astype(np.float64)
        cb = attr_counts[rt].astype(np.float64)
        hi = np.maximum(ca, cb)
        lo = np.minimum(ca, cb)
        out[s:e, 4] = np.divide(lo, hi, out=np.zeros_like(lo), where=hi > 0)
    return out


def _numpy_vis_features(vecs, left, right):
    n = left.shape[0]
    out = np.empty((n, N_VIS_FEATURES), dtype=np.float64)
    for s in range(0, n, _CHUNK):
        e = min(s + _CHUNK, n)
        a = vecs[left[s:e]]
        b = vecs[right[s:e]]
        dot = np.einsum("ij,ij->i", a, b)
        na = np.einsum("ij,ij->i", a, a)
        nb = np.einsum("ij,ij->i", b, b)
        denom = np.sqrt(na) * np.sqrt(nb)
        out[s:e, 0] = np.divide(dot, denom, out=np.zeros_like(dot), where=denom > 0)
        sq = na + nb - 2.0 * dot
        out[s:e, 1] = -np.sqrt(np.maximum(sq, 0.0))
        diff = np.abs(a - b)
        out[s:e, 2] = diff.mean(axis=1)
        out[s:e, 3] = diff.max(axis=1)
    return out


# --- dispatch ---


def text_pair_features(
    title_indptr,
    title_ids,
    attr_indptr,
    attr_ids,
    tri_indptr,
    tri_ids,
    w_indptr,
    w_ids,
    w_vals,
    attr_counts,
    left,
    right,
    impl: str | None = None,
):
    """Feature matrix (n_pairs, 5) of text similarities for index pairs.

    Columns: title Jaccard, all-attribute Jaccard, tf-idf cosine,
    character-trigram Dice, token-count length ratio.
    """
    use = impl or backend()
    left = np.ascontiguousarray(left, dtype=np.int64)
    right = np.ascontiguousarray(right, dtype=np.int64)
    if use == "numba":
        if not HAS_NUMBA:
            raise RuntimeError("numba backend requested but numba is unavailable")
        out = np.empty((left.shape[0], N_TEXT_FEATURES), dtype=np.float64)
        _text_kernel(
            title_indptr,
            title_ids,
            attr_indptr,
            attr_ids,
            tri_indptr,
            tri_ids,
            w_indptr,
            w_ids,
            w_vals,
            attr_counts,
            left,
            right,
            out,
        )
        return out
    if use == "numpy":
        return _numpy_text_features(
            title_indptr,
            title_ids,
            attr_indptr,
            attr_ids,
            tri_indptr,
            tri_ids,
            w_indptr,
            w_ids,
            w_vals,
            attr_counts,
            left,
            right,
        )
    raise ValueError(f"unknown kernel backend {use!r}")


def vis_pair_features(vecs, left, right, impl: str | None = None):
    """Feature matrix (n_pairs, 4) of image-vector similarities.

    Columns: cosine, negative Euclidean distance, mean |a-b|, max |a-b|.
    """
    use = impl or backend()
    vecs = np.ascontiguousarray(vecs, dtype=np.float64)
    left = np.ascontiguousarray(left, dtype=np.int64)
    right = np.ascontiguousarray(right, dtype=np.int64)
    if use == "numba":
        if not HAS_NUMBA:
            raise RuntimeError("numba backend requested but numba is unavailable")
        out = np.empty((left.shape[0], N_VIS_FEATURES), dtype=np.float64)
        _vis_kernel(vecs, left, right, out)
        return out
    if use == "numpy":
        return _numpy_vis_features(vecs, left, right)
    raise ValueError(f"unknown kernel backend {use!r}")
