"""Bit-word kernels for the sparse exterior algebra.

Every hot loop exists twice: a numba ``@njit`` version and a vectorised
numpy version with identical semantics.  The numba path is used when numba
imports cleanly and ``LOGGAS_DISABLE_NUMBA`` is unset (or ``0``); otherwise
the numpy path is used.  :func:`set_backend` switches at runtime, which the
tests and ``benchmarks/bench_kernels.py`` rely on.

Basis words are ``int64`` bit sets: generator ``e_k`` is bit ``k - 1``.
"""

import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

_PAIR_CHUNK = 1 << 22


def _env_disabled():
    flag = os.environ.get("LOGGAS_DISABLE_NUMBA", "").strip().lower()
    return flag not in ("", "0", "false", "no")


BACKEND = "numba" if HAS_NUMBA and not _env_disabled() else "numpy"


def set_backend(name):
    """Select ``"numba"`` or ``"numpy"`` kernels; returns the previous name."""
    global BACKEND
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba is not importable in this environment")
    previous, BACKEND = BACKEND, name
    return previous


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------


def popcount_np(words):
    return np.bitwise_count(np.asarray(words, dtype=np.int64)).astype(np.int64)


def wedge_sign_np(a, b, K):
    """Sign of ``eps_a ^ eps_b`` relative to the sorted word ``a | b``.

    Counts pairs (i in a, j in b) with i > j; assumes ``a & b == 0``.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    inversions = np.zeros(np.broadcast(a, b).shape, dtype=np.int64)
    for p in range(K):
        hit = (b >> p) & 1
        if not hit.any():
            continue
        inversions += hit * np.bitwise_count(a >> (p + 1))
    return 1 - 2 * (inversions & 1)


def _keep_mask_np(keys, K, prune_gap):
    if prune_gap <= 0:
        return None
    gap = K - np.bitwise_count(keys).astype(np.int64)
    return (gap == 0) | (gap >= prune_gap)


def wedge_pairs_np(ka, kb, K, prune_gap=0):
    """All disjoint pairs ``(i, j)`` with their sign and product word.

    Output is ordered by product word (stable within equal words), so equal
    words appear contiguously in enumeration order.
    """
    ia_parts, ib_parts = [], []
    nb = kb.shape[0]
    step = max(1, _PAIR_CHUNK // max(nb, 1))
    for start in range(0, ka.shape[0], step):
        block = ka[start:start + step]
        ii, jj = np.nonzero((block[:, None] & kb[None, :]) == 0)
        ia_parts.append(ii + start)
        ib_parts.append(jj)
    ia = np.concatenate(ia_parts) if ia_parts else np.zeros(0, np.int64)
    ib = np.concatenate(ib_parts) if ib_parts else np.zeros(0, np.int64)
    out = ka[ia] | kb[ib]
    keep = _keep_mask_np(out, K, prune_gap)
    if keep is not None:
        ia, ib, out = ia[keep], ib[keep], out[keep]
    sign = wedge_sign_np(ka[ia], kb[ib], K)
    order = np.argsort(out, kind="stable")
    return ia[order], ib[order], sign[order], out[order]


def _reduce_sorted_np(keys, vals):
    if keys.shape[0] == 0:
        return keys, vals
    starts = np.flatnonzero(np.r_[True, keys[1:] != keys[:-1]])
    red = np.add.reduceat(vals, starts)
    rk = keys[starts]
    nz = red != 0.0
    return rk[nz], red[nz]


def wedge_real_np(ka, va, kb, vb, K, prune_gap=0):
    ia, ib, sign, out = wedge_pairs_np(ka, kb, K, prune_gap)
    return _reduce_sorted_np(out, sign * va[ia] * vb[ib])


def normalize_real_np(keys, vals):
    order = np.argsort(keys, kind="stable")
    return _reduce_sorted_np(keys[order], vals[order])


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if HAS_NUMBA:

    @njit(cache=True)
    def _popcount64(x):
        x = x - ((x >> 1) & 0x5555555555555555)
        x = (x & 0x3333333333333333) + ((x >> 2) & 0x3333333333333333)
        x = (x + (x >> 4)) & 0x0F0F0F0F0F0F0F0F
        return ((x * 0x0101010101010101) >> 56) & 0xFF

    @njit(cache=True)
    def _wedge_sign_nb(a, b):
        inv = 0
        rest = b
        while rest != 0:
            low = rest & (-rest)
            inv += _popcount64(a & ~((low << 1) - 1))
            rest ^= low
        return 1 - 2 * (inv & 1)

    @njit(cache=True)
    def _keep_nb(word, K, prune_gap):
        if prune_gap <= 0:
            return True
        gap = K - _popcount64(word)
        return gap == 0 or gap >= prune_gap

    @njit(cache=True)
    def _wedge_pairs_nb(ka, kb, K, prune_gap):
        na = ka.shape[0]
        nb = kb.shape[0]
        n = 0
        for i in range(na):
            for j in range(nb):
                if ka[i] & kb[j] == 0 and _keep_nb(ka[i] | kb[j], K, prune_gap):
                    n += 1
        ia = np.empty(n, np.int64)
        ib = np.empty(n, np.int64)
        sign = np.empty(n, np.int64)
        out = np.empty(n, np.int64)
        n = 0
        for i in range(na):
            for j in range(nb):
                w = ka[i] | kb[j]
                if ka[i] & kb[j] == 0 and _keep_nb(w, K, prune_gap):
                    ia[n] = i
                    ib[n] = j
                    sign[n] = _wedge_sign_nb(ka[i], kb[j])
                    out[n] = w
                    n += 1
        order = np.argsort(out, kind="mergesort")
        return ia[order], ib[order], sign[order], out[order]

    @njit(cache=True)
    def _reduce_sorted_nb(keys, vals):
        n = keys.shape[0]
        rk = np.empty(n, np.int64)
        rv = np.empty(n, np.float64)
        m = 0
        i = 0
        while i < n:
            k = keys[i]
            s = 0.0
            while i < n and keys[i] == k:
                s += vals[i]
                i += 1
            if s != 0.0:
                rk[m] = k
                rv[m] = s
                m += 1
        return rk[:m], rv[:m]

    @njit(cache=True)
    def _wedge_real_nb(ka, va, kb, vb, K, prune_gap):
        ia, ib, sign, out = _wedge_pairs_nb(ka, kb, K, prune_gap)
        n = out.shape[0]
        prod = np.empty(n, np.float64)
        for p in range(n):
            prod[p] = sign[p] * va[ia[p]] * vb[ib[p]]
        return _reduce_sorted_nb(out, prod)

    @njit(cache=True)
    def _normalize_real_nb(keys, vals):
        order = np.argsort(keys, kind="mergesort")
        return _reduce_sorted_nb(keys[order], vals[order])

    @njit(cache=True)
    def _wedge_sign_vec_nb(a, b):
        out = np.empty(a.shape[0], np.int64)
        for i in range(a.shape[0]):
            out[i] = _wedge_sign_nb(a[i], b[i])
        return out


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def _as_words(x):
    return np.ascontiguousarray(x, dtype=np.int64)


def wedge_pairs(ka, kb, K, prune_gap=0):
    ka, kb = _as_words(ka), _as_words(kb)
    if BACKEND == "numba":
        return _wedge_pairs_nb(ka, kb, K, prune_gap)
    return wedge_pairs_np(ka, kb, K, prune_gap)


def wedge_real(ka, va, kb, vb, K, prune_gap=0):
    """Product of two real forms given as sorted (words, coefficients)."""
    ka, kb = _as_words(ka), _as_words(kb)
    va = np.ascontiguousarray(va, dtype=np.float64)
    vb = np.ascontiguousarray(vb, dtype=np.float64)
    if BACKEND == "numba":
        return _wedge_real_nb(ka, va, kb, vb, K, prune_gap)
    return wedge_real_np(ka, va, kb, vb, K, prune_gap)


def normalize_real(keys, vals):
    """Sort words, merge duplicates, drop zero coefficients."""
    keys = _as_words(keys)
    vals = np.ascontiguousarray(vals, dtype=np.float64)
    if BACKEND == "numba":
        return _normalize_real_nb(keys, vals)
    return normalize_real_np(keys, vals)


def wedge_sign(a, b, K):
    """Vectorised sign of ``eps_a ^ eps_b`` for disjoint word arrays."""
    a = np.atleast_1d(_as_words(a))
    b = np.atleast_1d(_as_words(b))
    if BACKEND == "numba":
        a, b = np.broadcast_arrays(a, b)
        return _wedge_sign_vec_nb(np.ascontiguousarray(a), np.ascontiguousarray(b))
    return wedge_sign_np(a, b, K)


def popcount(words):
    return popcount_np(words)


def warmup():
    """Compile the numba kernels once (no-op on the numpy backend)."""
    if BACKEND != "numba":
        return
    k = np.array([1, 2], np.int64)
    v = np.array([1.0, 2.0])
    wedge_real(k, v, k, v, 2)
    wedge_pairs(k, k, 2)
    normalize_real(k, v)
    wedge_sign(k, k[::-1], 2)
