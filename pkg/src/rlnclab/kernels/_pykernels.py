"""Numpy backend: the same primitives as ``_ckernels``, vectorised across rows."""

from __future__ import annotations

import numpy as np

_BATCH = 1 << 16


def _rank_is_full(mats: np.ndarray, add, mul, neg, w: int) -> np.ndarray:
    """Fraction-free elimination on a stack ``mats[n, w, d]``; True where rank == w."""
    n, _, d = mats.shape
    mats = mats.copy()
    rank = np.zeros(n, dtype=np.int64)
    rows = np.arange(w)
    idx = np.arange(n)
    for c in range(d):
        cand = (mats[:, :, c] != 0) & (rows[None, :] >= rank[:, None])
        has = cand.any(axis=1)
        if not has.any():
            continue
        piv = np.argmax(cand, axis=1)
        h = idx[has]
        top, pr = rank[has], piv[has]
        upper = mats[h, top].copy()
        mats[h, top] = mats[h, pr]
        mats[h, pr] = upper
        pivot_row = mats[idx, np.minimum(rank, w - 1)]  # (n, d)
        pv = pivot_row[:, c]
        for i in range(w):
            a = mats[:, i, c]
            act = has & (i > rank) & (a != 0)
            if act.any():
                new = add[mul[pv[:, None], mats[:, i, :]], neg[mul[a[:, None], pivot_row]]]
                mats[act, i, :] = new[act]
        rank += has
    return rank == w


def batch_outcomes(prog, add, mul, neg, coeffs, masks):
    n = len(coeffs)
    out = np.zeros(n, dtype=np.uint32)
    for lo in range(0, n, _BATCH):
        hi = min(lo + _BATCH, n)
        out[lo:hi] = _batch(prog, add, mul, neg, coeffs[lo:hi], masks[lo:hi])
    return out


def _batch(prog, add, mul, neg, coeffs, masks):
    n = len(coeffs)
    w = prog.rate
    kern = np.zeros((prog.n_slots, w, n), dtype=np.int32)
    for k in range(w):
        kern[k, k, :] = 1
    for j in range(len(prog.out_slot)):
        acc = np.zeros((w, n), dtype=np.int32)
        for e in range(prog.in_ptr[j], prog.in_ptr[j + 1]):
            a = coeffs[:, prog.in_pair[e]]
            acc = add[acc, mul[a[None, :], kern[prog.in_slot[e]]]]
        alive = ((masks >> int(prog.erase_bit[j])) & 1) == 0
        kern[prog.out_slot[j]] = np.where(alive[None, :], acc, 0)
    result = np.zeros(n, dtype=np.uint32)
    for s in range(prog.n_sinks):
        cols = prog.sink_slot[prog.sink_ptr[s] : prog.sink_ptr[s + 1]]
        if len(cols) < w:
            continue
        mats = np.transpose(kern[cols], (2, 1, 0))  # (n, w, d)
        ok = _rank_is_full(mats, add, mul, neg, w)
        result |= ok.astype(np.uint32) << np.uint32(s)
    return result


def enumerate_histogram(prog, add, mul, neg, q, start, stop, mask):
    hist = np.zeros(1 << prog.n_sinks, dtype=np.int64)
    powers = np.array([q**k for k in range(prog.n_pairs)], dtype=np.int64)
    for lo in range(start, stop, _BATCH):
        hi = min(lo + _BATCH, stop)
        index = np.arange(lo, hi, dtype=np.int64)
        coeffs = (index[:, None] // powers[None, :]) % q
        masks = np.full(hi - lo, mask, dtype=np.int64)
        outcomes = _batch(prog, add, mul, neg, coeffs, masks)
        hist += np.bincount(outcomes, minlength=len(hist)).astype(np.int64)
    return hist
