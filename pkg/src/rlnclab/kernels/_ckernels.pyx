# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled backend for the enumeration and simulation hot loops."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free
from libc.string cimport memset

cnp.import_array()

ctypedef cnp.int32_t i32
ctypedef cnp.int64_t i64


cdef struct Ctx:
    int w
    int q
    int n_slots
    int n_order
    int n_sinks
    const i32* out_slot
    const i32* erase_bit
    const i32* in_ptr
    const i32* in_slot
    const i32* in_pair
    const i32* sink_ptr
    const i32* sink_slot
    const i32* add
    const i32* mul
    const i32* neg
    int* kern
    int* mat


cdef inline int _rank(Ctx* c, int d) noexcept nogil:
    cdef int w = c.w, q = c.q
    cdef int* m = c.mat
    cdef int r = 0, col, i, k, piv, pv, a, tmp
    for col in range(d):
        piv = -1
        for i in range(r, w):
            if m[i * d + col] != 0:
                piv = i
                break
        if piv < 0:
            continue
        if piv != r:
            for k in range(d):
                tmp = m[r * d + k]
                m[r * d + k] = m[piv * d + k]
                m[piv * d + k] = tmp
        pv = m[r * d + col]
        for i in range(r + 1, w):
            a = m[i * d + col]
            if a != 0:
                for k in range(col, d):
                    m[i * d + k] = c.add[c.mul[pv * q + m[i * d + k]] * q
                                         + c.neg[c.mul[a * q + m[r * d + k]]]]
        r += 1
        if r == w:
            break
    return r


cdef unsigned int _outcome(Ctx* c, const i64* coef, i64 mask) noexcept nogil:
    cdef int w = c.w, q = c.q
    cdef int* kern = c.kern
    cdef int j, e, r, s, col, d, base, src, a
    cdef unsigned int result = 0
    memset(kern, 0, c.n_slots * w * sizeof(int))
    for r in range(w):
        kern[r * w + r] = 1
    for j in range(c.n_order):
        if (mask >> c.erase_bit[j]) & 1:
            continue  # active kernel of an erased channel stays zero
        base = c.out_slot[j] * w
        for e in range(c.in_ptr[j], c.in_ptr[j + 1]):
            a = <int>coef[c.in_pair[e]]
            if a == 0:
                continue
            src = c.in_slot[e] * w
            for r in range(w):
                kern[base + r] = c.add[kern[base + r] * q + c.mul[a * q + kern[src + r]]]
    for s in range(c.n_sinks):
        d = c.sink_ptr[s + 1] - c.sink_ptr[s]
        if d < w:
            continue
        for col in range(d):
            src = c.sink_slot[c.sink_ptr[s] + col] * w
            for r in range(w):
                c.mat[r * d + col] = kern[src + r]
        if _rank(c, d) == w:
            result |= (<unsigned int>1) << s
    return result


cdef int _setup(Ctx* c, prog, const i32[:, ::1] add, const i32[:, ::1] mul, const i32[::1] neg,
                const i32[::1] out_slot, const i32[::1] erase_bit, const i32[::1] in_ptr,
                const i32[::1] in_slot, const i32[::1] in_pair, const i32[::1] sink_ptr,
                const i32[::1] sink_slot) except -1:
    cdef int max_d = 0, s
    c.w = prog.rate
    c.q = add.shape[0]
    c.n_slots = prog.n_slots
    c.n_order = out_slot.shape[0]
    c.n_sinks = prog.n_sinks
    c.out_slot = &out_slot[0] if out_slot.shape[0] else NULL
    c.erase_bit = &erase_bit[0] if erase_bit.shape[0] else NULL
    c.in_ptr = &in_ptr[0]
    c.in_slot = &in_slot[0] if in_slot.shape[0] else NULL
    c.in_pair = &in_pair[0] if in_pair.shape[0] else NULL
    c.sink_ptr = &sink_ptr[0]
    c.sink_slot = &sink_slot[0] if sink_slot.shape[0] else NULL
    c.add = &add[0, 0]
    c.mul = &mul[0, 0]
    c.neg = &neg[0]
    for s in range(c.n_sinks):
        if sink_ptr[s + 1] - sink_ptr[s] > max_d:
            max_d = sink_ptr[s + 1] - sink_ptr[s]
    c.kern = <int*>malloc(c.n_slots * c.w * sizeof(int))
    c.mat = <int*>malloc((max_d * c.w + 1) * sizeof(int))
    if c.kern == NULL or c.mat == NULL:
        free(c.kern)
        free(c.mat)
        raise MemoryError()
    return 0


cdef void _teardown(Ctx* c) noexcept:
    free(c.kern)
    free(c.mat)


def batch_outcomes(prog, add, mul, neg, coeffs, masks):
    cdef Ctx c
    cdef const i64[:, ::1] cf = coeffs
    cdef const i64[::1] mk = masks
    cdef Py_ssize_t n = cf.shape[0], t
    out = np.zeros(n, dtype=np.uint32)
    cdef cnp.uint32_t[::1] res = out
    _setup(&c, prog, add, mul, neg, prog.out_slot, prog.erase_bit, prog.in_ptr,
           prog.in_slot, prog.in_pair, prog.sink_ptr, prog.sink_slot)
    try:
        with nogil:
            for t in range(n):
                res[t] = _outcome(&c, &cf[t, 0], mk[t])
    finally:
        _teardown(&c)
    return out


def enumerate_histogram(prog, add, mul, neg, long long q, long long start, long long stop, long long mask):
    cdef Ctx c
    cdef int n_pairs = prog.n_pairs
    cdef int k
    cdef long long t, rest
    cdef i64* digits
    hist = np.zeros(1 << prog.n_sinks, dtype=np.int64)
    cdef i64[::1] h = hist
    if stop <= start:
        return hist
    _setup(&c, prog, add, mul, neg, prog.out_slot, prog.erase_bit, prog.in_ptr,
           prog.in_slot, prog.in_pair, prog.sink_ptr, prog.sink_slot)
    digits = <i64*>malloc((n_pairs + 1) * sizeof(i64))
    if digits == NULL:
        _teardown(&c)
        raise MemoryError()
    try:
        with nogil:
            rest = start
            for k in range(n_pairs):
                digits[k] = rest % q
                rest = rest // q
            for t in range(start, stop):
                h[_outcome(&c, digits, mask)] += 1
                k = 0
                while k < n_pairs:
                    digits[k] += 1
                    if digits[k] < q:
                        break
                    digits[k] = 0
                    k += 1
    finally:
        free(digits)
        _teardown(&c)
    return hist
