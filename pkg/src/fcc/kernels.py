"""Compiled sparse kernels.

All kernels are deterministic and thread-count independent: every output
slot is written by exactly one row/edge computation whose internal summation
order is fixed by the input layout, so results are bit-identical from run to
run and across worker counts.  Parallel kernels partition work by row and
keep one dense scratch row per thread.

Conventions: ``indptr`` is int64, ``indices`` is int32, values are float64.
Column indices within a row may be unsorted; their order is reproducible
(first-encounter order of the producing product).
"""

import numpy as np
from numba import get_num_threads, get_thread_id, njit, prange


@njit(cache=True)
def find_slots(indptr, indices, e_rows, e_cols, out):
    """Locate the storage slot of each (row, col) entry by scanning its row."""
    for e in range(e_rows.size):
        i = e_rows[e]
        j = e_cols[e]
        slot = np.int64(-1)
        for t in range(indptr[i], indptr[i + 1]):
            if indices[t] == j:
                slot = t
                break
        out[e] = slot


@njit(cache=True)
def spgemm_fused(ap, ai, ad, bp, bi, bd, nrows, ncols, bound):
    """Single-pass row-by-row sparse product C = A @ B (Gustavson).

    Serial fast path: pattern and values in one sweep.  ``bound`` must be an
    upper bound on nnz(C); the exact per-row walk count works.  A dense
    accumulator of length ncols is reused across rows; emitted column order
    within a row is first-encounter order.
    """
    cp = np.zeros(nrows + 1, np.int64)
    ci = np.empty(bound, np.int32)
    cd = np.empty(bound, np.float64)
    mark = np.full(ncols, -1, np.int64)
    acc = np.zeros(ncols, np.float64)
    pos = np.int64(0)
    for i in range(nrows):
        p0 = pos
        for t in range(ap[i], ap[i + 1]):
            av = ad[t]
            k = ai[t]
            for u in range(bp[k], bp[k + 1]):
                j = bi[u]
                if mark[j] != i:
                    mark[j] = i
                    ci[pos] = j
                    pos += 1
                    acc[j] = av * bd[u]
                else:
                    acc[j] += av * bd[u]
        for t in range(p0, pos):
            cd[t] = acc[ci[t]]
        cp[i + 1] = pos
    return cp, ci[:pos].copy(), cd[:pos].copy()


@njit(cache=True, parallel=True)
def spgemm_count(ap, ai, bp, bi, nrows, ncols):
    """Pass 1 of the parallel product: nonzeros per output row."""
    nt = get_num_threads()
    marks = np.full((nt, ncols), -1, np.int64)
    counts = np.zeros(nrows + 1, np.int64)
    for i in prange(nrows):
        mark = marks[get_thread_id()]
        c = np.int64(0)
        for t in range(ap[i], ap[i + 1]):
            k = ai[t]
            for u in range(bp[k], bp[k + 1]):
                j = bi[u]
                if mark[j] != i:
                    mark[j] = i
                    c += 1
        counts[i + 1] = c
    return counts


@njit(cache=True, parallel=True)
def spgemm_fill(ap, ai, ad, bp, bi, bd, cp, ci, cd, ncols):
    """Pass 2 of the parallel product: fill pattern and values per row.

    Emits the same first-encounter column order as the fused kernel, so the
    two paths produce bit-identical matrices.
    """
    nt = get_num_threads()
    marks = np.full((nt, ncols), -1, np.int64)
    accs = np.zeros((nt, ncols), np.float64)
    nrows = cp.size - 1
    for i in prange(nrows):
        tid = get_thread_id()
        mark = marks[tid]
        acc = accs[tid]
        pos = cp[i]
        for t in range(ap[i], ap[i + 1]):
            av = ad[t]
            k = ai[t]
            for u in range(bp[k], bp[k + 1]):
                j = bi[u]
                if mark[j] != i:
                    mark[j] = i
                    ci[pos] = j
                    pos += 1
                    acc[j] = av * bd[u]
                else:
                    acc[j] += av * bd[u]
        for t in range(cp[i], pos):
            cd[t] = acc[ci[t]]


@njit(cache=True, parallel=True)
def spgemm_refill(ap, ai, ad, bp, bi, bd, cp, ci, cd, ncols):
    """Recompute values of C = A @ B into a known pattern (cp, ci).

    The pattern must cover the structural product of (A, B); pattern entries
    outside the reachable set become zero.  Much cheaper than rediscovering
    the pattern when only values changed.
    """
    nt = get_num_threads()
    accs = np.zeros((nt, ncols), np.float64)
    nrows = cp.size - 1
    for i in prange(nrows):
        acc = accs[get_thread_id()]
        for t in range(ap[i], ap[i + 1]):
            av = ad[t]
            k = ai[t]
            for u in range(bp[k], bp[k + 1]):
                acc[bi[u]] += av * bd[u]
        for t in range(cp[i], cp[i + 1]):
            j = ci[t]
            cd[t] = acc[j]
            acc[j] = 0.0


@njit(cache=True, parallel=True)
def sddmm(zp, zi, zd, wp, wi, wd, e_rowptr, e_cols, out, ncols):
    """Per-edge row dot products: out[e] = <Z[row(e), :], W[col(e), :]>.

    Edges must be grouped by row via ``e_rowptr`` (edges of row i occupy
    positions e_rowptr[i]:e_rowptr[i+1] of ``e_cols``).  Row i of Z is
    scattered into a dense per-thread scratch once per row; each edge then
    walks row col(e) of W.  The inner loop is branchless: absent scratch
    positions hold zero and contribute nothing.
    """
    nt = get_num_threads()
    scratches = np.zeros((nt, ncols), np.float64)
    n = e_rowptr.size - 1
    for i in prange(n):
        if e_rowptr[i] == e_rowptr[i + 1]:
            continue
        scratch = scratches[get_thread_id()]
        for t in range(zp[i], zp[i + 1]):
            scratch[zi[t]] = zd[t]
        for e in range(e_rowptr[i], e_rowptr[i + 1]):
            j = e_cols[e]
            acc = 0.0
            for u in range(wp[j], wp[j + 1]):
                acc += scratch[wi[u]] * wd[u]
            out[e] = acc
        for t in range(zp[i], zp[i + 1]):
            scratch[zi[t]] = 0.0


@njit(cache=True)
def assign_replacement_targets(vacated_ids, u, out):
    """Sequentially assign corrupted matches to vacated targets.

    Match t (in order) picks, uniformly via the pre-drawn variate ``u[t]``,
    one still-free vacated target whose identity differs from its own;
    ``out[t]`` receives the chosen position or -1 when none remains.
    """
    c = vacated_ids.size
    free = np.ones(c, np.bool_)
    for t in range(c):
        cid = vacated_ids[t]
        valid = 0
        for x in range(c):
            if free[x] and vacated_ids[x] != cid:
                valid += 1
        if valid == 0:
            out[t] = -1
            continue
        k = np.int64(u[t] * valid)
        if k >= valid:
            k = valid - 1
        seen = np.int64(0)
        for x in range(c):
            if free[x] and vacated_ids[x] != cid:
                if seen == k:
                    out[t] = x
                    free[x] = False
                    break
                seen += 1
