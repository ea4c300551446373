"""Compiled queens-geometry kernels.

Same contract as ``pure.py``: conflict counting and neighbor scoring via
column / diagonal / anti-diagonal occupancy counters, plus the row-order
DFS baseline.  The O(n^2) neighbor scan and the DFS release the GIL, so
racing search threads overlap on multi-core hosts.
"""

import numpy as np

NAME = "compiled"


cdef inline Py_ssize_t _fill_counters(const long long[::1] vals,
                                      long long[::1] col,
                                      long long[::1] diag,
                                      long long[::1] anti,
                                      Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, total = 0
    cdef long long v, c
    for i in range(n):
        v = vals[i]
        col[v] += 1
        diag[i - v + n] += 1
        anti[i + v - 1] += 1
    for i in range(n + 1):
        c = col[i]
        if c > 1:
            total += c * (c - 1) // 2
    for i in range(2 * n):
        c = diag[i]
        if c > 1:
            total += c * (c - 1) // 2
        c = anti[i]
        if c > 1:
            total += c * (c - 1) // 2
    return total


def conflicts(values):
    """Number of clashing unordered queen pairs in O(n)."""
    cdef long long[::1] vals = np.ascontiguousarray(values, dtype=np.int64)
    cdef Py_ssize_t n = vals.shape[0]
    cdef long long[::1] col = np.zeros(n + 1, dtype=np.int64)
    cdef long long[::1] diag = np.zeros(2 * n, dtype=np.int64)
    cdef long long[::1] anti = np.zeros(2 * n, dtype=np.int64)
    cdef Py_ssize_t total
    with nogil:
        total = _fill_counters(vals, col, diag, anti, n)
    return total


def neighbor_evals(values):
    """Resulting conflict count of every single-queen move.

    Returns an int64 array of length n*(n-1) in canonical order: ascending
    row, then ascending target column skipping the current one.
    """
    cdef long long[::1] vals = np.ascontiguousarray(values, dtype=np.int64)
    cdef Py_ssize_t n = vals.shape[0]
    out_arr = np.empty(n * (n - 1), dtype=np.int64)
    cdef long long[::1] out = out_arr
    cdef long long[::1] col = np.zeros(n + 1, dtype=np.int64)
    cdef long long[::1] diag = np.zeros(2 * n, dtype=np.int64)
    cdef long long[::1] anti = np.zeros(2 * n, dtype=np.int64)
    cdef Py_ssize_t i, k = 0, total
    cdef long long v, w, base
    with nogil:
        total = _fill_counters(vals, col, diag, anti, n)
        for i in range(n):
            v = vals[i]
            base = (total - (col[v] - 1) - (diag[i - v + n] - 1)
                    - (anti[i + v - 1] - 1))
            for w in range(1, n + 1):
                if w == v:
                    continue
                out[k] = base + col[w] + diag[i - w + n] + anti[i + w - 1]
                k += 1
    return out_arr


def move_delta(values, var, new_value):
    """Conflict-count change if row ``var`` moved to ``new_value``."""
    cdef long long[::1] vals = np.ascontiguousarray(values, dtype=np.int64)
    cdef Py_ssize_t n = vals.shape[0]
    cdef Py_ssize_t i = var, j
    cdef long long v = vals[i], nv = new_value, b, d
    cdef long long old_clashes = 0, new_clashes = 0
    with nogil:
        for j in range(n):
            if j == i:
                continue
            b = vals[j]
            d = i - j
            if v == b or d == v - b or d == b - v:
                old_clashes += 1
            if nv == b or d == nv - b or d == b - nv:
                new_clashes += 1
    return new_clashes - old_clashes


def backtrack_first(n):
    """First solution under row-order DFS with ascending columns.

    Returns ``(solution, attempts)``; attempts counts every (row, column)
    placement tested.
    """
    cdef Py_ssize_t nn = n
    cdef unsigned char[::1] col = np.zeros(nn + 1, dtype=np.uint8)
    cdef unsigned char[::1] diag = np.zeros(2 * nn, dtype=np.uint8)
    cdef unsigned char[::1] anti = np.zeros(2 * nn, dtype=np.uint8)
    cur_arr = np.zeros(nn, dtype=np.int64)
    cdef long long[::1] cur = cur_arr
    cdef long long attempts = 0
    cdef Py_ssize_t row = 0
    cdef long long v = 1, w
    cdef bint placed, found = False
    with nogil:
        while row >= 0:
            placed = False
            while v <= nn:
                attempts += 1
                if not (col[v] or diag[row - v + nn] or anti[row + v - 1]):
                    cur[row] = v
                    if row == nn - 1:
                        found = True
                        break
                    col[v] = diag[row - v + nn] = anti[row + v - 1] = 1
                    placed = True
                    break
                v += 1
            if found:
                break
            if placed:
                row += 1
                v = 1
            else:
                row -= 1
                if row >= 0:
                    w = cur[row]
                    col[w] = diag[row - w + nn] = anti[row + w - 1] = 0
                    v = w + 1
    if found:
        return [int(x) for x in cur_arr], int(attempts)
    return None, int(attempts)


def count_solutions(n, limit=0):
    """Exhaustive DFS solution count, capped at ``limit`` when > 0.

    Returns ``(count, attempts)`` with the same traversal order and attempt
    accounting as :func:`backtrack_first`.
    """
    cdef Py_ssize_t nn = n
    cdef long long cap = limit
    cdef unsigned char[::1] col = np.zeros(nn + 1, dtype=np.uint8)
    cdef unsigned char[::1] diag = np.zeros(2 * nn, dtype=np.uint8)
    cdef unsigned char[::1] anti = np.zeros(2 * nn, dtype=np.uint8)
    cdef long long[::1] cur = np.zeros(nn, dtype=np.int64)
    cdef long long attempts = 0, count = 0
    cdef Py_ssize_t row = 0
    cdef long long v = 1, w
    cdef bint placed, capped = False
    with nogil:
        while row >= 0:
            placed = False
            while v <= nn:
                attempts += 1
                if not (col[v] or diag[row - v + nn] or anti[row + v - 1]):
                    if row == nn - 1:
                        count += 1
                        if cap > 0 and count >= cap:
                            capped = True
                            break
                    else:
                        cur[row] = v
                        col[v] = diag[row - v + nn] = anti[row + v - 1] = 1
                        placed = True
                        break
                v += 1
            if capped:
                break
            if placed:
                row += 1
                v = 1
            else:
                row -= 1
                if row >= 0:
                    w = cur[row]
                    col[w] = diag[row - w + nn] = anti[row + w - 1] = 0
                    v = w + 1
    return int(count), int(attempts)
