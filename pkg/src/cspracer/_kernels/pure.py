"""Pure-Python queens-geometry kernels.

Mirror of the compiled extension in ``_queens.pyx``; both expose the same
functions with identical results, so either can back the search and the
baseline.  Values are 1-based columns, rows are 0-based indices.  Conflict
counts use column / diagonal / anti-diagonal occupancy counters: a counter
holding c queens contributes c*(c-1)/2 clashing pairs.
"""

from __future__ import annotations

import numpy as np

NAME = "pure"


def conflicts(values) -> int:
    """Number of clashing unordered queen pairs in O(n)."""
    n = len(values)
    col = [0] * (n + 1)
    diag = [0] * (2 * n)
    anti = [0] * (2 * n)
    for i in range(n):
        v = values[i]
        col[v] += 1
        diag[i - v + n] += 1
        anti[i + v - 1] += 1
    total = 0
    for counter in (col, diag, anti):
        for c in counter:
            if c > 1:
                total += c * (c - 1) // 2
    return total


def neighbor_evals(values):
    """Resulting conflict count of every single-queen move.

    Returns an int64 array of length n*(n-1) laid out in canonical order:
    ascending row, then ascending target column skipping the current one.
    """
    n = len(values)
    col = [0] * (n + 1)
    diag = [0] * (2 * n)
    anti = [0] * (2 * n)
    for i in range(n):
        v = values[i]
        col[v] += 1
        diag[i - v + n] += 1
        anti[i + v - 1] += 1
    total = 0
    for counter in (col, diag, anti):
        for c in counter:
            if c > 1:
                total += c * (c - 1) // 2
    out = []
    for i in range(n):
        v = values[i]
        # conflicts the row-i queen participates in right now; removing it
        # leaves `base`, and a new column w adds back its clash count
        own = (col[v] - 1) + (diag[i - v + n] - 1) + (anti[i + v - 1] - 1)
        base = total - own
        for w in range(1, n + 1):
            if w == v:
                continue
            out.append(base + col[w] + diag[i - w + n] + anti[i + w - 1])
    return np.asarray(out, dtype=np.int64)


def move_delta(values, var: int, new_value: int) -> int:
    """Conflict-count change if row ``var`` moved to ``new_value``."""
    n = len(values)
    v = values[var]
    old_clashes = 0
    new_clashes = 0
    for j in range(n):
        if j == var:
            continue
        b = values[j]
        d = var - j
        if v == b or d == v - b or d == b - v:
            old_clashes += 1
        if new_value == b or d == new_value - b or d == b - new_value:
            new_clashes += 1
    return new_clashes - old_clashes


def backtrack_first(n: int):
    """First solution under row-order DFS with ascending columns.

    Returns ``(solution, attempts)`` where attempts counts every (row,
    column) placement tested, or ``(None, attempts)`` when the tree is
    exhausted.
    """
    col = [False] * (n + 1)
    diag = [False] * (2 * n)
    anti = [False] * (2 * n)
    cur = [0] * n
    attempts = 0
    row = 0
    v = 1
    while row >= 0:
        placed = False
        while v <= n:
            attempts += 1
            if not (col[v] or diag[row - v + n] or anti[row + v - 1]):
                cur[row] = v
                if row == n - 1:
                    return list(cur), attempts
                col[v] = diag[row - v + n] = anti[row + v - 1] = True
                placed = True
                break
            v += 1
        if placed:
            row += 1
            v = 1
        else:
            row -= 1
            if row >= 0:
                w = cur[row]
                col[w] = diag[row - w + n] = anti[row + w - 1] = False
                v = w + 1
    return None, attempts


def count_solutions(n: int, limit: int = 0):
    """Exhaustive DFS solution count, capped at ``limit`` when > 0.

    Returns ``(count, attempts)`` with the same traversal order and attempt
    accounting as :func:`backtrack_first`.
    """
    col = [False] * (n + 1)
    diag = [False] * (2 * n)
    anti = [False] * (2 * n)
    cur = [0] * n
    attempts = 0
    count = 0
    row = 0
    v = 1
    while row >= 0:
        placed = False
        while v <= n:
            attempts += 1
            if not (col[v] or diag[row - v + n] or anti[row + v - 1]):
                if row == n - 1:
                    count += 1
                    if limit > 0 and count >= limit:
                        return count, attempts
                else:
                    cur[row] = v
                    col[v] = diag[row - v + n] = anti[row + v - 1] = True
                    placed = True
                    break
            v += 1
        if placed:
            row += 1
            v = 1
        else:
            row -= 1
            if row >= 0:
                w = cur[row]
                col[w] = diag[row - w + n] = anti[row + w - 1] = False
                v = w + 1
    return count, attempts
