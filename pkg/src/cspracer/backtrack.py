"""Deterministic depth-first backtracking baseline.

Chronological search: variables in index order, values in ascending order,
pruning a placement as soon as it is inconsistent with any earlier
variable.  Doubles as the exhaustive oracle for small instances via
:func:`count_solutions`.  Queens instances use the kernel backend; other
instances take the generic path, with identical traversal order and
attempt accounting.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import _kernels
from .core import CspInstance

__all__ = ["BacktrackResult", "backtrack_solve", "count_solutions"]


@dataclass(frozen=True)
class BacktrackResult:
    """First solution (or None) plus the machine-independent work measure:
    the number of (variable, value) placements tested."""

    assignment: list[int] | None
    attempts: int


def _consistent_with_earlier(inst: CspInstance, vals, row: int, value: int) -> bool:
    for j in range(row):
        if inst.constrained(row, j) and not inst.consistent(row, value, j, vals[j]):
            return False
    return True


def _generic_first(inst: CspInstance) -> tuple[list[int] | None, int]:
    n = inst.n
    cur = [0] * n
    attempts = 0
    row = 0
    pos = 0  # index into the current row's domain
    while row >= 0:
        dom = inst.domains[row]
        placed = False
        while pos < len(dom):
            attempts += 1
            v = dom[pos]
            if _consistent_with_earlier(inst, cur, row, v):
                cur[row] = v
                if row == n - 1:
                    return list(cur), attempts
                placed = True
                break
            pos += 1
        if placed:
            row += 1
            pos = 0
        else:
            row -= 1
            if row >= 0:
                pos = inst.domains[row].index(cur[row]) + 1
    return None, attempts


def _generic_count(inst: CspInstance, limit: int) -> tuple[int, int]:
    n = inst.n
    cur = [0] * n
    attempts = 0
    count = 0
    row = 0
    pos = 0
    while row >= 0:
        dom = inst.domains[row]
        placed = False
        while pos < len(dom):
            attempts += 1
            v = dom[pos]
            if _consistent_with_earlier(inst, cur, row, v):
                if row == n - 1:
                    count += 1
                    if limit > 0 and count >= limit:
                        return count, attempts
                else:
                    cur[row] = v
                    placed = True
                    break
            pos += 1
        if placed:
            row += 1
            pos = 0
        else:
            row -= 1
            if row >= 0:
                pos = inst.domains[row].index(cur[row]) + 1
    return count, attempts


def backtrack_solve(inst: CspInstance) -> BacktrackResult:
    """First complete consistent assignment in lexicographic DFS order,
    or None when the tree is exhausted.  Fully deterministic."""
    if inst.is_queens:
        assignment, attempts = _kernels.active.backtrack_first(inst.n)
    else:
        assignment, attempts = _generic_first(inst)
    return BacktrackResult(assignment=assignment, attempts=attempts)


def count_solutions(inst: CspInstance, limit: int | None = None) -> int:
    """Number of complete consistent assignments, capped at ``limit`` when
    given.  Intended for small instances; the tree is walked exhaustively."""
    if limit is not None and limit < 1:
        raise ValueError(f"limit must be positive or None, got {limit}")
    cap = 0 if limit is None else limit
    if inst.is_queens:
        count, _ = _kernels.active.count_solutions(inst.n, cap)
    else:
        count, _ = _generic_count(inst, cap)
    return count
