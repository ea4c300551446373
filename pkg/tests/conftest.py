"""Shared oracles for the test suite.

The brute-force counter here is deliberately written against the
instance's own pair predicates, with none of the counting tricks the
kernels use, so kernel and search results can be checked against an
independent implementation.
"""

from __future__ import annotations

import random

from cspracer.core import CspInstance


def brute_force_eval(inst: CspInstance, values) -> int:
    """Count violated constraints over distinct pairs, the slow way."""
    bad = 0
    for i in range(inst.n):
        for j in range(i + 1, inst.n):
            if inst.constrained(i, j) and not inst.consistent(i, values[i], j, values[j]):
                bad += 1
    return bad


def random_queens_state(n: int, rng: random.Random) -> list[int]:
    return [rng.randint(1, n) for _ in range(n)]
