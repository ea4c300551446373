"""Finite discrete binary CSP instances, with N-queens as the bundled benchmark.

An instance holds ``n`` variables (indexed 0..n-1), one contiguous integer
domain per variable, and a symmetric binary consistency relation.  The
relation is given either intensionally (a named predicate over
``(i, a, j, b)``) or extensionally (per-pair sets of consistent value
tuples).  Assignments are plain lists of ints, one value per variable;
values follow the domains and are 1-based for N-queens.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

__all__ = [
    "CspError",
    "InvalidInstanceError",
    "MalformedAssignmentError",
    "CspInstance",
    "make_nqueens",
    "validate_solution",
    "random_state",
    "format_assignment",
    "parse_assignment",
]

Predicate = Callable[[int, int, int, int], bool]


class CspError(ValueError):
    """Base class for instance/assignment errors."""


class InvalidInstanceError(CspError):
    """Raised when an instance would violate its structural invariants."""


class MalformedAssignmentError(CspError):
    """Raised when an assignment does not fit its instance."""


def queens_consistent(i: int, a: int, j: int, b: int) -> bool:
    """Rows i and j may hold queens in columns a and b iff the columns
    differ and the rows are not a diagonal apart."""
    return a != b and abs(i - j) != abs(a - b)


# Registry of intensional predicates; the key doubles as the instance kind
# so fast paths can recognize queens-structured instances.
PREDICATES: dict[str, Predicate] = {"queens": queens_consistent}

QUEENS = "queens"
EXTENSIONAL = "extensional"


@dataclass(frozen=True)
class CspInstance:
    """Immutable binary CSP over contiguous integer domains.

    ``kind`` is either a registered predicate name (intensional form) or
    ``"extensional"``, in which case ``allowed`` maps an ordered index pair
    ``(i, j)`` with ``i < j`` to the set of consistent ``(a, b)`` tuples.
    Index pairs absent from ``allowed`` are unconstrained.  Instances are
    safe to share read-only between any number of threads.
    """

    n: int
    domains: tuple[range, ...]
    kind: str
    name: str
    allowed: Mapping[tuple[int, int], frozenset[tuple[int, int]]] = field(
        default_factory=dict
    )

    def __post_init__(self):
        if self.n < 1:
            raise InvalidInstanceError(f"need at least one variable, got n={self.n}")
        if len(self.domains) != self.n:
            raise InvalidInstanceError(
                f"expected {self.n} domains, got {len(self.domains)}"
            )
        for i, dom in enumerate(self.domains):
            if len(dom) == 0:
                raise InvalidInstanceError(f"domain of variable {i} is empty")
            if dom.step != 1:
                raise InvalidInstanceError(f"domain of variable {i} is not contiguous")
        if self.kind != EXTENSIONAL and self.kind not in PREDICATES:
            raise InvalidInstanceError(f"unknown predicate kind {self.kind!r}")

    @classmethod
    def intensional(
        cls, domains: Iterable[tuple[int, int]], kind: str, name: str = ""
    ) -> "CspInstance":
        doms = tuple(range(lo, hi + 1) for lo, hi in domains)
        return cls(n=len(doms), domains=doms, kind=kind, name=name or kind)

    @classmethod
    def extensional(
        cls,
        domains: Iterable[tuple[int, int]],
        allowed: Mapping[tuple[int, int], Iterable[tuple[int, int]]],
        name: str = "extensional",
    ) -> "CspInstance":
        """Build an instance from explicit consistent-tuple sets.

        ``allowed`` may use either index order; it is normalized to i < j
        with tuple values flipped accordingly, which keeps the stored
        relation symmetric by construction.
        """
        doms = tuple(range(lo, hi + 1) for lo, hi in domains)
        norm: dict[tuple[int, int], frozenset[tuple[int, int]]] = {}
        for (i, j), tuples in allowed.items():
            if i == j:
                raise InvalidInstanceError("constraints must relate distinct variables")
            if i > j:
                i, j, tuples = j, i, [(b, a) for a, b in tuples]
            if (i, j) in norm:
                raise InvalidInstanceError(f"duplicate constraint for pair ({i}, {j})")
            norm[(i, j)] = frozenset(tuples)
        inst = cls(
            n=len(doms), domains=doms, kind=EXTENSIONAL, name=name, allowed=norm
        )
        for i, j in norm:
            if not (0 <= i < inst.n and 0 <= j < inst.n):
                raise InvalidInstanceError(f"constraint pair ({i}, {j}) out of range")
        return inst

    @property
    def is_queens(self) -> bool:
        return self.kind == QUEENS

    def constrained(self, i: int, j: int) -> bool:
        """True if an explicit constraint relates variables i and j."""
        if i == j:
            return False
        if self.kind != EXTENSIONAL:
            return True
        return (min(i, j), max(i, j)) in self.allowed

    def consistent(self, i: int, a: int, j: int, b: int) -> bool:
        """Symmetric consistency check for variables i, j holding a, b."""
        if self.kind != EXTENSIONAL:
            return PREDICATES[self.kind](i, a, j, b)
        if i > j:
            i, j, a, b = j, i, b, a
        tuples = self.allowed.get((i, j))
        return tuples is None or (a, b) in tuples

    def check_assignment(self, values) -> list[int]:
        """Validate shape and domain membership; returns values as a list."""
        vals = list(values)
        if len(vals) != self.n:
            raise MalformedAssignmentError(
                f"assignment has {len(vals)} values, instance has {self.n} variables"
            )
        for i, v in enumerate(vals):
            if v not in self.domains[i]:
                raise MalformedAssignmentError(
                    f"value {v} of variable {i} outside domain "
                    f"[{self.domains[i][0]}, {self.domains[i][-1]}]"
                )
        return vals


def make_nqueens(n: int) -> CspInstance:
    """N-queens as a binary CSP: variable i is the column (1..n) of the
    queen in row i; rows clash on equal columns or equal diagonals."""
    if n < 1:
        raise InvalidInstanceError(f"queens instance needs n >= 1, got {n}")
    return CspInstance.intensional(
        domains=[(1, n)] * n, kind=QUEENS, name=f"{n}-queens"
    )


def validate_solution(inst: CspInstance, values) -> bool:
    """True iff ``values`` fits the instance and satisfies every
    constrained pair.  Malformed input is simply not a solution; this
    stays total because callers feed it untrusted data (e.g. assignments
    claimed by remote workers)."""
    try:
        vals = inst.check_assignment(values)
    except MalformedAssignmentError:
        return False
    for i in range(inst.n):
        for j in range(i + 1, inst.n):
            if inst.constrained(i, j) and not inst.consistent(i, vals[i], j, vals[j]):
                return False
    return True


def random_state(inst: CspInstance, rng: random.Random) -> list[int]:
    """Independent uniform draw from each domain; deterministic for a
    seeded generator."""
    return [rng.randrange(dom[0], dom[-1] + 1) for dom in inst.domains]


def format_assignment(values) -> str:
    """One-line text form: comma-separated values, e.g. ``2,4,1,3``."""
    return ",".join(str(v) for v in values)


def parse_assignment(text: str) -> list[int]:
    try:
        return [int(part) for part in text.strip().split(",")]
    except ValueError as exc:
        raise MalformedAssignmentError(f"cannot parse assignment {text!r}") from exc
