"""Evaluation-guided local search.

The evaluation of an assignment is its number of dissatisfied constraints
(0 means solved).  One search step scores every single-variable value
change — all sum(|D_i| - 1) neighbors — and moves to a uniformly chosen
best one, with three escape valves against local optima: an occasional
uniformly random move (random walk), a jump into the next-higher evaluation
tier after too many non-improving steps, and a full restart from a fresh
random state after ``max_tries`` steps.

Queens instances dispatch the hot scans to the active kernel backend; the
generic path below covers every other binary CSP.  Both feed the same
selection code, so the backend never changes the random choices made and
outcomes are reproducible per (instance, config, seed) regardless of
whether the compiled extension is present.
"""

from __future__ import annotations

import enum
import random
import time
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import _kernels
from .core import CspInstance, MalformedAssignmentError, random_state, validate_solution

__all__ = [
    "EvalValue",
    "Move",
    "SearchConfig",
    "SearchStats",
    "SearchOutcome",
    "SolveStatus",
    "EscapeState",
    "eval_global",
    "eval_delta",
    "neighbors",
    "neighbor_eval_array",
    "best_move",
    "gef_solve",
    "default_config",
]

# A state's evaluation: count of violated constraints, solution iff 0.
EvalValue = int


class SolveStatus(enum.Enum):
    SOLVED = "solved"
    UNSOLVED = "unsolved"
    STOPPED = "stopped"


@dataclass(frozen=True)
class Move:
    """A single-variable change and the evaluation of the state it reaches."""

    var: int
    new_value: int
    resulting_eval: EvalValue


@dataclass(frozen=True)
class SearchConfig:
    """Knobs of one search run.

    ``max_restarts = 0`` means unbounded: keep restarting until solved or
    externally stopped.
    """

    random_walk_prob: float = 0.02
    max_tries: int = 1000
    max_restarts: int = 0
    stagnation_limit: int = 20
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.random_walk_prob <= 1.0:
            raise ValueError(f"random_walk_prob {self.random_walk_prob} not in [0, 1]")
        if self.max_tries < 1:
            raise ValueError(f"max_tries must be >= 1, got {self.max_tries}")
        if self.max_restarts < 0:
            raise ValueError(f"max_restarts must be >= 0, got {self.max_restarts}")
        if self.stagnation_limit < 1:
            raise ValueError(f"stagnation_limit must be >= 1, got {self.stagnation_limit}")

    def with_seed(self, seed: int) -> "SearchConfig":
        return SearchConfig(
            random_walk_prob=self.random_walk_prob,
            max_tries=self.max_tries,
            max_restarts=self.max_restarts,
            stagnation_limit=self.stagnation_limit,
            seed=seed,
        )


def default_config(n: int, seed: int = 0) -> SearchConfig:
    """Defaults scaled to instance size n."""
    return SearchConfig(
        random_walk_prob=0.02,
        max_tries=100 * n,
        max_restarts=0,
        stagnation_limit=2 * n,
        seed=seed,
    )


@dataclass
class SearchStats:
    steps: int = 0
    restarts: int = 0
    random_walk_steps: int = 0
    escape_steps: int = 0
    wall_millis: float = 0.0
    final_eval: EvalValue = 0


@dataclass
class SearchOutcome:
    status: SolveStatus
    assignment: list[int]
    stats: SearchStats

    @property
    def solved(self) -> bool:
        return self.status is SolveStatus.SOLVED


class EscapeState:
    """Stagnation bookkeeping for tier escapes.

    The counter grows on every step that fails to improve the best
    evaluation seen since the last restart; once it passes the limit the
    next greedy selection targets the second-lowest neighbor tier instead
    of the lowest, then the counter resets.
    """

    def __init__(self, stagnation_limit: int, initial_eval: EvalValue):
        self.stagnation_limit = stagnation_limit
        self.best_seen = initial_eval
        self.counter = 0

    @property
    def escaping(self) -> bool:
        return self.counter > self.stagnation_limit

    def note_step(self, new_eval: EvalValue) -> None:
        if new_eval < self.best_seen:
            self.best_seen = new_eval
            self.counter = 0
        else:
            self.counter += 1

    def note_escape(self) -> None:
        self.counter = 0


def eval_global(inst: CspInstance, values) -> EvalValue:
    """Count of violated constraints over distinct unordered pairs."""
    vals = inst.check_assignment(values)
    if inst.is_queens:
        return int(_kernels.active.conflicts(vals))
    total = 0
    for i in range(inst.n):
        a = vals[i]
        for j in range(i + 1, inst.n):
            if inst.constrained(i, j) and not inst.consistent(i, a, j, vals[j]):
                total += 1
    return total


def eval_delta(inst: CspInstance, values, var: int, new_value: int) -> int:
    """Evaluation change of the move var := new_value, rescanning only the
    pairs that involve ``var``."""
    vals = inst.check_assignment(values)
    if new_value not in inst.domains[var]:
        raise MalformedAssignmentError(
            f"value {new_value} outside domain of variable {var}"
        )
    if new_value == vals[var]:
        raise ValueError("a move must change the variable's value")
    if inst.is_queens:
        return int(_kernels.active.move_delta(vals, var, new_value))
    old = vals[var]
    delta = 0
    for j in range(inst.n):
        if j == var or not inst.constrained(var, j):
            continue
        b = vals[j]
        delta += (not inst.consistent(var, new_value, j, b)) - (
            not inst.consistent(var, old, j, b)
        )
    return delta


def _count_violations_at(inst: CspInstance, vals, var: int, value: int) -> int:
    total = 0
    for j in range(inst.n):
        if j != var and inst.constrained(var, j):
            if not inst.consistent(var, value, j, vals[j]):
                total += 1
    return total


def _generic_neighbor_evals(inst: CspInstance, vals) -> np.ndarray:
    base_eval = eval_global(inst, vals)
    out = []
    for i in range(inst.n):
        v = vals[i]
        detached = base_eval - _count_violations_at(inst, vals, i, v)
        for w in inst.domains[i]:
            if w != v:
                out.append(detached + _count_violations_at(inst, vals, i, w))
    return np.asarray(out, dtype=np.int64)


def neighbor_eval_array(inst: CspInstance, values) -> np.ndarray:
    """Flat int64 array of resulting evaluations, one entry per neighbor,
    in canonical order: ascending variable, then ascending value with the
    current value skipped."""
    vals = inst.check_assignment(values)
    if inst.is_queens:
        return _kernels.active.neighbor_evals(vals)
    return _generic_neighbor_evals(inst, vals)


def _segment_starts(inst: CspInstance) -> list[int]:
    starts = [0]
    for dom in inst.domains:
        starts.append(starts[-1] + len(dom) - 1)
    return starts


def _flat_to_move(inst: CspInstance, vals, flat: int, ev: EvalValue) -> Move:
    if inst.is_queens:
        var, off = divmod(flat, inst.n - 1)
    else:
        starts = _segment_starts(inst)
        var = 0
        while starts[var + 1] <= flat:
            var += 1
        off = flat - starts[var]
    dom = inst.domains[var]
    w = dom[off]
    if w >= vals[var]:
        w += 1
    return Move(var=var, new_value=w, resulting_eval=ev)


def neighbors(inst: CspInstance, values) -> Iterator[Move]:
    """All sum(|D_i| - 1) single-variable moves with their evaluations, in
    canonical order."""
    vals = inst.check_assignment(values)
    evals = neighbor_eval_array(inst, vals)
    for flat in range(len(evals)):
        yield _flat_to_move(inst, vals, flat, int(evals[flat]))


def _random_move(inst: CspInstance, vals, rng: random.Random) -> Move:
    movable = [i for i in range(inst.n) if len(inst.domains[i]) >= 2]
    if not movable:
        raise ValueError("no moves exist: every domain is a singleton")
    var = movable[rng.randrange(len(movable))]
    dom = inst.domains[var]
    w = dom[rng.randrange(len(dom) - 1)]
    if w >= vals[var]:
        w += 1
    return Move(var, w, eval_global(inst, vals) + eval_delta(inst, vals, var, w))


def best_move(
    inst: CspInstance,
    values,
    rng: random.Random,
    escape_state: EscapeState | None = None,
    random_walk_prob: float = 0.0,
) -> Move:
    """Select the next move.

    With probability ``random_walk_prob`` a uniformly random move; otherwise
    a uniform choice among the neighbors with the lowest resulting
    evaluation — or, while ``escape_state`` reports stagnation, among those
    in the next strictly higher evaluation tier.
    """
    vals = inst.check_assignment(values)
    if random_walk_prob > 0.0 and rng.random() < random_walk_prob:
        return _random_move(inst, vals, rng)
    evals = neighbor_eval_array(inst, vals)
    if len(evals) == 0:
        raise ValueError("no moves exist: every domain is a singleton")
    if escape_state is not None and escape_state.escaping:
        tiers = np.unique(evals)
        target = int(tiers[1]) if len(tiers) > 1 else int(tiers[0])
        escape_state.note_escape()
    else:
        target = int(evals.min())
    candidates = np.flatnonzero(evals == target)
    flat = int(candidates[rng.randrange(len(candidates))])
    return _flat_to_move(inst, vals, flat, target)


def gef_solve(inst: CspInstance, cfg: SearchConfig, stop=None) -> SearchOutcome:
    """Run the search loop until solved, stopped, or out of restarts.

    ``stop`` is any object with an ``is_set()`` method (a ``threading.Event``
    fits); it is polled once per step so cancellation lands within one move
    evaluation.  Identical (instance, config) pairs replay identical step
    sequences when never stopped.
    """
    rng = random.Random(cfg.seed)
    stats = SearchStats()
    start = time.perf_counter()

    def finish(status: SolveStatus, vals) -> SearchOutcome:
        stats.wall_millis = (time.perf_counter() - start) * 1000.0
        stats.final_eval = eval_global(inst, vals)
        return SearchOutcome(status=status, assignment=list(vals), stats=stats)

    while True:
        vals = random_state(inst, rng)
        current = eval_global(inst, vals)
        escape = EscapeState(cfg.stagnation_limit, current)
        tries = 0
        while tries < cfg.max_tries:
            if stop is not None and stop.is_set():
                return finish(SolveStatus.STOPPED, vals)
            if current == 0:
                return finish(SolveStatus.SOLVED, vals)
            walk = cfg.random_walk_prob > 0.0 and rng.random() < cfg.random_walk_prob
            if walk:
                move = _random_move(inst, vals, rng)
                stats.random_walk_steps += 1
            else:
                escaping = escape.escaping
                move = best_move(inst, vals, rng, escape_state=escape)
                if escaping:
                    stats.escape_steps += 1
            vals[move.var] = move.new_value
            current = move.resulting_eval
            stats.steps += 1
            tries += 1
            escape.note_step(current)
        if current == 0:
            return finish(SolveStatus.SOLVED, vals)
        if cfg.max_restarts and stats.restarts + 1 > cfg.max_restarts:
            return finish(SolveStatus.UNSOLVED, vals)
        stats.restarts += 1


def solved_and_valid(inst: CspInstance, outcome: SearchOutcome) -> bool:
    """Cross-check helper: solved outcomes must validate and evaluate to 0."""
    return (
        outcome.solved
        and outcome.stats.final_eval == 0
        and validate_solution(inst, outcome.assignment)
    )
