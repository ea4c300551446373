"""Benchmark run records and their CSV form.

One row per solver run.  Times are milliseconds with fractional
precision: sub-millisecond solver runs are common on current hardware
and whole-millisecond rounding would collapse the time distribution the
benchmark exists to expose.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

__all__ = ["RunRecord", "RUN_FIELDS", "write_run_records", "read_run_records"]

RUN_FIELDS = ("method", "n", "agents", "seed", "trial", "millis", "solved", "steps")

_METHODS = ("gef", "backtrack", "portfolio")


@dataclass(frozen=True)
class RunRecord:
    method: str  # gef | backtrack | portfolio
    n: int
    agents: int
    seed: int
    trial: int
    millis: float
    solved: bool
    steps: int

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ValueError(f"method must be one of {_METHODS}, got {self.method!r}")
        if self.millis < 0:
            raise ValueError(f"millis must be >= 0, got {self.millis}")
        if self.steps < 0:
            raise ValueError(f"steps must be >= 0, got {self.steps}")


def write_run_records(records, out) -> int:
    """Write header plus one CSV row per record; returns the row count."""
    writer = csv.writer(out)
    writer.writerow(RUN_FIELDS)
    count = 0
    for r in records:
        writer.writerow(
            [
                r.method,
                r.n,
                r.agents,
                r.seed,
                r.trial,
                repr(r.millis),
                "true" if r.solved else "false",
                r.steps,
            ]
        )
        count += 1
    return count


def read_run_records(f) -> list[RunRecord]:
    reader = csv.reader(f)
    header = next(reader, None)
    if header != list(RUN_FIELDS):
        raise ValueError(f"expected header {','.join(RUN_FIELDS)}, got {header}")
    return [
        RunRecord(
            method=row[0],
            n=int(row[1]),
            agents=int(row[2]),
            seed=int(row[3]),
            trial=int(row[4]),
            millis=float(row[5]),
            solved=row[6] == "true",
            steps=int(row[7]),
        )
        for row in reader
        if row
    ]
