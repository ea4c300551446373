"""Analytic cost model for racing agents.

Two competing terms govern a portfolio of ``n_a`` agents on an instance
of size ``n``: expected search time falls as agents are added,

    t_search = k_o * n**2 / n_a

while coordination overhead (creating agents, relaying the solution,
tearing the rest down) grows with them,

    t_overhead = k_ove * n_a * n

The crossover diagnostics fall out in closed form: the ratio of the two
terms is (k_o / k_ove) * n / n_a**2, and the agent count where adding
more stops paying (ratio = 1) is sqrt((k_o / k_ove) * n).  The constants
are machine- and implementation-specific; fit them from measured runs
with ``fit_constants``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

__all__ = [
    "OverheadModel",
    "fit_constants",
    "emit_curves",
    "read_curves_csv",
    "read_observations_csv",
    "CURVE_FIELDS",
    "OBSERVATION_FIELDS",
]

CURVE_FIELDS = ("n", "n_a", "t_o", "t_ove", "t_tat", "ratio")


@dataclass(frozen=True)
class OverheadModel:
    k_o: float
    k_ove: float

    def __post_init__(self):
        if not (math.isfinite(self.k_o) and self.k_o > 0):
            raise ValueError(f"k_o must be a positive finite number, got {self.k_o}")
        if not (math.isfinite(self.k_ove) and self.k_ove > 0):
            raise ValueError(f"k_ove must be a positive finite number, got {self.k_ove}")

    @staticmethod
    def _check(n: float, n_a: float) -> None:
        if n <= 0:
            raise ValueError(f"instance size must be > 0, got {n}")
        if n_a <= 0:
            raise ValueError(f"agent count must be > 0, got {n_a}")

    def predict_search_time(self, n: float, n_a: float) -> float:
        self._check(n, n_a)
        return self.k_o * n * n / n_a

    def predict_overhead(self, n: float, n_a: float) -> float:
        self._check(n, n_a)
        return self.k_ove * n_a * n

    def predict_tat(self, n: float, n_a: float) -> float:
        return self.predict_search_time(n, n_a) + self.predict_overhead(n, n_a)

    def search_overhead_ratio(self, n: float, n_a: float) -> float:
        return self.predict_search_time(n, n_a) / self.predict_overhead(n, n_a)

    def ultimate_agents(self, n: float) -> float:
        """Agent count where search time and overhead break even."""
        if n <= 0:
            raise ValueError(f"instance size must be > 0, got {n}")
        return math.sqrt((self.k_o / self.k_ove) * n)


def _fit_through_origin(pairs) -> float:
    """Least squares y = k*x with no intercept: k = sum(xy) / sum(x^2)."""
    sxx = sum(x * x for x, _ in pairs)
    if sxx == 0.0:
        raise ValueError("cannot fit a slope: all regressor values are zero")
    return sum(x * y for x, y in pairs) / sxx


def fit_constants(observations) -> OverheadModel:
    """Fit (k_o, k_ove) from measured runs.

    ``observations``: (n, n_a, t_o_millis, t_ove_millis) rows.  Search
    time regresses against n^2/n_a and overhead against n_a*n, each as a
    through-origin least squares since neither term has an additive part.
    """
    rows = [(float(n), float(n_a), float(t_o), float(t_ove)) for n, n_a, t_o, t_ove in observations]
    if not rows:
        raise ValueError("need at least one observation")
    for n, n_a, t_o, t_ove in rows:
        if n < 1 or n_a < 1:
            raise ValueError(f"observation needs n >= 1 and n_a >= 1, got n={n}, n_a={n_a}")
        if t_o <= 0 or t_ove <= 0:
            raise ValueError(f"measured times must be > 0, got t_o={t_o}, t_ove={t_ove}")
    k_o = _fit_through_origin([(n * n / n_a, t_o) for n, n_a, t_o, _ in rows])
    k_ove = _fit_through_origin([(n_a * n, t_ove) for n, n_a, _, t_ove in rows])
    return OverheadModel(k_o=k_o, k_ove=k_ove)


OBSERVATION_FIELDS = ("n", "n_a", "t_o", "t_ove")


def read_observations_csv(f):
    """Parse measured (n, n_a, t_o, t_ove) rows written with these headers."""
    reader = csv.reader(f)
    header = next(reader, None)
    if header != list(OBSERVATION_FIELDS):
        raise ValueError(f"expected header {','.join(OBSERVATION_FIELDS)}, got {header}")
    return [(float(r[0]), float(r[1]), float(r[2]), float(r[3])) for r in reader if r]


def emit_curves(model: OverheadModel, n_values, na_values, out) -> int:
    """Write predicted timing curves as CSV rows to a text file object.

    One row per (n, n_a) pair of the Cartesian product, columns
    n, n_a, t_o, t_ove, t_tat, ratio.  Returns the data row count.
    """
    ns = list(n_values)
    nas = list(na_values)
    if not ns or not nas:
        raise ValueError("need at least one n and one n_a value")
    writer = csv.writer(out)
    writer.writerow(CURVE_FIELDS)
    count = 0
    for n in ns:
        for n_a in nas:
            t_o = model.predict_search_time(n, n_a)
            t_ove = model.predict_overhead(n, n_a)
            writer.writerow(
                [
                    n,
                    n_a,
                    repr(t_o),
                    repr(t_ove),
                    repr(t_o + t_ove),
                    repr(model.search_overhead_ratio(n, n_a)),
                ]
            )
            count += 1
    return count


def read_curves_csv(f) -> list[dict]:
    """Parse rows written by emit_curves back into dicts of floats."""
    reader = csv.reader(f)
    header = next(reader, None)
    if header != list(CURVE_FIELDS):
        raise ValueError(f"expected header {','.join(CURVE_FIELDS)}, got {header}")
    return [dict(zip(CURVE_FIELDS, map(float, row))) for row in reader if row]
