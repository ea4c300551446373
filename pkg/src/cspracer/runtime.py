"""Racing agents on one machine, and the tooling that picks how many.

``run_portfolio`` launches k independently seeded search threads over a
shared read-only instance; the first solver wins and every other agent is
told to stop (a set-once flag polled each step).  ``calibrate_max_agents``
reruns portfolios over a grid of agent counts and reads the recommended
count off the time-vs-agents regression line's time=0 crossing.
``homogenized_agent_count`` instead derives the count from a machine
performance probe, so heterogeneous hosts can balance themselves.
"""

from __future__ import annotations

import csv
import math
import statistics
import threading
import time
from dataclasses import dataclass, field

from .core import CspInstance, make_nqueens, validate_solution
from .search import SearchConfig, SearchOutcome, SolveStatus, gef_solve
from .seeds import mix

__all__ = [
    "AgentReport",
    "PortfolioResult",
    "RegressionLine",
    "CalibrationReport",
    "CalibrationRow",
    "PerfProbe",
    "DegenerateRegressionError",
    "run_portfolio",
    "linear_regression",
    "calibrate_max_agents",
    "performance_probe",
    "homogenized_agent_count",
    "write_calibration_csv",
    "read_calibration_csv",
    "CALIBRATION_FIELDS",
    "CALIBRATION_SUMMARY_FIELDS",
]


class DegenerateRegressionError(ValueError):
    """Raised when the sample cloud cannot support a least-squares line."""


@dataclass
class AgentReport:
    index: int
    status: SolveStatus
    steps: int
    restarts: int
    final_eval: int


@dataclass
class PortfolioResult:
    outcome: SearchOutcome
    winner: int | None
    per_agent: list[AgentReport]
    wall_millis: float

    @property
    def solved(self) -> bool:
        return self.outcome.status is SolveStatus.SOLVED


class _AgentStop:
    """Per-agent stop flag that also honors a shared external stop."""

    __slots__ = ("own", "external")

    def __init__(self, external=None):
        self.own = threading.Event()
        self.external = external

    def set(self):
        self.own.set()

    def is_set(self) -> bool:
        if self.own.is_set():
            return True
        return self.external is not None and self.external.is_set()


def run_portfolio(
    inst: CspInstance,
    k: int,
    cfg: SearchConfig,
    seed: int,
    stop=None,
) -> PortfolioResult:
    """Race k agents; first solution wins and cancels the rest.

    Agent i runs with seed ``mix(seed, i)``, so all initial states are
    independent draws.  Every agent has terminated by the time this
    returns.  ``stop`` (optional, ``threading.Event``-like) cancels the
    whole portfolio.
    """
    if k < 1:
        raise ValueError(f"portfolio needs at least one agent, got k={k}")
    stops = [_AgentStop(external=stop) for _ in range(k)]
    outcomes: list[SearchOutcome | None] = [None] * k
    errors: list[BaseException] = []
    lock = threading.Lock()
    winner_box: list[int | None] = [None]
    winner_millis = [0.0]
    start = time.perf_counter()

    def work(i: int) -> None:
        try:
            outcome = gef_solve(inst, cfg.with_seed(mix(seed, i)), stop=stops[i])
        except BaseException as exc:  # surfaced after join
            with lock:
                errors.append(exc)
            return
        outcomes[i] = outcome
        if outcome.status is SolveStatus.SOLVED:
            with lock:
                if winner_box[0] is None:
                    winner_box[0] = i
                    winner_millis[0] = (time.perf_counter() - start) * 1000.0
                    for j, s in enumerate(stops):
                        if j != i:
                            s.set()

    threads = [threading.Thread(target=work, args=(i,), daemon=True) for i in range(k)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        raise errors[0]
    total_millis = (time.perf_counter() - start) * 1000.0

    winner = winner_box[0]
    if winner is not None:
        chosen = outcomes[winner]
        wall = winner_millis[0]
    else:
        # nobody solved: report the agent that got closest
        chosen = min(outcomes, key=lambda o: o.stats.final_eval)
        wall = total_millis
    per_agent = []
    for i, o in enumerate(outcomes):
        status = o.status
        if winner is not None and i != winner and status is SolveStatus.SOLVED:
            # photo finish: it solved before seeing the stop flag, but the
            # race discards its solution, so it reports as cancelled
            status = SolveStatus.STOPPED
        per_agent.append(
            AgentReport(
                index=i,
                status=status,
                steps=o.stats.steps,
                restarts=o.stats.restarts,
                final_eval=o.stats.final_eval,
            )
        )
    return PortfolioResult(
        outcome=chosen, winner=winner, per_agent=per_agent, wall_millis=wall
    )


@dataclass(frozen=True)
class RegressionLine:
    slope: float
    intercept: float
    x_intercept: float | None  # None when the line is flat

    def predict(self, x: float) -> float:
        return self.slope * x + self.intercept


def linear_regression(points) -> RegressionLine:
    """Ordinary least squares over (x, y) points.

    Needs at least two points with at least two distinct x values; the
    x-axis crossing is undefined (None) for a flat line.
    """
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < 2:
        raise DegenerateRegressionError(f"need >= 2 points, got {len(pts)}")
    xs = [x for x, _ in pts]
    ys = [y for _, y in pts]
    if len(set(xs)) < 2:
        raise DegenerateRegressionError("all points share one x value")
    x_mean = sum(xs) / len(xs)
    y_mean = sum(ys) / len(ys)
    sxx = sum((x - x_mean) ** 2 for x in xs)
    sxy = sum((x - x_mean) * (y - y_mean) for x, y in zip(xs, ys))
    slope = sxy / sxx
    intercept = y_mean - slope * x_mean
    x_intercept = None if slope == 0.0 else -intercept / slope
    return RegressionLine(slope=slope, intercept=intercept, x_intercept=x_intercept)


@dataclass
class CalibrationRow:
    n: int
    agents: int
    trial: int
    millis: float
    solved: bool


@dataclass
class CalibrationReport:
    rows: list[CalibrationRow]
    line: RegressionLine
    max_agent: int
    flagged: bool  # True when the fitted slope is not negative
    empirical_best_k: int  # argmin of mean time per agent count, reported only

    @property
    def samples(self) -> list[tuple[int, float]]:
        return [(r.agents, r.millis) for r in self.rows]

    @property
    def slope(self) -> float:
        return self.line.slope

    @property
    def intercept(self) -> float:
        return self.line.intercept

    @property
    def x_intercept(self) -> float | None:
        return self.line.x_intercept


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def calibrate_max_agents(
    inst_sizes,
    agent_range,
    trials: int,
    cfg: SearchConfig,
    seed: int = 0,
    runner=None,
) -> CalibrationReport:
    """Fit the time-vs-agents line over a grid of portfolio runs.

    Every individual (agents, time) sample enters the fit, not per-cell
    averages.  The recommended count is the line's time=0 crossing rounded
    half-up and clamped to [1, max(agent_range)]; a non-negative slope is
    flagged and pins the recommendation at 1.  ``runner(n, k, trial, cfg)
    -> (millis, solved)`` replaces the real portfolio runs in tests and
    synthetic studies.
    """
    ks = sorted(set(int(k) for k in agent_range))
    if not ks or ks[0] < 1:
        raise ValueError("agent_range must contain positive agent counts")
    if max(ks) < 2:
        raise ValueError("agent_range must reach at least 2 agents")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")

    if runner is None:

        def runner(n, k, trial, run_cfg):
            inst = make_nqueens(n)
            trial_seed = mix(seed, (n << 20) ^ (k << 10) ^ trial)
            result = run_portfolio(inst, k, run_cfg, seed=trial_seed)
            return result.wall_millis, result.solved

    rows: list[CalibrationRow] = []
    for n in inst_sizes:
        for k in ks:
            for trial in range(trials):
                millis, solved = runner(n, k, trial, cfg)
                rows.append(
                    CalibrationRow(
                        n=n, agents=k, trial=trial, millis=float(millis), solved=bool(solved)
                    )
                )

    line = linear_regression([(r.agents, r.millis) for r in rows])
    flagged = line.slope >= 0.0
    if flagged or line.x_intercept is None:
        max_agent = 1
    else:
        max_agent = max(1, min(_round_half_up(line.x_intercept), max(ks)))

    by_k: dict[int, list[float]] = {}
    for r in rows:
        by_k.setdefault(r.agents, []).append(r.millis)
    empirical_best_k = min(by_k, key=lambda k: (statistics.fmean(by_k[k]), k))

    return CalibrationReport(
        rows=rows,
        line=line,
        max_agent=max_agent,
        flagged=flagged,
        empirical_best_k=empirical_best_k,
    )


CALIBRATION_FIELDS = ("n", "agents", "trial", "millis", "solved")
CALIBRATION_SUMMARY_FIELDS = ("slope", "intercept", "x_intercept", "max_agent")


def write_calibration_csv(report: CalibrationReport, out) -> None:
    """Emit trial rows, then a summary block, into one text file object."""
    writer = csv.writer(out)
    writer.writerow(CALIBRATION_FIELDS)
    for r in report.rows:
        writer.writerow([r.n, r.agents, r.trial, repr(r.millis), "true" if r.solved else "false"])
    writer.writerow(CALIBRATION_SUMMARY_FIELDS)
    x_int = "" if report.x_intercept is None else repr(report.x_intercept)
    writer.writerow([repr(report.slope), repr(report.intercept), x_int, report.max_agent])


def read_calibration_csv(f) -> tuple[list[CalibrationRow], dict]:
    """Parse a calibration file back into (rows, summary dict)."""
    reader = csv.reader(f)
    header = next(reader, None)
    if header != list(CALIBRATION_FIELDS):
        raise ValueError(f"expected header {','.join(CALIBRATION_FIELDS)}, got {header}")
    rows: list[CalibrationRow] = []
    summary: dict = {}
    for record in reader:
        if not record:
            continue
        if record == list(CALIBRATION_SUMMARY_FIELDS):
            values = next(reader, None)
            if values is None:
                raise ValueError("summary header present but summary row missing")
            summary = {
                "slope": float(values[0]),
                "intercept": float(values[1]),
                "x_intercept": None if values[2] == "" else float(values[2]),
                "max_agent": int(values[3]),
            }
            break
        rows.append(
            CalibrationRow(
                n=int(record[0]),
                agents=int(record[1]),
                trial=int(record[2]),
                millis=float(record[3]),
                solved=record[4] == "true",
            )
        )
    if not summary:
        raise ValueError("calibration file has no summary block")
    return rows, summary


@dataclass(frozen=True)
class PerfProbe:
    p: float  # throughput in units of 1e5 mixing blocks per second
    probe_duration: float  # seconds actually spent


_M64 = (1 << 64) - 1
_BLOCK_ROUNDS = 256


def _mix_block(state: int) -> int:
    # fixed CPU-bound kernel: xorshift-multiply rounds on a 64-bit word
    for _ in range(_BLOCK_ROUNDS):
        state ^= (state << 13) & _M64
        state ^= state >> 7
        state ^= (state << 17) & _M64
        state = (state * 0x2545F4914F6CDD1D) & _M64
    return state


def performance_probe(duration: float) -> PerfProbe:
    """Measure machine throughput by running the mixing kernel for
    ``duration`` seconds; one operation = one block of rounds."""
    if duration <= 0:
        raise ValueError(f"probe duration must be > 0, got {duration}")
    state = 0x9E3779B97F4A7C15
    blocks = 0
    start = time.perf_counter()
    deadline = start + duration
    while True:
        state = _mix_block(state)
        blocks += 1
        now = time.perf_counter()
        if now >= deadline:
            break
    elapsed = now - start
    return PerfProbe(p=blocks / elapsed / 1e5, probe_duration=elapsed)


def homogenized_agent_count(
    p: float, base: float = 7000.0, scale: float = 1000.0, k_cap: int = 8
) -> int:
    """Agent count for a machine of probed performance ``p``:
    floor((base - e^p) / scale), clamped to [1, k_cap].

    The defaults are fitted constants from one historical machine pool;
    recalibrate ``base``/``scale`` for new hardware.  Sub-unity raw values
    clamp to a single agent.  A hair of tolerance on the floor keeps exact
    integer crossings stable under float error.
    """
    if not math.isfinite(p):
        raise ValueError(f"performance must be finite, got {p}")
    if p <= 0:
        raise ValueError(f"performance must be > 0, got {p}")
    raw = (base - math.exp(p)) / scale
    k = math.floor(raw + 1e-9)
    return max(1, min(k, k_cap))
