"""Acceptance suite: ten end-to-end checks, one test per criterion.

Each test is self-contained and named so that ``pytest -v`` reads as a
checklist.  Tolerances are part of the contract and are asserted, not
approximated.
"""

import random
import re
import subprocess
import sys
import time

import pytest

from conftest import brute_force_eval
from cspracer.backtrack import count_solutions
from cspracer.cli import main
from cspracer.core import make_nqueens, validate_solution
from cspracer.model import OverheadModel, fit_constants
from cspracer.net import initiator_run
from cspracer.protocol import decode_message, encode_message, stop
from cspracer.records import read_run_records
from cspracer.runtime import calibrate_max_agents, homogenized_agent_count
from cspracer.search import SearchConfig, SolveStatus, default_config, eval_global, gef_solve


def test_01_eval_oracle_equivalence_2000_random_states():
    """eval_global equals an independent pairwise conflict counter exactly
    on 2,000 random states over n in 1..32, in under 10 seconds."""
    rng = random.Random(2024)
    start = time.perf_counter()
    for _ in range(2000):
        n = rng.randint(1, 32)
        inst = make_nqueens(n)
        values = [rng.randint(1, n) for _ in range(n)]
        assert eval_global(inst, values) == brute_force_eval(inst, values)
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0, f"oracle sweep took {elapsed:.1f}s (budget 10s)"


def test_02_solver_solves_8_through_128_within_60s():
    """gef_solve with fixed seeds solves n in {8,16,32,64,128}: status
    Solved, eval 0, validating assignment, under 60 seconds total."""
    start = time.perf_counter()
    for n in (8, 16, 32, 64, 128):
        inst = make_nqueens(n)
        outcome = gef_solve(inst, default_config(n, seed=1))
        assert outcome.status is SolveStatus.SOLVED, f"n={n} not solved"
        assert outcome.stats.final_eval == 0
        assert validate_solution(inst, outcome.assignment), f"n={n} invalid"
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0, f"solver sweep took {elapsed:.1f}s (budget 60s)"


def test_03_exhaustive_counts_and_solver_agreement():
    """count_solutions returns 2,10,4,40,92 for n=4..8 (confirmed against
    exhaustive enumeration in the unit suite); gef_solve finds a solution
    iff the count is positive, for every n up to 10."""
    assert [count_solutions(make_nqueens(n)) for n in (4, 5, 6, 7, 8)] == [2, 10, 4, 40, 92]
    bounded = SearchConfig(
        random_walk_prob=0.02, max_tries=2000, max_restarts=10, stagnation_limit=20, seed=3
    )
    for n in range(1, 11):
        solvable = count_solutions(make_nqueens(n)) > 0
        outcome = gef_solve(make_nqueens(n), bounded)
        assert outcome.solved == solvable, f"n={n}: solver/census disagreement"


def test_04_bench_n28_reports_fraction_with_nondegenerate_timings(capsys, tmp_path):
    """`bench --n 28 --trials 100` computes and reports the fraction of
    GEF runs faster than backtracking; GEF wall times are non-degenerate
    (>= 10 distinct values) while backtrack step counts are constant."""
    out_csv = tmp_path / "bench28.csv"
    code = main(["bench", "--n", "28", "--trials", "100", "--seed", "9", "--out", str(out_csv)])
    captured = capsys.readouterr()
    assert code == 0
    fraction = float(re.search(r"faster_fraction=([\d.]+)", captured.out).group(1))
    assert 0.0 <= fraction <= 1.0
    with open(out_csv, newline="") as f:
        records = read_run_records(f)
    gef = [r for r in records if r.method == "gef"]
    bt = [r for r in records if r.method == "backtrack"]
    assert len(gef) == len(bt) == 100
    assert all(r.solved for r in records)
    distinct_gef_times = len({r.millis for r in gef})
    assert distinct_gef_times >= 10, f"degenerate GEF timing: {distinct_gef_times} distinct"
    assert len({r.steps for r in bt}) == 1, "backtracking must be deterministic"


def test_05_calibration_recovers_synthetic_crossing_at_three():
    """On samples drawn exactly from time = -2k + 6 over k in 1..5, the
    fitted line crosses time=0 at 3.0 (within 1e-9) and max_agent is 3."""
    report = calibrate_max_agents(
        [8],
        [1, 2, 3, 4, 5],
        trials=1,
        cfg=default_config(8, seed=0),
        runner=lambda n, k, trial, cfg: (-2.0 * k + 6.0, True),
    )
    assert abs(report.x_intercept - 3.0) <= 1e-9
    assert report.max_agent == 3
    assert not report.flagged


def test_06_cost_model_reference_constants():
    """With k_o=250, k_ove=1: ultimate_agents(40) is exactly 100, both
    timing terms equal 4000 at (40,100) within 1e-12 relative, and the
    search/overhead ratio strictly decreases in the agent count."""
    m = OverheadModel(k_o=250.0, k_ove=1.0)
    assert m.ultimate_agents(40) == 100.0
    t_o = m.predict_search_time(40, 100)
    t_ove = m.predict_overhead(40, 100)
    assert abs(t_o - 4000.0) <= 1e-12 * 4000.0
    assert abs(t_ove - 4000.0) <= 1e-12 * 4000.0
    ratios = [m.search_overhead_ratio(40, n_a) for n_a in range(1, 201)]
    assert all(a > b for a, b in zip(ratios, ratios[1:]))


def test_07_constant_recovery_noiseless_and_noisy():
    """fit_constants recovers (250, 1) within 1e-9 relative from noiseless
    model data, and within 10% relative from 200 samples carrying 5%
    multiplicative noise under a fixed seed."""
    m = OverheadModel(k_o=250.0, k_ove=1.0)
    grid = [(n, n_a) for n in (10, 20, 30, 40) for n_a in (1, 10, 50, 100)]
    clean = [
        (n, n_a, m.predict_search_time(n, n_a), m.predict_overhead(n, n_a)) for n, n_a in grid
    ]
    fitted = fit_constants(clean)
    assert abs(fitted.k_o - 250.0) <= 1e-9 * 250.0
    assert abs(fitted.k_ove - 1.0) <= 1e-9

    rng = random.Random(777)
    noisy = []
    while len(noisy) < 200:
        for n, n_a in grid:
            noisy.append(
                (
                    n,
                    n_a,
                    m.predict_search_time(n, n_a) * (1 + rng.uniform(-0.05, 0.05)),
                    m.predict_overhead(n, n_a) * (1 + rng.uniform(-0.05, 0.05)),
                )
            )
    refit = fit_constants(noisy[:200])
    assert abs(refit.k_o - 250.0) / 250.0 < 0.10
    assert abs(refit.k_ove - 1.0) < 0.10


def test_08_protocol_round_trips_10000_messages_and_stop_bytes():
    """encode/decode round-trips 10,000 random messages with zero
    mismatches; the STOP frame for job_id 7 is byte-exact."""
    assert encode_message(stop(7)) == bytes.fromhex("0000001a") + b'{"type":"STOP","job_id":7}'

    from cspracer import protocol

    rng = random.Random(10**6 + 7)
    mismatches = 0
    for _ in range(10_000):
        kind = rng.choice(("JOB", "RESULT", "STOP", "PROBE_REQ", "PROBE_RESP", "ERROR"))
        job_id = rng.randrange(1 << 64)
        if kind == "JOB":
            cfg = {}
            if rng.random() < 0.5:
                cfg["max_tries"] = rng.randint(1, 10**6)
            if rng.random() < 0.5:
                cfg["random_walk_prob"] = rng.random()
            if rng.random() < 0.5:
                cfg["max_restarts"] = rng.randint(0, 100)
            if rng.random() < 0.5:
                cfg["stagnation_limit"] = rng.randint(1, 10**4)
            m = protocol.job(job_id, rng.randint(1, 512), cfg, rng.randint(0, 64), rng.randrange(1 << 64))
        elif kind == "RESULT":
            n = rng.randint(1, 64)
            m = protocol.result(
                job_id,
                [rng.randint(1, 512) for _ in range(n)],
                rng.randint(0, 10**9),
                rng.uniform(0, 1e9),
            )
        elif kind == "STOP":
            m = protocol.stop(job_id)
        elif kind == "PROBE_REQ":
            m = protocol.probe_req(job_id, rng.uniform(1e-3, 1e6))
        elif kind == "PROBE_RESP":
            m = protocol.probe_resp(job_id, rng.uniform(1e-9, 1e9))
        else:
            m = protocol.error(job_id, rng.choice(("busy", "unsolved", "malformed")), "x" * rng.randint(0, 40))
        if decode_message(encode_message(m)) != m:
            mismatches += 1
    assert mismatches == 0


def test_09_distributed_race_four_workers_n24():
    """One initiator and four worker processes race n=24 on loopback: the
    returned solution validates, exactly one RESULT is accepted, every
    losing worker acknowledges STOP within 500 ms, and the reported
    turnaround satisfies t_tat = t_o + t_ove exactly with t_ove > 0."""
    procs = []
    endpoints = []
    try:
        for _ in range(4):
            proc = subprocess.Popen(
                [
                    sys.executable, "-m", "cspracer", "agent",
                    "--bind", "127.0.0.1:0", "--agents", "2",
                ],
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
            )
            procs.append(proc)
            banner = proc.stdout.readline().strip()
            m = re.fullmatch(r"listening on (127\.0\.0\.1:\d+) agents=2", banner)
            assert m, f"unexpected worker banner: {banner!r}"
            endpoints.append(m.group(1))

        res = initiator_run(endpoints, n=24, seed=6)

        assert validate_solution(make_nqueens(24), res.assignment)
        assert [w.status for w in res.workers].count("won") == 1
        losers = [w for i, w in enumerate(res.workers) if i != res.winner]
        assert len(losers) == 3
        for w in losers:
            assert w.status in ("stopped", "late"), f"{w.endpoint}: {w.status} ({w.detail})"
            assert w.ack_ms is not None, f"{w.endpoint} never acknowledged STOP"
            assert w.ack_ms <= 500.0, f"{w.endpoint} ack took {w.ack_ms:.1f}ms"
        t = res.timing
        assert t.t_tat == t.t_o + t.t_ove  # exact, not approximate
        assert t.t_ove > 0
    finally:
        for proc in procs:
            proc.terminate()
        for proc in procs:
            proc.wait(timeout=10)
            proc.stdout.close()


def test_10_homogenization_table_and_monotonicity():
    """homogenized_agent_count reproduces the reference table
    {ln 1000 -> 6, ln 4000 -> 3, ln 6900 -> 1} and never increases as the
    probed performance value grows, over a 100-point sweep."""
    import math

    assert homogenized_agent_count(math.log(1000)) == 6
    assert homogenized_agent_count(math.log(4000)) == 3
    assert homogenized_agent_count(math.log(6900)) == 1
    lo, hi = math.log(50), math.log(50_000)
    sweep = [lo + (hi - lo) * i / 99 for i in range(100)]
    counts = [homogenized_agent_count(p) for p in sweep]
    assert all(a >= b for a, b in zip(counts, counts[1:])), "count increased with p"
