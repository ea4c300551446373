"""Command-line entry point.

One binary, subcommand style.  Results go to standard output and
diagnostics to standard error; nothing is written to the success stream
on a failure path.  Randomized commands print their seed in the output
header so every published number can be reproduced.  Exit codes: 0
solved/ok, 2 finished without a result, 1 usage or runtime error.
"""

from __future__ import annotations

import argparse
import dataclasses
import signal
import sys
import threading
import time

from . import model as model_mod
from . import protocol
from .backtrack import backtrack_solve
from .core import format_assignment, make_nqueens
from .net import AgentServer, NoResultError, NoWorkersError, initiator_run
from .records import RunRecord, write_run_records
from .runtime import (
    calibrate_max_agents,
    performance_probe,
    write_calibration_csv,
)
from .search import default_config, gef_solve
from .seeds import mix

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NO_RESULT = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; this tool reserves 2 for "ran but
    # found nothing", so usage problems remap to 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _parse_span(text: str) -> tuple[int, int]:
    """Parse an inclusive integer span written as A:B."""
    lo, sep, hi = text.partition(":")
    if not sep:
        raise ValueError(f"expected A:B, got {text!r}")
    a, b = int(lo), int(hi)
    if a < 1 or b < a:
        raise ValueError(f"span must satisfy 1 <= A <= B, got {text!r}")
    return a, b


def _solve_config(args, n: int):
    cfg = default_config(n, seed=args.seed)
    overrides = {"max_restarts": args.max_restarts}
    if args.walk_prob is not None:
        overrides["random_walk_prob"] = args.walk_prob
    if args.max_tries is not None:
        overrides["max_tries"] = args.max_tries
    return dataclasses.replace(cfg, **overrides)


def cmd_solve(args) -> int:
    inst = make_nqueens(args.n)
    if args.method == "backtrack":
        start = time.perf_counter()
        res = backtrack_solve(inst)
        millis = (time.perf_counter() - start) * 1000.0
        print(f"millis={millis:.3f}", file=sys.stderr)
        if res.assignment is None:
            print(f"unsolved: no solution exists for n={args.n}", file=sys.stderr)
            return EXIT_NO_RESULT
        print(format_assignment(res.assignment))
        print(f"eval=0 steps={res.attempts}")
        return EXIT_OK
    outcome = gef_solve(inst, _solve_config(args, args.n))
    # wall time varies run to run, so it is a diagnostic; the result
    # lines stay byte-identical for a fixed seed
    print(f"millis={outcome.stats.wall_millis:.3f}", file=sys.stderr)
    if not outcome.solved:
        print(
            f"unsolved after {outcome.stats.steps} steps"
            f" (best eval {outcome.stats.final_eval})",
            file=sys.stderr,
        )
        return EXIT_NO_RESULT
    print(f"seed={args.seed}")
    print(format_assignment(outcome.assignment))
    print(f"eval=0 steps={outcome.stats.steps}")
    return EXIT_OK


def cmd_bench(args) -> int:
    methods = args.methods.split(",")
    for m in methods:
        if m not in ("gef", "backtrack"):
            raise ValueError(f"unknown method {m!r} (expected gef and/or backtrack)")
    inst = make_nqueens(args.n)
    records: list[RunRecord] = []
    gef_times: list[float] = []
    bt_times: list[float] = []

    if "backtrack" in methods:
        for trial in range(args.trials):
            start = time.perf_counter()
            res = backtrack_solve(inst)
            millis = (time.perf_counter() - start) * 1000.0
            bt_times.append(millis)
            records.append(
                RunRecord(
                    method="backtrack",
                    n=args.n,
                    agents=1,
                    seed=0,
                    trial=trial,
                    millis=millis,
                    solved=res.assignment is not None,
                    steps=res.attempts,
                )
            )
    if "gef" in methods:
        for trial in range(args.trials):
            trial_seed = mix(args.seed, trial)
            cfg = default_config(args.n, seed=trial_seed)
            outcome = gef_solve(inst, cfg)
            gef_times.append(outcome.stats.wall_millis)
            records.append(
                RunRecord(
                    method="gef",
                    n=args.n,
                    agents=1,
                    seed=trial_seed,
                    trial=trial,
                    millis=outcome.stats.wall_millis,
                    solved=outcome.solved,
                    steps=outcome.stats.steps,
                )
            )

    with open(args.out, "w", newline="") as f:
        write_run_records(records, f)
    print(f"seed={args.seed}")
    if gef_times and bt_times:
        baseline = sorted(bt_times)[len(bt_times) // 2]
        faster = sum(1 for t in gef_times if t < baseline) / len(gef_times)
        print(f"faster_fraction={faster:.4f}")
        print(f"backtrack_median_ms={baseline:.3f}", file=sys.stderr)
    print(f"rows={len(records)} out={args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    lo, hi = _parse_span(args.agents)
    cfg = default_config(args.n, seed=0)
    report = calibrate_max_agents(
        [args.n], range(lo, hi + 1), trials=args.trials, cfg=cfg, seed=args.seed
    )
    with open(args.out, "w", newline="") as f:
        write_calibration_csv(report, f)
    print(f"seed={args.seed}")
    print(f"slope={report.slope:.6g}")
    print(f"intercept={report.intercept:.6g}")
    x_int = "undefined" if report.x_intercept is None else f"{report.x_intercept:.6g}"
    print(f"x_intercept={x_int}")
    print(f"max_agent={report.max_agent}")
    print(f"empirical_best_k={report.empirical_best_k}")
    if report.flagged:
        print("flagged: fitted slope is not negative; recommendation pinned to 1", file=sys.stderr)
    print(f"rows={len(report.rows)} out={args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_probe(args) -> int:
    probe = performance_probe(args.ms / 1000.0)
    print(f"p={probe.p:.6g}")
    print(f"probe_duration={probe.probe_duration:.3f}s", file=sys.stderr)
    return EXIT_OK


def cmd_agent(args) -> int:
    server = AgentServer(args.bind, agents=args.agents, probe_ms=args.probe_ms)
    host, port = server.address
    print(f"listening on {host}:{port} agents={server.agents}", flush=True)
    done = threading.Event()
    for sig in (signal.SIGINT, signal.SIGTERM):
        signal.signal(sig, lambda *_: done.set())
    server.start()
    try:
        done.wait()
    finally:
        server.close()
    print("stopped", file=sys.stderr)
    return EXIT_OK


def cmd_coordinate(args) -> int:
    endpoints = [e for e in args.workers.split(",") if e]
    try:
        out = initiator_run(endpoints, n=args.n, seed=args.seed, k=args.agents)
    except NoResultError as exc:
        for w in exc.workers:
            print(f"worker {w.endpoint} status={w.status} {w.detail}".rstrip(), file=sys.stderr)
        print(f"no result: {exc}", file=sys.stderr)
        return EXIT_NO_RESULT
    for warning in out.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    for w in out.workers:
        ack = "" if w.ack_ms is None else f" ack_ms={w.ack_ms:.3f}"
        print(f"worker {w.endpoint} status={w.status}{ack}", file=sys.stderr)
    print(f"seed={args.seed}")
    print(format_assignment(out.assignment))
    t = out.timing
    print(f"t_o_ms={t.t_o:.3f} t_ove_ms={t.t_ove:.3f} t_tat_ms={t.t_tat:.3f}")
    return EXIT_OK


def cmd_model(args) -> int:
    if args.fit:
        with open(args.fit, newline="") as f:
            observations = model_mod.read_observations_csv(f)
        m = model_mod.fit_constants(observations)
    else:
        m = model_mod.OverheadModel(k_o=args.ko, k_ove=args.kove)
    print(f"k_o={m.k_o:.6g} k_ove={m.k_ove:.6g}")
    if args.n is not None:
        print(f"ultimate_agents={m.ultimate_agents(args.n):.6g}")
    if args.na_range is not None:
        if args.n is None:
            raise ValueError("--na-range needs --n")
        lo, hi = _parse_span(args.na_range)
        na_values = range(lo, hi + 1)
        if args.out:
            with open(args.out, "w", newline="") as f:
                rows = model_mod.emit_curves(m, [args.n], na_values, f)
            print(f"rows={rows} out={args.out}", file=sys.stderr)
        else:
            model_mod.emit_curves(m, [args.n], na_values, sys.stdout)
    elif args.out:
        raise ValueError("--out needs --na-range")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="cspracer", description="Race conflict-count search agents over CSPs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one instance")
    p.add_argument("--n", type=int, required=True, help="board size")
    p.add_argument("--method", choices=("gef", "backtrack"), default="gef")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--walk-prob", type=float, default=None, help="random walk probability")
    p.add_argument("--max-tries", type=int, default=None, help="steps before a restart")
    p.add_argument(
        "--max-restarts",
        type=int,
        default=100,
        help="restart budget before giving up; 0 means unbounded",
    )
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="compare methods over repeated runs")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--methods", default="gef,backtrack")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="run-record CSV path")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("calibrate", help="fit the time-vs-agents line")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--agents", default="1:8", help="agent-count span A:B")
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="calibration CSV path")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("probe", help="measure machine performance")
    p.add_argument("--ms", type=float, default=200.0)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("agent", help="run a worker")
    p.add_argument("--bind", required=True, help="HOST:PORT (port 0 picks one)")
    p.add_argument("--agents", type=int, default=None, help="local portfolio size; default probes")
    p.add_argument("--probe-ms", type=float, default=200.0)
    p.set_defaults(func=cmd_agent)

    p = sub.add_parser("coordinate", help="race a job across workers")
    p.add_argument("--workers", required=True, help="HOST:PORT[,HOST:PORT...]")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--agents", type=int, default=0, help="per-worker agent count; 0 = worker default")
    p.set_defaults(func=cmd_coordinate)

    p = sub.add_parser("model", help="analytic timing model tools")
    p.add_argument("--ko", type=float, default=250.0)
    p.add_argument("--kove", type=float, default=1.0)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--na-range", default=None, help="agent-count span A:B")
    p.add_argument("--fit", default=None, help="fit constants from a measurement CSV")
    p.add_argument("--out", default=None, help="curve CSV path")
    p.set_defaults(func=cmd_model)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NoWorkersError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError, protocol.ProtocolError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
