"""Initiator/worker harness over the framed wire protocol.

A worker (``AgentServer``) accepts one job at a time, races a local
portfolio for it, and reports the first solution back.  The initiator
(``initiator_run``) fans a job out to every reachable worker with
distinct derived seeds, accepts the first validating result, broadcasts
STOP to the rest, and accounts the run as t_tat = t_o + t_ove where t_o
is the winner's self-reported search time.
"""

from __future__ import annotations

import socket
import threading
import time
from dataclasses import dataclass, field

from . import protocol
from .core import make_nqueens, validate_solution
from .protocol import FrameError, Message, ProtocolError, read_message, write_message
from .runtime import homogenized_agent_count, performance_probe, run_portfolio
from .search import SearchConfig, default_config
from .seeds import mix

__all__ = [
    "AgentServer",
    "agent_serve",
    "initiator_run",
    "TimingBreakdown",
    "WorkerReport",
    "CoordinationResult",
    "NoWorkersError",
    "NoResultError",
]

_JOB_ID_STREAM = 0x4A4F42  # seed-derivation index reserved for job ids


class NoWorkersError(RuntimeError):
    """No endpoint could be reached."""


class NoResultError(RuntimeError):
    """Every reachable worker finished without a usable result."""

    def __init__(self, text: str, workers=None, warnings=None):
        super().__init__(text)
        self.workers = workers or []
        self.warnings = warnings or []


@dataclass(frozen=True)
class TimingBreakdown:
    t_tat: float  # initiator turnaround, launch through stop-broadcast completion (ms)
    t_o: float  # winner's self-reported search duration (ms)
    t_ove: float  # everything else: t_tat - t_o (ms)

    def __post_init__(self):
        if self.t_tat < 0 or self.t_o < 0:
            raise ValueError("durations must be non-negative")
        if self.t_tat != self.t_o + self.t_ove:
            raise ValueError("t_tat must equal t_o + t_ove exactly")

    @classmethod
    def from_measured(cls, t_tat: float, t_o: float) -> "TimingBreakdown":
        # t_o + (t_tat - t_o) need not round back to t_tat in floats, so
        # the reported turnaround is defined as the exact sum; it differs
        # from the measured value by at most one rounding
        t_ove = t_tat - t_o
        return cls(t_tat=t_o + t_ove, t_o=t_o, t_ove=t_ove)


def parse_endpoint(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not host:
        raise ValueError(f"endpoint must look like HOST:PORT, got {text!r}")
    return host, int(port)


# ---------------------------------------------------------------------------
# worker side


class _JobState:
    """One job's lifecycle on a worker: RUNNING until a terminal send."""

    __slots__ = ("job_id", "stop", "thread", "terminal")

    def __init__(self, job_id: int):
        self.job_id = job_id
        self.stop = threading.Event()
        self.thread: threading.Thread | None = None
        self.terminal = False  # set under the server lock before any terminal send


class AgentServer:
    """Worker process core: serves JOB/STOP/PROBE_REQ over a listening
    socket, one job at a time.

    ``agents`` fixes the local portfolio size; when None it is derived
    from a startup performance probe of ``probe_ms`` milliseconds, so a
    slower machine volunteers fewer agents.
    """

    def __init__(self, bind_address, agents: int | None = None, probe_ms: float = 200.0):
        if isinstance(bind_address, str):
            bind_address = parse_endpoint(bind_address)
        if agents is not None and agents < 1:
            raise ValueError(f"agents must be >= 1, got {agents}")
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind(bind_address)
        self._listener.listen()
        self.address: tuple[str, int] = self._listener.getsockname()[:2]
        if agents is None:
            probe = performance_probe(probe_ms / 1000.0)
            agents = homogenized_agent_count(probe.p)
        self.agents = agents
        self._lock = threading.Lock()
        self._job: _JobState | None = None
        self._closing = False
        self._accept_thread: threading.Thread | None = None
        self._conn_threads: list[threading.Thread] = []
        self._conns: set[socket.socket] = set()

    # -- lifecycle

    def start(self) -> None:
        """Serve in a background thread (close() tears it down)."""
        self._accept_thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._accept_thread.start()

    def serve_forever(self) -> None:
        while True:
            try:
                conn, _ = self._listener.accept()
            except OSError:
                return  # listener closed
            t = threading.Thread(target=self._serve_connection, args=(conn,), daemon=True)
            with self._lock:
                if self._closing:
                    conn.close()
                    return
                self._conn_threads.append(t)
                self._conns.add(conn)
            t.start()

    def close(self) -> None:
        with self._lock:
            self._closing = True
            job = self._job
            if job is not None:
                job.stop.set()
            threads = list(self._conn_threads)
            conns = list(self._conns)
        try:
            # close() alone does not wake a thread blocked in accept()
            self._listener.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._listener.close()
        for conn in conns:
            try:
                conn.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
        if self._accept_thread is not None:
            self._accept_thread.join(timeout=5)
        for t in threads:
            t.join(timeout=5)

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, *exc):
        self.close()

    # -- connection handling

    def _serve_connection(self, conn: socket.socket) -> None:
        send_lock = threading.Lock()
        started_job: _JobState | None = None
        try:
            while True:
                try:
                    msg = read_message(conn)
                except ProtocolError as exc:
                    self._send(conn, send_lock, protocol.error(0, "malformed", str(exc)))
                    return
                if msg is None:
                    return
                started = self._dispatch(conn, send_lock, msg)
                if started is not None:
                    started_job = started
        except OSError:
            pass
        finally:
            # peer is gone: a job it started must not run on unattended
            if started_job is not None:
                with self._lock:
                    started_job.stop.set()
                    started_job.terminal = True
            with self._lock:
                self._conns.discard(conn)
            conn.close()

    def _send(self, conn, send_lock, msg: Message) -> None:
        try:
            with send_lock:
                write_message(conn, msg)
        except OSError:
            pass

    def _dispatch(self, conn, send_lock, msg: Message) -> _JobState | None:
        if msg.kind == "JOB":
            return self._handle_job(conn, send_lock, msg)
        if msg.kind == "STOP":
            self._handle_stop(conn, send_lock, msg)
        elif msg.kind == "PROBE_REQ":
            probe = performance_probe(msg.body["duration_ms"] / 1000.0)
            self._send(conn, send_lock, protocol.probe_resp(msg.job_id, probe.p))
        else:
            self._send(
                conn,
                send_lock,
                protocol.error(msg.job_id, "unexpected", f"worker cannot accept {msg.kind}"),
            )
        return None

    def _handle_job(self, conn, send_lock, msg: Message) -> _JobState | None:
        with self._lock:
            if self._job is not None and not self._job.terminal:
                code = "duplicate" if self._job.job_id == msg.job_id else "busy"
                self._send(
                    conn, send_lock, protocol.error(msg.job_id, code, "a job is already running")
                )
                return None
            job = _JobState(msg.job_id)
            self._job = job
        k = msg.body["k"] or self.agents
        try:
            cfg = protocol.config_from_wire(msg.body["config"], msg.body["n"])
            inst = make_nqueens(msg.body["n"])
        except (ProtocolError, ValueError) as exc:
            with self._lock:
                job.terminal = True
            self._send(conn, send_lock, protocol.error(msg.job_id, "bad_job", str(exc)))
            return job
        job.thread = threading.Thread(
            target=self._run_job,
            args=(conn, send_lock, job, inst, k, cfg, msg.body["seed"]),
            daemon=True,
        )
        job.thread.start()
        return job

    def _run_job(self, conn, send_lock, job: _JobState, inst, k, cfg: SearchConfig, seed) -> None:
        try:
            res = run_portfolio(inst, k, cfg, seed=seed, stop=job.stop)
        except Exception as exc:
            with self._lock:
                already_done = job.terminal
                job.terminal = True
                if not already_done:
                    self._send(conn, send_lock, protocol.error(job.job_id, "internal", str(exc)))
            return
        with self._lock:
            if job.terminal:
                return  # STOP was acknowledged first; stay silent
            job.terminal = True
            if res.solved:
                reply = protocol.result(
                    job.job_id,
                    res.outcome.assignment,
                    res.outcome.stats.steps,
                    res.wall_millis,
                )
            else:
                reply = protocol.error(
                    job.job_id, "unsolved", f"search budget exhausted at eval {res.outcome.stats.final_eval}"
                )
            self._send(conn, send_lock, reply)

    def _handle_stop(self, conn, send_lock, msg: Message) -> None:
        with self._lock:
            job = self._job
            if job is not None and job.job_id == msg.job_id and not job.terminal:
                job.stop.set()
                job.terminal = True
            # a repeated or stray STOP is acknowledged as a no-op
            self._send(conn, send_lock, protocol.stop(msg.job_id))


def agent_serve(bind_address, agents: int | None = None, probe_ms: float = 200.0) -> None:
    """Run a worker on ``bind_address`` until the process is terminated."""
    server = AgentServer(bind_address, agents=agents, probe_ms=probe_ms)
    server.serve_forever()


# ---------------------------------------------------------------------------
# initiator side


@dataclass
class WorkerReport:
    endpoint: str
    status: str  # won | stopped | no_ack | unsolved | unreachable | flagged | error | disconnected
    search_millis: float | None = None
    steps: int | None = None
    ack_ms: float | None = None
    detail: str = ""


@dataclass
class CoordinationResult:
    assignment: list[int]
    timing: TimingBreakdown
    workers: list[WorkerReport]
    warnings: list[str] = field(default_factory=list)
    winner: int = 0  # index into the endpoint list


class _Race:
    """First-write-wins result slot shared by the reader threads."""

    def __init__(self, live: int):
        self.cond = threading.Condition()
        self.pending = live  # readers still able to produce a result
        self.winner: int | None = None
        self.values: list[int] | None = None
        self.steps = 0
        self.search_millis = 0.0
        self.accept_time = 0.0
        self.acked: set[int] = set()


def _reader(idx: int, sock, inst, job_id: int, race: _Race, report: WorkerReport) -> None:
    terminal = False
    while True:
        try:
            msg = read_message(sock)
        except ProtocolError as exc:
            msg = None
            report.status, report.detail = "error", str(exc)
            terminal = True
        except OSError:
            msg = None
        if msg is None:
            with race.cond:
                if not terminal and report.status == "racing":
                    report.status = "disconnected"
                if race.pending > 0:
                    race.pending -= 1
                race.cond.notify_all()
            return
        if msg.kind == "RESULT" and msg.job_id == job_id:
            values = [int(v) for v in msg.body["values"]]
            valid = validate_solution(inst, values)
            with race.cond:
                if not valid:
                    report.status = "flagged"
                    report.detail = "result failed validation"
                elif race.winner is None:
                    race.winner = idx
                    race.values = values
                    race.steps = int(msg.body["steps"])
                    race.search_millis = float(msg.body["search_millis"])
                    race.accept_time = time.perf_counter()
                    report.status = "won"
                    report.search_millis = race.search_millis
                    report.steps = race.steps
                else:
                    report.status = "late"
                    report.detail = "solved after another worker's result was accepted"
                race.pending -= 1
                race.cond.notify_all()
        elif msg.kind == "STOP" and msg.job_id == job_id:
            with race.cond:
                race.acked.add(idx)
                if report.status == "racing":
                    report.status = "stopped"
                race.cond.notify_all()
        elif msg.kind == "ERROR":
            with race.cond:
                report.status = "unsolved" if msg.body["code"] == "unsolved" else "error"
                report.detail = f"{msg.body['code']}: {msg.body['text']}"
                race.pending -= 1
                race.cond.notify_all()


def initiator_run(
    endpoints,
    n: int,
    cfg: SearchConfig | None = None,
    seed: int = 0,
    k: int = 0,
    connect_timeout: float = 2.0,
    ack_timeout: float = 2.0,
) -> CoordinationResult:
    """Distribute one solve over the worker pool and race them.

    Sends a JOB with a distinct derived seed to every reachable worker
    (k = 0 lets each worker use its own agent count), accepts the first
    result that validates, then broadcasts STOP and waits (bounded) for
    acknowledgments.  Unreachable workers become warnings unless none are
    reachable.  Raises NoResultError when every worker finishes without a
    validating result.
    """
    endpoints = [parse_endpoint(e) if isinstance(e, str) else tuple(e) for e in endpoints]
    if not endpoints:
        raise ValueError("need at least one worker endpoint")
    if cfg is None:
        cfg = default_config(n, seed=seed)
    inst = make_nqueens(n)
    job_id = mix(seed, _JOB_ID_STREAM)
    wire_cfg = protocol.config_to_wire(cfg)

    t_launch = time.perf_counter()
    socks: dict[int, socket.socket] = {}
    reports = []
    warnings = []
    for i, (host, port) in enumerate(endpoints):
        label = f"{host}:{port}"
        report = WorkerReport(endpoint=label, status="racing")
        reports.append(report)
        try:
            sock = socket.create_connection((host, port), timeout=connect_timeout)
            sock.settimeout(None)
            write_message(sock, protocol.job(job_id, n, wire_cfg, k, mix(seed, i)))
        except OSError as exc:
            report.status = "unreachable"
            report.detail = str(exc)
            warnings.append(f"worker {label} unreachable: {exc}")
            continue
        socks[i] = sock
    if not socks:
        raise NoWorkersError(f"no worker among {len(endpoints)} endpoints is reachable")

    race = _Race(live=len(socks))
    readers = []
    for i, sock in socks.items():
        t = threading.Thread(
            target=_reader, args=(i, sock, inst, job_id, race, reports[i]), daemon=True
        )
        readers.append(t)
        t.start()

    try:
        with race.cond:
            race.cond.wait_for(lambda: race.winner is not None or race.pending == 0)
            winner = race.winner
        if winner is None:
            raise NoResultError(
                "all reachable workers finished without a validating result",
                workers=reports,
                warnings=warnings,
            )

        # stop everyone else, then wait (bounded) for their acknowledgments
        others = [i for i in socks if i != winner]
        bcast_start = time.perf_counter()
        for i in others:
            try:
                write_message(socks[i], protocol.stop(job_id))
            except OSError as exc:
                reports[i].status = "disconnected"
                reports[i].detail = str(exc)
        expect = {
            i for i in others if reports[i].status in ("racing", "stopped", "unsolved", "late")
        }
        if expect:
            with race.cond:
                race.cond.wait_for(lambda: expect <= race.acked, timeout=ack_timeout)
            ack_ms = (time.perf_counter() - bcast_start) * 1000.0
            with race.cond:
                for i in expect:
                    if i in race.acked:
                        reports[i].ack_ms = ack_ms
                    else:
                        reports[i].status = "no_ack"
        t_done = time.perf_counter()
    finally:
        for sock in socks.values():
            try:
                sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            sock.close()
        for t in readers:
            t.join(timeout=2)

    t_tat = (t_done - t_launch) * 1000.0
    timing = TimingBreakdown.from_measured(t_tat=t_tat, t_o=race.search_millis)
    return CoordinationResult(
        assignment=list(race.values),
        timing=timing,
        workers=reports,
        warnings=warnings,
        winner=winner,
    )
