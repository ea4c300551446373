import random
import socket
import threading
import time

import pytest

from cspracer import protocol
from cspracer.core import make_nqueens, validate_solution
from cspracer.net import (
    AgentServer,
    CoordinationResult,
    NoResultError,
    NoWorkersError,
    TimingBreakdown,
    initiator_run,
    parse_endpoint,
)
from cspracer.protocol import read_message, write_message
from cspracer.search import SearchConfig

BOUNDED = SearchConfig(
    random_walk_prob=0.02, max_tries=100, max_restarts=2, stagnation_limit=6, seed=0
)


def free_dead_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


class TestTimingBreakdown:
    def test_from_measured_splits(self):
        t = TimingBreakdown.from_measured(t_tat=5.0, t_o=2.0)
        assert t.t_o == 2.0
        assert t.t_ove == 3.0
        assert t.t_tat == 5.0

    def test_identity_is_exact_despite_rounding(self):
        # the infamous float triple: 0.1 + (0.3 - 0.1) != 0.3
        t = TimingBreakdown.from_measured(t_tat=0.3, t_o=0.1)
        assert t.t_tat == t.t_o + t.t_ove
        rng = random.Random(8)
        for _ in range(5000):
            t_o = rng.uniform(0, 100)
            t = TimingBreakdown.from_measured(t_tat=t_o + rng.uniform(0, 100), t_o=t_o)
            assert t.t_tat == t.t_o + t.t_ove

    def test_rejects_inconsistent_triple(self):
        with pytest.raises(ValueError):
            TimingBreakdown(t_tat=5.0, t_o=2.0, t_ove=2.0)

    def test_rejects_negative_durations(self):
        with pytest.raises(ValueError):
            TimingBreakdown(t_tat=-1.0, t_o=0.0, t_ove=-1.0)
        with pytest.raises(ValueError):
            TimingBreakdown(t_tat=1.0, t_o=-1.0, t_ove=2.0)


class TestParseEndpoint:
    def test_host_port(self):
        assert parse_endpoint("127.0.0.1:9000") == ("127.0.0.1", 9000)
        assert parse_endpoint("worker-3.local:0") == ("worker-3.local", 0)

    @pytest.mark.parametrize("text", ["nohost", ":123", "host:", "host:abc"])
    def test_rejects_malformed(self, text):
        with pytest.raises(ValueError):
            parse_endpoint(text)


def connect(server):
    sock = socket.create_connection(server.address, timeout=5)
    sock.settimeout(5)
    return sock


class TestAgentServer:
    def test_job_yields_validating_result(self):
        with AgentServer(("127.0.0.1", 0), agents=2) as server:
            with connect(server) as sock:
                write_message(sock, protocol.job(11, 8, {}, 1, 5))
                msg = read_message(sock)
        assert msg.kind == "RESULT"
        assert msg.job_id == 11
        assert validate_solution(make_nqueens(8), msg.body["values"])
        assert msg.body["steps"] > 0
        assert msg.body["search_millis"] >= 0

    def test_stop_kills_job_and_stays_silent(self):
        with AgentServer(("127.0.0.1", 0), agents=2) as server:
            with connect(server) as sock:
                # n = 3 has no solution, so only STOP can end this job
                write_message(sock, protocol.job(21, 3, {}, 0, 1))
                time.sleep(0.05)
                write_message(sock, protocol.stop(21))
                ack = read_message(sock)
                assert ack == protocol.stop(21)
                sock.settimeout(0.5)
                with pytest.raises(TimeoutError):
                    read_message(sock)  # no RESULT may follow an acked STOP

    def test_repeated_stop_is_idempotent(self):
        with AgentServer(("127.0.0.1", 0), agents=1) as server:
            with connect(server) as sock:
                for _ in range(3):
                    write_message(sock, protocol.stop(99))
                    assert read_message(sock) == protocol.stop(99)

    def test_probe_round_trip(self):
        with AgentServer(("127.0.0.1", 0), agents=1) as server:
            with connect(server) as sock:
                write_message(sock, protocol.probe_req(31, 20.0))
                msg = read_message(sock)
        assert msg.kind == "PROBE_RESP"
        assert msg.job_id == 31
        assert msg.body["p"] > 0

    def test_unexpected_kind_is_answered_with_error(self):
        with AgentServer(("127.0.0.1", 0), agents=1) as server:
            with connect(server) as sock:
                write_message(sock, protocol.result(41, [1], 0, 0.0))
                msg = read_message(sock)
        assert msg.kind == "ERROR"
        assert msg.body["code"] == "unexpected"

    def test_malformed_frame_gets_error_then_close(self):
        with AgentServer(("127.0.0.1", 0), agents=1) as server:
            with connect(server) as sock:
                sock.sendall(b"\x00\x00\x00\x04junk")
                msg = read_message(sock)
                assert msg.kind == "ERROR"
                assert msg.body["code"] == "malformed"
                assert read_message(sock) is None  # worker hangs up

    def test_second_job_is_busy_and_duplicate(self):
        with AgentServer(("127.0.0.1", 0), agents=2) as server:
            with connect(server) as a, connect(server) as b:
                write_message(a, protocol.job(51, 3, {}, 0, 1))
                time.sleep(0.05)
                write_message(b, protocol.job(52, 8, {}, 1, 1))
                busy = read_message(b)
                assert busy.kind == "ERROR"
                assert busy.body["code"] == "busy"
                write_message(b, protocol.job(51, 8, {}, 1, 1))
                dup = read_message(b)
                assert dup.kind == "ERROR"
                assert dup.body["code"] == "duplicate"
                # end the stuck job, then the worker accepts new work
                write_message(a, protocol.stop(51))
                assert read_message(a) == protocol.stop(51)
                write_message(b, protocol.job(53, 8, {}, 1, 1))
                msg = read_message(b)
                assert msg.kind == "RESULT"

    def test_peer_disconnect_cancels_its_job(self):
        with AgentServer(("127.0.0.1", 0), agents=2) as server:
            sock = connect(server)
            write_message(sock, protocol.job(61, 3, {}, 0, 1))
            time.sleep(0.05)
            sock.close()
            deadline = time.monotonic() + 5
            while True:  # cleanup is asynchronous; retry until accepted
                with connect(server) as retry:
                    write_message(retry, protocol.job(62, 8, {}, 1, 1))
                    msg = read_message(retry)
                    if msg.kind == "RESULT":
                        break
                assert msg.body["code"] == "busy"
                assert time.monotonic() < deadline, "job survived its peer"
                time.sleep(0.05)

    def test_unsolvable_job_reports_unsolved(self):
        with AgentServer(("127.0.0.1", 0), agents=1) as server:
            with connect(server) as sock:
                cfg = protocol.config_to_wire(BOUNDED)
                write_message(sock, protocol.job(71, 3, cfg, 1, 1))
                msg = read_message(sock)
        assert msg.kind == "ERROR"
        assert msg.body["code"] == "unsolved"

    def test_startup_probe_derives_agent_count(self):
        with AgentServer(("127.0.0.1", 0), agents=None, probe_ms=20.0) as server:
            assert 1 <= server.agents <= 8

    def test_string_bind_address(self):
        with AgentServer("127.0.0.1:0", agents=1) as server:
            assert server.address[0] == "127.0.0.1"
            assert server.address[1] > 0

    def test_rejects_non_positive_agents(self):
        with pytest.raises(ValueError):
            AgentServer(("127.0.0.1", 0), agents=0)


class TestInitiatorRun:
    def endpoints(self, servers):
        return [f"127.0.0.1:{s.address[1]}" for s in servers]

    def test_needs_endpoints(self):
        with pytest.raises(ValueError):
            initiator_run([], n=8)

    def test_all_unreachable(self):
        with pytest.raises(NoWorkersError):
            initiator_run([f"127.0.0.1:{free_dead_port()}"], n=8, connect_timeout=0.5)

    def test_single_worker_round_trip(self):
        with AgentServer(("127.0.0.1", 0), agents=2) as server:
            res = initiator_run(self.endpoints([server]), n=12, seed=3)
        assert isinstance(res, CoordinationResult)
        assert validate_solution(make_nqueens(12), res.assignment)
        assert res.winner == 0
        assert res.workers[0].status == "won"
        assert res.timing.t_tat == res.timing.t_o + res.timing.t_ove
        assert res.timing.t_tat > 0
        assert res.timing.t_ove > 0  # connect + wire time is never free
        assert res.warnings == []

    def test_deterministic_assignment_for_fixed_seed(self):
        def run():
            with AgentServer(("127.0.0.1", 0), agents=1) as server:
                return initiator_run(self.endpoints([server]), n=10, seed=42).assignment

        assert run() == run()

    def test_race_stops_losers(self):
        servers = [AgentServer(("127.0.0.1", 0), agents=1) for _ in range(3)]
        try:
            for s in servers:
                s.start()
            res = initiator_run(self.endpoints(servers), n=16, seed=7)
        finally:
            for s in servers:
                s.close()
        assert validate_solution(make_nqueens(16), res.assignment)
        assert res.workers[res.winner].status == "won"
        losers = [w for i, w in enumerate(res.workers) if i != res.winner]
        assert losers
        for w in losers:
            assert w.status in ("stopped", "late", "unsolved", "no_ack")
            if w.status in ("stopped", "late", "unsolved"):
                assert w.ack_ms is not None and w.ack_ms < 2000

    def test_unreachable_minority_becomes_warning(self):
        with AgentServer(("127.0.0.1", 0), agents=2) as server:
            endpoints = self.endpoints([server]) + [f"127.0.0.1:{free_dead_port()}"]
            res = initiator_run(endpoints, n=10, seed=1, connect_timeout=0.5)
        assert validate_solution(make_nqueens(10), res.assignment)
        assert len(res.warnings) == 1
        assert res.workers[1].status == "unreachable"

    def test_all_unsolved_raises_with_reports(self):
        servers = [AgentServer(("127.0.0.1", 0), agents=1) for _ in range(2)]
        try:
            for s in servers:
                s.start()
            with pytest.raises(NoResultError) as info:
                initiator_run(self.endpoints(servers), n=3, cfg=BOUNDED, seed=5)
        finally:
            for s in servers:
                s.close()
        assert [w.status for w in info.value.workers] == ["unsolved", "unsolved"]

    def test_forged_result_is_flagged_and_race_continues(self):
        listener = socket.socket()
        listener.bind(("127.0.0.1", 0))
        listener.listen()
        forged_port = listener.getsockname()[1]

        def forger():
            conn, _ = listener.accept()
            conn.settimeout(5)
            try:
                msg = read_message(conn)  # the JOB
                n = msg.body["n"]
                write_message(conn, protocol.result(msg.job_id, [1] * n, 1, 0.001))
                while read_message(conn) is not None:
                    pass  # drain the STOP broadcast until EOF
            except (OSError, protocol.ProtocolError):
                pass
            finally:
                conn.close()

        t = threading.Thread(target=forger, daemon=True)
        t.start()
        try:
            with AgentServer(("127.0.0.1", 0), agents=2) as server:
                res = initiator_run(
                    [f"127.0.0.1:{forged_port}"] + self.endpoints([server]), n=10, seed=2
                )
        finally:
            listener.close()
            t.join(timeout=5)
        assert res.winner == 1
        assert validate_solution(make_nqueens(10), res.assignment)
        assert res.workers[0].status == "flagged"
