"""Byte-exact wire protocol between the initiator and worker processes.

A frame is a 4-byte big-endian unsigned payload length followed by the
payload: minified JSON with a mandated key order (``type``, ``job_id``,
then the body fields of that kind in declared order), so encoding is
bit-exact across implementations and testable byte for byte.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field

from .search import SearchConfig, default_config

__all__ = [
    "Message",
    "ProtocolError",
    "FrameError",
    "MessageError",
    "KINDS",
    "encode_message",
    "decode_message",
    "read_message",
    "write_message",
    "job",
    "result",
    "stop",
    "probe_req",
    "probe_resp",
    "error",
    "config_to_wire",
    "config_from_wire",
]


class ProtocolError(ValueError):
    """Base for anything wrong on the wire."""


class FrameError(ProtocolError):
    """Framing violation: bad prefix, truncation, oversize payload."""


class MessageError(ProtocolError):
    """Structurally sound frame carrying an invalid message."""


KINDS = ("JOB", "RESULT", "STOP", "PROBE_REQ", "PROBE_RESP", "ERROR")

# body fields per kind, in mandated wire order
_FIELDS: dict[str, tuple[str, ...]] = {
    "JOB": ("n", "config", "k", "seed"),
    "RESULT": ("values", "steps", "search_millis"),
    "STOP": (),
    "PROBE_REQ": ("duration_ms",),
    "PROBE_RESP": ("p",),
    "ERROR": ("code", "text"),
}

# search-config fields a JOB may carry, in mandated wire order;
# omitted fields mean the worker's defaults for the job's n
_CONFIG_FIELDS = ("random_walk_prob", "max_tries", "max_restarts", "stagnation_limit")

_U64_MAX = (1 << 64) - 1
_U32_MAX = (1 << 32) - 1
_PREFIX = struct.Struct("!I")


@dataclass(frozen=True)
class Message:
    kind: str
    job_id: int
    body: dict = field(default_factory=dict)


def _fail(cond: bool, text: str) -> None:
    if not cond:
        raise MessageError(text)


def _check_int(value, name: str, lo: int = 0, hi: int | None = None) -> None:
    _fail(isinstance(value, int) and not isinstance(value, bool), f"{name} must be an integer")
    _fail(value >= lo, f"{name} must be >= {lo}, got {value}")
    if hi is not None:
        _fail(value <= hi, f"{name} must be <= {hi}, got {value}")


def _check_number(value, name: str, positive: bool = False) -> None:
    ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    _fail(ok, f"{name} must be a number")
    _fail(math.isfinite(value), f"{name} must be finite, got {value}")
    if positive:
        _fail(value > 0, f"{name} must be > 0, got {value}")
    else:
        _fail(value >= 0, f"{name} must be >= 0, got {value}")


def _check_config(cfg: dict) -> None:
    _fail(isinstance(cfg, dict), "config must be an object")
    for key in cfg:
        _fail(key in _CONFIG_FIELDS, f"unknown config field {key!r}")
    if "random_walk_prob" in cfg:
        p = cfg["random_walk_prob"]
        _check_number(p, "config.random_walk_prob")
        _fail(p <= 1, f"config.random_walk_prob must be <= 1, got {p}")
    for key in ("max_tries", "stagnation_limit"):
        if key in cfg:
            _check_int(cfg[key], f"config.{key}", lo=1)
    if "max_restarts" in cfg:
        _check_int(cfg["max_restarts"], "config.max_restarts", lo=0)


def _validate(m: Message) -> None:
    if m.kind not in _FIELDS:
        raise MessageError(f"unknown message kind {m.kind!r}")
    _check_int(m.job_id, "job_id", lo=0, hi=_U64_MAX)
    _fail(isinstance(m.body, dict), "body must be a dict")
    declared = _FIELDS[m.kind]
    _fail(
        set(m.body) == set(declared),
        f"{m.kind} body must carry exactly {list(declared)}, got {sorted(m.body)}",
    )
    b = m.body
    if m.kind == "JOB":
        _check_int(b["n"], "n", lo=1)
        _check_config(b["config"])
        _check_int(b["k"], "k", lo=0)  # k = 0 means the worker's own default
        _check_int(b["seed"], "seed", lo=0, hi=_U64_MAX)
    elif m.kind == "RESULT":
        values = b["values"]
        _fail(isinstance(values, list) and len(values) >= 1, "values must be a non-empty list")
        for v in values:
            _check_int(v, "values[*]", lo=1)
        _check_int(b["steps"], "steps", lo=0)
        _check_number(b["search_millis"], "search_millis")
    elif m.kind == "PROBE_REQ":
        _check_number(b["duration_ms"], "duration_ms", positive=True)
    elif m.kind == "PROBE_RESP":
        _check_number(b["p"], "p", positive=True)
    elif m.kind == "ERROR":
        _fail(isinstance(b["code"], str) and b["code"] != "", "code must be a non-empty string")
        _fail(isinstance(b["text"], str), "text must be a string")


def encode_message(m: Message) -> bytes:
    """Serialize to one frame; field order is canonical regardless of how
    the caller built the body dict."""
    _validate(m)
    ordered: dict = {"type": m.kind, "job_id": m.job_id}
    for name in _FIELDS[m.kind]:
        value = m.body[name]
        if m.kind == "JOB" and name == "config":
            value = {key: value[key] for key in _CONFIG_FIELDS if key in value}
        ordered[name] = value
    payload = json.dumps(ordered, separators=(",", ":")).encode("utf-8")
    if len(payload) > _U32_MAX:
        raise FrameError(f"payload of {len(payload)} bytes exceeds the 32-bit length prefix")
    return _PREFIX.pack(len(payload)) + payload


def decode_message(frame: bytes) -> Message:
    """Parse one complete frame (prefix + payload) back into a Message."""
    if len(frame) < _PREFIX.size:
        raise FrameError(f"frame of {len(frame)} bytes is shorter than the length prefix")
    (length,) = _PREFIX.unpack_from(frame)
    if len(frame) != _PREFIX.size + length:
        raise FrameError(
            f"length prefix promises {length} payload bytes, frame carries {len(frame) - _PREFIX.size}"
        )
    try:
        obj = json.loads(frame[_PREFIX.size :].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MessageError(f"payload is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise MessageError("payload must be a JSON object")
    if "type" not in obj or "job_id" not in obj:
        raise MessageError("payload must carry type and job_id")
    kind = obj.pop("type")
    job_id = obj.pop("job_id")
    if not isinstance(kind, str):
        raise MessageError("type must be a string")
    m = Message(kind=kind, job_id=job_id, body=obj)
    _validate(m)
    return m


def _recv_exact(sock, count: int) -> bytes | None:
    """Read exactly count bytes; None on clean EOF before the first byte."""
    chunks = []
    got = 0
    while got < count:
        chunk = sock.recv(count - got)
        if not chunk:
            if got == 0:
                return None
            raise FrameError(f"connection closed after {got} of {count} frame bytes")
        chunks.append(chunk)
        got += len(chunk)
    return b"".join(chunks)


def read_message(sock) -> Message | None:
    """Read one frame from a connected socket; None on clean EOF at a
    frame boundary, FrameError on mid-frame EOF."""
    prefix = _recv_exact(sock, _PREFIX.size)
    if prefix is None:
        return None
    (length,) = _PREFIX.unpack(prefix)
    payload = _recv_exact(sock, length) if length else b""
    if payload is None:
        raise FrameError(f"connection closed before the {length}-byte payload")
    return decode_message(prefix + payload)


def write_message(sock, m: Message) -> None:
    sock.sendall(encode_message(m))


def job(job_id: int, n: int, config: dict, k: int, seed: int) -> Message:
    return Message("JOB", job_id, {"n": n, "config": config, "k": k, "seed": seed})


def result(job_id: int, values, steps: int, search_millis: float) -> Message:
    return Message(
        "RESULT", job_id, {"values": list(values), "steps": steps, "search_millis": search_millis}
    )


def stop(job_id: int) -> Message:
    return Message("STOP", job_id, {})


def probe_req(job_id: int, duration_ms: float) -> Message:
    return Message("PROBE_REQ", job_id, {"duration_ms": duration_ms})


def probe_resp(job_id: int, p: float) -> Message:
    return Message("PROBE_RESP", job_id, {"p": p})


def error(job_id: int, code: str, text: str) -> Message:
    return Message("ERROR", job_id, {"code": code, "text": text})


def config_to_wire(cfg: SearchConfig) -> dict:
    """Search knobs as a JOB config object (the seed travels separately)."""
    return {
        "random_walk_prob": cfg.random_walk_prob,
        "max_tries": cfg.max_tries,
        "max_restarts": cfg.max_restarts,
        "stagnation_limit": cfg.stagnation_limit,
    }


def config_from_wire(wire: dict, n: int) -> SearchConfig:
    """Rebuild a config from a JOB, filling omitted fields with the
    defaults for this instance size."""
    _check_config(wire)
    base = default_config(n, seed=0)
    known = {key: wire[key] for key in _CONFIG_FIELDS if key in wire}
    if "random_walk_prob" in known:
        known["random_walk_prob"] = float(known["random_walk_prob"])
    return SearchConfig(
        random_walk_prob=known.get("random_walk_prob", base.random_walk_prob),
        max_tries=known.get("max_tries", base.max_tries),
        max_restarts=known.get("max_restarts", base.max_restarts),
        stagnation_limit=known.get("stagnation_limit", base.stagnation_limit),
        seed=0,
    )
