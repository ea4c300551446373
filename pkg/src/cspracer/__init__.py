"""Conflict-count local search over CSPs with racing agents.

The library side: build an instance (``make_nqueens`` or the generic
``CspInstance`` constructors), solve it with the evaluation-guided local
search (``gef_solve``) or the systematic baseline (``backtrack_solve``),
race several searches on one machine (``run_portfolio``) or across
machines (``AgentServer`` / ``initiator_run``), and reason about the
cost of adding agents (``OverheadModel``).  The ``cspracer`` command
wraps all of it for the shell.
"""

from ._kernels import KERNEL_NAME, available_backends
from .backtrack import BacktrackResult, backtrack_solve, count_solutions
from .core import (
    CspError,
    CspInstance,
    InvalidInstanceError,
    MalformedAssignmentError,
    format_assignment,
    make_nqueens,
    parse_assignment,
    random_state,
    validate_solution,
)
from .model import OverheadModel, emit_curves, fit_constants
from .net import (
    AgentServer,
    CoordinationResult,
    NoResultError,
    NoWorkersError,
    TimingBreakdown,
    agent_serve,
    initiator_run,
)
from .protocol import Message, ProtocolError, decode_message, encode_message
from .runtime import (
    CalibrationReport,
    PerfProbe,
    PortfolioResult,
    calibrate_max_agents,
    homogenized_agent_count,
    linear_regression,
    performance_probe,
    run_portfolio,
)
from .search import (
    Move,
    SearchConfig,
    SearchOutcome,
    SearchStats,
    SolveStatus,
    best_move,
    default_config,
    eval_delta,
    eval_global,
    gef_solve,
    neighbors,
)
from .seeds import mix

__version__ = "0.1.0"

__all__ = [
    "KERNEL_NAME",
    "available_backends",
    "BacktrackResult",
    "backtrack_solve",
    "count_solutions",
    "CspError",
    "CspInstance",
    "InvalidInstanceError",
    "MalformedAssignmentError",
    "format_assignment",
    "make_nqueens",
    "parse_assignment",
    "random_state",
    "validate_solution",
    "OverheadModel",
    "emit_curves",
    "fit_constants",
    "AgentServer",
    "CoordinationResult",
    "NoResultError",
    "NoWorkersError",
    "TimingBreakdown",
    "agent_serve",
    "initiator_run",
    "Message",
    "ProtocolError",
    "decode_message",
    "encode_message",
    "CalibrationReport",
    "PerfProbe",
    "PortfolioResult",
    "calibrate_max_agents",
    "homogenized_agent_count",
    "linear_regression",
    "performance_probe",
    "run_portfolio",
    "Move",
    "SearchConfig",
    "SearchOutcome",
    "SearchStats",
    "SolveStatus",
    "best_move",
    "default_config",
    "eval_delta",
    "eval_global",
    "gef_solve",
    "neighbors",
    "mix",
    "__version__",
]
