"""Kernel backend selection.

The compiled extension is preferred when importable; otherwise the
pure-Python twin takes over transparently.  ``CSPRACER_KERNEL=pure`` forces
the fallback (useful for benchmarking and debugging), ``=compiled`` makes a
missing extension a hard error instead of a silent downgrade.
"""

from __future__ import annotations

import os

from . import pure

try:
    from . import _queens as compiled
except ImportError:
    compiled = None


def available_backends() -> dict:
    """Backends importable in this install, keyed by name."""
    backends = {pure.NAME: pure}
    if compiled is not None:
        backends[compiled.NAME] = compiled
    return backends


def _select():
    forced = os.environ.get("CSPRACER_KERNEL", "").strip().lower()
    if forced == "pure":
        return pure
    if forced == "compiled":
        if compiled is None:
            raise ImportError(
                "CSPRACER_KERNEL=compiled but the extension is not built; "
                "reinstall with a C toolchain or unset the variable"
            )
        return compiled
    if forced:
        raise ImportError(f"unknown CSPRACER_KERNEL value {forced!r}")
    return compiled if compiled is not None else pure


active = _select()

KERNEL_NAME = active.NAME
