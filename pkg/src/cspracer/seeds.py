"""Seed derivation for independent agents.

Each racing agent, worker, and benchmark trial gets its own generator seed
derived from one base seed.  The derivation is a splitmix64 finalizer over
``base + (index+1) * golden``: the finalizer is a 64-bit bijection, so for a
fixed base all derived seeds are pairwise distinct.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix(base: int, index: int) -> int:
    """Derived 64-bit seed for stream ``index`` of ``base``."""
    z = (base + (index + 1) * _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)
