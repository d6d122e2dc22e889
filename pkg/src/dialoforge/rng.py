"""Seed derivation for reproducible parallel streams."""

from __future__ import annotations

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK
    return z ^ (z >> 31)


def derive_seed(master: int, index: int) -> int:
    """Derive the index-th child seed from a master seed (splitmix-style).

    Children are independent of evaluation order, so work can be farmed out
    to parallel workers without changing any stream.
    """
    return _mix((master + (index + 1) * _GOLDEN) & _MASK)
