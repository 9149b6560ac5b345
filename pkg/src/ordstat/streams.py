"""Keyed counter-based random streams.

A stream is identified by ``(seed, index)``; both go into the 128-bit key
of a Philox generator whose counter starts at zero.  Distinct indices give
independent, non-overlapping streams, so work split by stream index replays
identically no matter how many workers consume it.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = ["stream", "open_uniforms", "default_seed"]

_MASK64 = (1 << 64) - 1
_ULP53 = 2.0 ** -53


def stream(seed: int, index: int = 0) -> np.random.Generator:
    """Generator for stream ``index`` under ``seed``."""
    if index < 0:
        raise ValueError("stream index must be non-negative")
    key = np.array([seed & _MASK64, index & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def open_uniforms(rng: np.random.Generator, size=None):
    """Uniform variates on the open interval (0, 1), 53-bit resolution."""
    k = rng.integers(0, 1 << 53, size=size, dtype=np.uint64)
    return (k.astype(float) + 0.5) * _ULP53


def default_seed(fallback: int = 20190101) -> int:
    """Seed from ``ORDSTAT_SEED`` when set, else ``fallback``."""
    raw = os.environ.get("ORDSTAT_SEED")
    return int(raw) if raw not in (None, "") else fallback
