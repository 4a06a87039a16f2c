"""Deterministic random streams keyed by (seed, lane).

Every stochastic routine in the package derives its randomness from a
counter-based Philox generator keyed by a 64-bit seed plus a lane index.
A trial, chunk, or probe stream is a pure function of its key, so results
are bit-identical regardless of execution order or thread count.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def stream(seed: int, lane: int = 0) -> np.random.Generator:
    """Independent generator for (seed, lane)."""
    key = np.array([seed & _MASK64, lane & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def uniform_open(gen: np.random.Generator, size=None):
    """Uniform draws strictly inside (0, 1).

    Values are midpoints of a 52-bit grid, so 0.0 and 1.0 are unreachable
    and every draw is exactly representable; quantile transforms never see
    an endpoint.
    """
    k = gen.integers(0, 1 << 52, size=size, dtype=np.uint64)
    return (k.astype(np.float64) + 0.5) * 2.0**-52


class StreamPool:
    """Reusable generator for hot loops that visit many (seed, lane) keys.

    Constructing a Philox object pulls OS entropy for bookkeeping and costs
    tens of microseconds; resetting the state of an existing one is cheap.
    rekey() rewinds this pool's generator to the exact stream that
    stream(seed, lane) would produce (verified bit-identical).  The caller
    owns the pool: each worker thread needs its own instance, and a rekey
    invalidates any previously returned handle.
    """

    def __init__(self):
        self._bit_gen = np.random.Philox(counter=0, key=0)
        self._gen = np.random.Generator(self._bit_gen)
        self._template = self._bit_gen.state

    def rekey(self, seed: int, lane: int = 0) -> np.random.Generator:
        st = self._template
        st["state"]["key"][0] = seed & _MASK64
        st["state"]["key"][1] = lane & _MASK64
        st["state"]["counter"][:] = 0
        st["buffer_pos"] = 4
        st["has_uint32"] = 0
        st["uinteger"] = 0
        self._bit_gen.state = st
        return self._gen
