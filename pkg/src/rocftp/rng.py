"""Reproducible random streams keyed by ``(master_seed, stream_id)``.

Streams are backed by numpy's Philox generator, a counter-based design whose
128-bit key is set directly from the two ids. Deriving a new stream therefore
costs one key setup, and two streams with different keys never overlap.
"""
from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_MASK64 = (1 << 64) - 1
# smallest positive value the inverse normal transform is ever fed
_TINY = 2.0**-54


def _u64(value: int) -> int:
    value = int(value)
    if value < 0:
        raise ValueError(f"seed/stream ids must be non-negative, got {value}")
    return value & _MASK64


def derive_seed(master_seed: int, *path: int) -> int:
    """Hash a master seed and an integer path into a fresh 64-bit seed.

    Used when an experiment needs a second level of streams (replication r,
    block b): the replication gets ``derive_seed(seed, tag, r)`` as its own
    master seed and its blocks are ``stream_id = b`` under it.
    """
    entropy = [_u64(master_seed)] + [_u64(p) for p in path]
    state = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint64)
    return int(state[0])


class RngStream:
    """Single-owner random stream.

    Every normal variate consumes exactly one uniform (inverse-CDF transform),
    so the position in the stream after any sequence of calls is known.
    """

    __slots__ = ("master_seed", "stream_id", "_gen")

    def __init__(self, master_seed: int, stream_id: int):
        self.master_seed = _u64(master_seed)
        self.stream_id = _u64(stream_id)
        key = np.array([self.stream_id, self.master_seed], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def __repr__(self) -> str:
        return f"RngStream(master_seed={self.master_seed}, stream_id={self.stream_id})"

    def next_uniform(self) -> float:
        return float(self._gen.random())

    def uniforms(self, n: int) -> np.ndarray:
        """``n`` uniforms in [0, 1); same values as ``n`` calls to next_uniform."""
        return self._gen.random(n)

    def next_standard_normal(self) -> float:
        return float(uniform_to_normal(self._gen.random()))

    def standard_normals(self, n: int) -> np.ndarray:
        return uniform_to_normal(self._gen.random(n))


def new_stream(master_seed: int, stream_id: int) -> RngStream:
    return RngStream(master_seed, stream_id)


def uniform_to_normal(u):
    """Inverse normal CDF of uniforms in [0, 1); an exact 0 is nudged to 2**-54."""
    return ndtri(np.maximum(u, _TINY))
