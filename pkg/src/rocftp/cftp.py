"""Monotone coupling from the past on the AR(1) multishift chain.

The chain is ``X[t+1] = M(rho * X[t])`` with ``M`` a unit-scale multishift
map, i.e. an AR(1) process with N(0, 1) innovations. Randomness is indexed by
absolute time ``t <= 0`` (the draw used to arrive at time ``t``) and logged so
that every doubling of the lookback replays the later times verbatim.
"""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np

from .multishift import CouplerDraw, apply_shift, draw_couplers
from .parallel import map_reps
from .rng import RngStream, new_stream


class CftpBudgetError(RuntimeError):
    def __init__(self, message: str, log_size: int):
        super().__init__(message)
        self.log_size = log_size


def draw_digest(draw: CouplerDraw) -> str:
    return hashlib.sha1(struct.pack("<3d", draw.halfwidth, draw.offset, draw.scale)).hexdigest()


@dataclass
class RandomnessLog:
    """Write-once map from absolute time to the coupler draw used there.

    ``reads`` collects ``(pass, time, digest)`` for every lookup so callers
    can verify that replayed randomness never changed.
    """

    draws: dict[int, CouplerDraw] = field(default_factory=dict)
    digests: dict[int, str] = field(default_factory=dict)
    reads: list[tuple[int, int, str]] = field(default_factory=list)
    current_pass: int = 0

    def __len__(self) -> int:
        return len(self.draws)

    def put(self, t: int, draw: CouplerDraw) -> None:
        if t in self.draws:
            raise KeyError(f"randomness for time {t} already logged")
        self.draws[t] = draw
        self.digests[t] = draw_digest(draw)

    def get(self, t: int) -> CouplerDraw:
        draw = self.draws[t]
        self.reads.append((self.current_pass, t, draw_digest(draw)))
        return draw

    def reuse_consistent(self) -> bool:
        return all(self.digests[t] == d for _, t, d in self.reads)


def ar1_multishift_step(rho: float, state: float, draw: CouplerDraw) -> float:
    return apply_shift(draw, rho * state)


def cftp_run(rho: float, start_pair: tuple[float, float], stream: RngStream,
             max_doublings: int = 40, log: RandomnessLog | None = None) -> tuple[float, int]:
    """Exact draw from the AR(1) stationary law; returns (sample, final lookback).

    Lookback ``L`` starts at 2 and doubles. On each pass only the new earlier
    segment ``(-L, -L/2]`` gets fresh draws; both paths then run from ``-L``
    to 0 replaying the log, and the pass succeeds if they have met by ``-L/2``.
    """
    lo, hi = map(float, start_pair)
    if not lo < hi:
        raise ValueError(f"need start_lo < start_hi, got {start_pair}")
    if not abs(rho) < 1:
        raise ValueError("|rho| must be < 1")
    if max_doublings < 1:
        raise ValueError("max_doublings must be >= 1")
    log = RandomnessLog() if log is None else log
    lookback = 1
    for n in range(1, max_doublings + 1):
        half, lookback = lookback, 2 * lookback
        log.current_pass = n
        # fresh randomness for the new segment, nearest-to-present first
        fresh = [t for t in range(0, -lookback, -1) if t not in log.draws]
        for t, draw in zip(fresh, draw_couplers(stream, len(fresh), 1.0)):
            log.put(t, draw)
        a, b = lo, hi
        met = False
        for t in range(-lookback + 1, 1):
            draw = log.get(t)
            a = ar1_multishift_step(rho, a, draw)
            b = ar1_multishift_step(rho, b, draw)
            if t == -half:
                met = a == b
        if met:
            return a, lookback
    raise CftpBudgetError(f"no coalescence within {max_doublings} doublings", len(log))


@dataclass(frozen=True)
class CftpRow:
    rep: int
    sample: float
    backoff_steps: int
    reuse_ok: bool


def cftp_demo(rho: float, start_pair: tuple[float, float], reps: int, seed: int,
              threads: int = 1, max_doublings: int = 40) -> list[CftpRow]:
    """Independent CFTP runs; run ``r`` uses stream ``(seed, r)``."""

    def one(r: int) -> CftpRow:
        log = RandomnessLog()
        x, back = cftp_run(rho, start_pair, new_stream(seed, r), max_doublings, log)
        return CftpRow(r, x, back, log.reuse_consistent())

    return map_reps(one, reps, threads)


def stationary_sd(rho: float) -> float:
    return float(np.sqrt(1.0 / (1.0 - rho * rho)))
