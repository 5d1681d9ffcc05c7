"""Read-once CFTP driven by the Metropolis-multishift update.

Each block of ``T`` steps runs three paths under one randomness sequence:
two auxiliary paths restarted at the range ends ``hat0``/``hat1`` and the
primary path, which carries over from block to block. A block in which all
three meet certifies that the primary has forgotten everything before the
block. The first such block only establishes this; each later one emits
the primary's value at the start of that block.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .metro_ms import StepBatch, SupportError, draw_steps
from .parallel import map_reps
from .rng import RngStream, derive_seed, new_stream
from .targets import Target

TRIAL_CAP = 1_000_000
TRIAL_CHUNK = 64
CALIBRATE_TAG = 0xCA1


class CoalescenceError(RuntimeError):
    """Paths failed to meet within the step cap."""


class BudgetExceeded(RuntimeError):
    """``max_blocks`` ran out before enough samples were emitted."""

    def __init__(self, message: str, samples: np.ndarray, stats: "RunStats"):
        super().__init__(message)
        self.samples = samples
        self.stats = stats


@dataclass(frozen=True)
class SamplerConfig:
    target: Target
    hat0: float
    hat1: float
    sigma: float
    block_length: int
    seed: int = 1
    max_blocks: int = 10_000_000
    x0: float | None = None

    def __post_init__(self):
        if not self.hat0 <= self.hat1:
            raise ValueError(f"need hat0 <= hat1, got ({self.hat0}, {self.hat1})")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if self.block_length < 1:
            raise ValueError(f"block length must be >= 1, got {self.block_length}")
        if self.max_blocks < 1:
            raise ValueError("max_blocks must be >= 1")
        if self.x0 is None:
            object.__setattr__(self, "x0", 0.5 * (self.hat0 + self.hat1))
        elif not self.hat0 <= self.x0 <= self.hat1:
            raise ValueError(f"x0={self.x0} outside [{self.hat0}, {self.hat1}]")


@dataclass(frozen=True)
class BlockReport:
    block_index: int
    start_state: float
    coalesced: bool
    coalescence_step: int | None
    end_state: float


@dataclass
class RunStats:
    blocks: int = 0
    coalescent_blocks: int = 0
    block_length: int = 0
    blocks_per_sample: list[int] = field(default_factory=list)

    @property
    def total_steps(self) -> int:
        return self.blocks * self.block_length

    @property
    def p_hat(self) -> float:
        return self.coalescent_blocks / self.blocks if self.blocks else float("nan")

    def as_dict(self) -> dict:
        return {
            "blocks": self.blocks,
            "coalescent_blocks": self.coalescent_blocks,
            "total_steps": self.total_steps,
            "p_hat": self.p_hat,
        }


def _run_steps(target: Target, states: np.ndarray, batch: StepBatch) -> int | None:
    m = target.model
    coal, _ = K.evolve(states, batch.halfwidth, batch.offset, batch.accept_u, *m, False, 0)
    if coal == K.SUPPORT_ERROR:
        raise SupportError(f"paths {states} left the support of {target}")
    return None if coal == K.NOT_COALESCED else int(coal)


def run_block(config: SamplerConfig, x_in: float, stream: RngStream, block_index: int) -> BlockReport:
    batch = draw_steps(stream, config.block_length, config.sigma)
    states = np.array([config.hat0, config.hat1, x_in], dtype=np.float64)
    coal = _run_steps(config.target, states, batch)
    return BlockReport(block_index, float(x_in), coal is not None, coal, float(states[2]))


def sample(config: SamplerConfig, n: int) -> tuple[np.ndarray, RunStats]:
    """Draw ``n`` exact samples; block ``b`` uses stream ``(seed, b)``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    stats = RunStats(block_length=config.block_length)
    out: list[float] = []
    x = float(config.x0)
    established = False
    since_last = 0
    while len(out) < n:
        if stats.blocks >= config.max_blocks:
            raise BudgetExceeded(
                f"max_blocks={config.max_blocks} exhausted after {len(out)} of {n} samples",
                np.array(out), stats,
            )
        b = stats.blocks
        report = run_block(config, x, new_stream(config.seed, b), b)
        stats.blocks += 1
        since_last += 1
        if report.coalesced:
            stats.coalescent_blocks += 1
            if established:
                out.append(report.start_state)
                stats.blocks_per_sample.append(since_last)
            established = True
            since_last = 0
        x = report.end_state
    return np.array(out, dtype=np.float64), stats


def coalescence_time(target: Target, starts, sigma: float, stream: RngStream,
                     cap: int = TRIAL_CAP) -> int:
    """Steps until all ``starts`` meet, drawing randomness in chunks from ``stream``."""
    states = np.array(starts, dtype=np.float64)
    m = target.model
    t0 = 0
    while t0 < cap:
        n = min(TRIAL_CHUNK, cap - t0)
        batch = draw_steps(stream, n, sigma)
        coal, _ = K.evolve(states, batch.halfwidth, batch.offset, batch.accept_u, *m, True, t0)
        if coal == K.SUPPORT_ERROR:
            raise SupportError(f"paths left the support of {target}")
        if coal != K.NOT_COALESCED:
            return int(coal)
        t0 += n
    raise CoalescenceError(f"coalescence not reached within {cap} steps from {list(starts)}")


def coalescence_times(target: Target, starts, sigma: float, reps: int, stream: RngStream,
                      tag: int = 0, threads: int = 1, cap: int = TRIAL_CAP) -> np.ndarray:
    """Independent coalescence trials; replication ``r`` owns its own stream."""
    root = (stream.master_seed, stream.stream_id, tag)

    def one(r: int) -> int:
        return coalescence_time(target, starts, sigma, new_stream(derive_seed(*root), r), cap)

    return np.array(map_reps(one, reps, threads), dtype=np.int64)


def calibrate_block_length(target: Target, hat0: float, hat1: float, sigma: float,
                           reps: int, stream: RngStream, x0: float | None = None,
                           threads: int = 1) -> int:
    """Median three-path coalescence time, rounded up (at least 1)."""
    if reps < 100:
        raise ValueError("calibration needs reps >= 100")
    x0 = 0.5 * (hat0 + hat1) if x0 is None else x0
    times = coalescence_times(target, (hat0, hat1, x0), sigma, reps, stream,
                              tag=CALIBRATE_TAG, threads=threads)
    return max(1, math.ceil(float(np.median(times))))
