"""Metropolis update with the multishift coupler as its (symmetric) proposal.

All paths in an ensemble see the same coupler draw and the same acceptance
uniform at each step, so the update is a deterministic function of
(state, step randomness) and paths that meet stay together.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels as K
from .multishift import MIN_HALFWIDTH, UNIFORMS_PER_DRAW, CouplerDraw, unit_layers
from .rng import RngStream
from .targets import Target

UNIFORMS_PER_STEP = UNIFORMS_PER_DRAW + 1


class SupportError(RuntimeError):
    """A path and its proposal both sit where the target density is zero."""


@dataclass(frozen=True)
class StepRandomness:
    draw: CouplerDraw
    accept_u: float

    def __post_init__(self):
        if not 0.0 <= self.accept_u < 1.0:
            raise ValueError(f"accept_u must lie in [0, 1), got {self.accept_u}")


@dataclass(frozen=True)
class StepBatch:
    """Column form of a sequence of StepRandomness (one row per step)."""

    halfwidth: np.ndarray
    offset: np.ndarray
    accept_u: np.ndarray
    sigma: float

    def __len__(self) -> int:
        return self.halfwidth.shape[0]

    def __getitem__(self, t: int) -> StepRandomness:
        return StepRandomness(
            CouplerDraw(float(self.halfwidth[t]), float(self.offset[t]), self.sigma),
            float(self.accept_u[t]),
        )

    @classmethod
    def from_steps(cls, steps: Sequence[StepRandomness]) -> "StepBatch":
        sigma = steps[0].draw.scale if steps else 1.0
        return cls(
            np.array([s.draw.halfwidth for s in steps], dtype=float),
            np.array([s.draw.offset for s in steps], dtype=float),
            np.array([s.accept_u for s in steps], dtype=float),
            sigma,
        )


def draw_steps(stream: RngStream, n: int, sigma: float) -> StepBatch:
    """Draw ``n`` steps of randomness, four uniforms per step.

    Row layout is (normal, layer height, offset, acceptance). A row whose
    layer is degenerate is replaced by fresh uniforms taken after the batch.
    """
    u = stream.uniforms(UNIFORMS_PER_STEP * n).reshape(n, UNIFORMS_PER_STEP)
    r, x = unit_layers(u)
    for t in np.flatnonzero(r < MIN_HALFWIDTH):
        while r[t] < MIN_HALFWIDTH:
            u[t] = stream.uniforms(UNIFORMS_PER_STEP)
            rr, xx = unit_layers(u[t : t + 1])
            r[t], x[t] = rr[0], xx[0]
    return StepBatch(sigma * r, sigma * x, u[:, UNIFORMS_PER_DRAW].copy(), float(sigma))


def draw_step(stream: RngStream, sigma: float) -> StepRandomness:
    return draw_steps(stream, 1, sigma)[0]


def metropolis_step(target: Target, state: float, u: StepRandomness) -> float:
    m = target.model
    lp = K.logpdf(float(state), m.kind, m.p1, m.p2, m.logw, m.logc)
    y, _, ok = K.mh_update(float(state), lp, u.draw.halfwidth, u.draw.offset, u.accept_u, *m)
    if not ok:
        raise SupportError(f"state {state!r} outside support of {target}")
    return y


@dataclass
class PathEnsemble:
    states: np.ndarray
    coalesced_step: int | None
    trajectory: np.ndarray | None = None

    @property
    def coalesced(self) -> bool:
        return self.coalesced_step is not None


def _as_batch(steps) -> StepBatch:
    if isinstance(steps, StepBatch):
        return steps
    return StepBatch.from_steps(list(steps))


def evolve_paths(target: Target, initial, steps, record: bool = False) -> PathEnsemble:
    """Run every initial state through ``steps`` with shared randomness."""
    states = np.array(initial, dtype=np.float64, ndmin=1)
    if states.size == 0:
        raise ValueError("need at least one initial state")
    batch = _as_batch(steps)
    m = target.model
    if record:
        coal, path = K.evolve_record(states, batch.halfwidth, batch.offset, batch.accept_u, *m)
    else:
        coal, _ = K.evolve(states, batch.halfwidth, batch.offset, batch.accept_u, *m, False, 0)
        path = None
    if coal == K.SUPPORT_ERROR:
        raise SupportError(f"paths left the support of {target}")
    return PathEnsemble(states, None if coal == K.NOT_COALESCED else int(coal), path)
