"""Replication studies: block-length sweep, path-count study, decay of the
coupling-time tail, and goodness of fit of sampler output.

Every replication draws from its own stream, derived from the caller's root
stream ids, a per-study tag and the replication index, so results do not
depend on evaluation order or on the number of worker threads.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .diagnostics import ModeMass, SixNumberSummary, ks_statistic, mode_masses, qq_outliers, summary_stats
from .metro_ms import SupportError, draw_steps
from .parallel import map_reps
from .rng import RngStream, derive_seed, new_stream
from .sampler import TRIAL_CAP, TRIAL_CHUNK, CoalescenceError, RunStats, SamplerConfig, sample
from .targets import Target

SWEEP_TAG = 0x5EE9
COALESCENCE_TAG = 0xC0A1
DECAY_TAG = 0xDECA
GOF_TAG = 0x60F


@dataclass(frozen=True)
class SweepRow:
    T: int
    p_hat: float
    n_bar: float
    tau_bar: float
    reps: int


def _blocks_to_first_coalescence(target, hat0, hat1, x0, sigma, T, master, ar1_rho, max_blocks) -> int:
    x = x0
    m = target.model
    for b in range(max_blocks):
        batch = draw_steps(new_stream(master, b), T, sigma)
        states = np.array([hat0, hat1, x], dtype=np.float64)
        if ar1_rho is None:
            coal, _ = K.evolve(states, batch.halfwidth, batch.offset, batch.accept_u, *m, False, 0)
        else:
            coal, _ = K.ar1_evolve(states, batch.halfwidth, batch.offset, ar1_rho, False, 0)
        if coal == K.SUPPORT_ERROR:
            raise SupportError(f"paths left the support of {target}")
        if coal != K.NOT_COALESCED:
            return b + 1
        x = float(states[2])
    raise CoalescenceError(f"no coalescent block of length {T} within {max_blocks} blocks")


def block_sweep(target: Target, hat0: float, hat1: float, sigma: float, T_list, reps: int,
                stream: RngStream, x0: float | None = None, threads: int = 1,
                ar1_rho: float | None = None) -> list[SweepRow]:
    """Blocks needed until the first coalescent block, for each block length.

    With ``ar1_rho`` set, the paths follow the monotone AR(1) multishift chain
    instead of the Metropolis update (``target`` is then unused).
    """
    if reps < 100:
        raise ValueError("sweep needs reps >= 100")
    x0 = 0.5 * (hat0 + hat1) if x0 is None else float(x0)
    rows = []
    for T in T_list:
        T = int(T)
        max_blocks = max(1, TRIAL_CAP // T)

        def one(r: int) -> int:
            master = derive_seed(stream.master_seed, stream.stream_id, SWEEP_TAG, T, r)
            return _blocks_to_first_coalescence(target, hat0, hat1, x0, sigma, T, master,
                                                ar1_rho, max_blocks)

        n = np.array(map_reps(one, reps, threads), dtype=np.float64)
        n_bar = float(n.mean())
        rows.append(SweepRow(T, float(np.mean(n == 1)), n_bar, n_bar * T, reps))
    return rows


def _groups(path_counts, hat0: float, hat1: float):
    """Nested index groups over a grid of ``max(path_counts)`` points.

    Group ``k`` is the union of the equally spaced selections for every
    count up to ``k``, so it always contains the smaller groups and both ends.
    """
    big = path_counts[-1]
    points = np.linspace(hat0, hat1, big)
    members: set[int] = set()
    groups = []
    for k in path_counts:
        members |= {int(round(i * (big - 1) / (k - 1))) for i in range(k)}
        groups.append(sorted(members))
    ptr = np.zeros(len(groups) + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([len(g) for g in groups])
    idx = np.array([i for g in groups for i in g], dtype=np.int64)
    return points, ptr, idx


@dataclass(frozen=True)
class CoalescenceStudy:
    path_counts: tuple[int, ...]
    times: np.ndarray  # reps x len(path_counts)

    @property
    def means(self) -> np.ndarray:
        return self.times.mean(axis=0)

    @property
    def percent_equal(self) -> np.ndarray:
        """Per count, % of replications whose time equals the largest count's."""
        return 100.0 * np.mean(self.times == self.times[:, -1:], axis=0)

    def summaries(self) -> list[SixNumberSummary]:
        return [summary_stats(col) for col in self.times.T]


def coalescence_study(target: Target, hat0: float, hat1: float, sigma: float, path_counts,
                      reps: int, stream: RngStream, threads: int = 1,
                      cap: int = TRIAL_CAP) -> CoalescenceStudy:
    counts = tuple(int(k) for k in path_counts)
    if not counts or counts[0] != 2 or any(a >= b for a, b in zip(counts, counts[1:])):
        raise ValueError("path counts must be strictly ascending and start at 2")
    if reps < 100:
        raise ValueError("coalescence study needs reps >= 100")
    points, ptr, idx = _groups(counts, hat0, hat1)
    used = np.unique(idx)
    # grid points outside every group are never read; drop them
    if used.size != points.size:
        remap = {int(old): new for new, old in enumerate(used)}
        points = points[used]
        idx = np.array([remap[int(i)] for i in idx], dtype=np.int64)
    m = target.model

    def one(r: int) -> np.ndarray:
        s = new_stream(derive_seed(stream.master_seed, stream.stream_id, COALESCENCE_TAG), r)
        states = points.copy()
        times = np.full(len(counts), K.NOT_COALESCED, dtype=np.int64)
        t0 = 0
        while t0 < cap:
            n = min(TRIAL_CHUNK, cap - t0)
            batch = draw_steps(s, n, sigma)
            ran = K.evolve_groups(states, batch.halfwidth, batch.offset, batch.accept_u, *m,
                                  ptr, idx, times, t0)
            if ran == K.SUPPORT_ERROR:
                raise SupportError(f"paths left the support of {target}")
            if np.all(times != K.NOT_COALESCED):
                return times
            t0 += n
        raise CoalescenceError(f"replication {r}: no coalescence within {cap} steps")

    return CoalescenceStudy(counts, np.array(map_reps(one, reps, threads), dtype=np.int64))


@dataclass(frozen=True)
class DecayRow:
    t: int
    survive_hat: float
    tv_bound: float


def decay_study(target: Target, start_points, sigma: float, t_max: int, reps: int,
                stream: RngStream, threads: int = 1) -> list[DecayRow]:
    """Empirical P(T* > t), t = 1..t_max, and the bound 4 P(T* > t)."""
    starts = np.array(start_points, dtype=np.float64)
    if starts.size == 0:
        raise ValueError("need at least one start point")
    if reps < 1000:
        raise ValueError("decay study needs reps >= 1000")
    m = target.model

    def one(r: int) -> int:
        s = new_stream(derive_seed(stream.master_seed, stream.stream_id, DECAY_TAG), r)
        states = starts.copy()
        t0 = 0
        while t0 < t_max:
            n = min(TRIAL_CHUNK, t_max - t0)
            batch = draw_steps(s, n, sigma)
            coal, _ = K.evolve(states, batch.halfwidth, batch.offset, batch.accept_u, *m, True, t0)
            if coal == K.SUPPORT_ERROR:
                raise SupportError(f"paths left the support of {target}")
            if coal != K.NOT_COALESCED:
                return int(coal)
            t0 += n
        return t_max + 1  # censored: still apart at t_max

    times = np.array(map_reps(one, reps, threads), dtype=np.int64)
    rows = []
    for t in range(1, t_max + 1):
        p = float(np.mean(times > t))
        rows.append(DecayRow(t, p, 4.0 * p))
    return rows


def fitted_log_survival(t):
    """Published fit of log P(T* > t) for N(0,1) from starts (-10, 0, 10)."""
    t = np.asarray(t, dtype=np.float64)
    return -69.3064 * np.exp(-84.4791 * t ** -0.8734)


@dataclass(frozen=True)
class GofReport:
    samples: np.ndarray
    ks_d: float
    ks_p: float
    outliers: int
    outlier_fraction: float
    modes: list[ModeMass]
    stats: RunStats


def gof_study(target: Target, hat0: float, hat1: float, sigma: float, T: int, n: int,
              delta: float, stream: RngStream) -> GofReport:
    if n < 100:
        raise ValueError("goodness of fit needs n >= 100")
    seed = derive_seed(stream.master_seed, stream.stream_id, GOF_TAG)
    config = SamplerConfig(target, hat0, hat1, sigma, T, seed=seed)
    xs, stats = sample(config, n)
    d, p = ks_statistic(xs, target)
    count, _ = qq_outliers(xs, target, delta)
    return GofReport(xs, d, p, count, count / n, mode_masses(xs, target), stats)


def survival_log(rows: list[DecayRow]) -> np.ndarray:
    p = np.array([r.survive_hat for r in rows])
    with np.errstate(divide="ignore"):
        return np.log(p)

