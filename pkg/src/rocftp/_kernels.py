"""Compiled inner loops shared by the sampler, the experiments and the targets.

A target is passed to these kernels as five parallel arrays
``(kind, p1, p2, logw, logc)``: component kind (NORMAL, UNIFORM, BETA), its two
parameters, the log mixture weight and the log normalising constant of the
component density. Everything here is scalar double-precision code so that a
given input produces the same bits no matter how callers batch the work.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

NORMAL = 0
UNIFORM = 1
BETA = 2

SUPPORT_ERROR = -2
NOT_COALESCED = -1

_BETACF_EPS = 1e-15
_BETACF_TINY = 1e-300
_BETACF_MAXIT = 100_000


@njit(cache=True, nogil=True)
def component_logpdf(x, kind, a, b, logc):
    if kind == NORMAL:
        z = (x - a) / b
        return logc - 0.5 * z * z
    if kind == UNIFORM:
        if a <= x <= b:
            return logc
        return -math.inf
    # beta on [0, 1]
    if x < 0.0 or x > 1.0:
        return -math.inf
    if x == 0.0:
        if a == 1.0:
            return logc + (b - 1.0) * math.log1p(-x)
        return math.inf if a < 1.0 else -math.inf
    if x == 1.0:
        if b == 1.0:
            return logc + (a - 1.0) * math.log(x)
        return math.inf if b < 1.0 else -math.inf
    return logc + (a - 1.0) * math.log(x) + (b - 1.0) * math.log1p(-x)


@njit(cache=True, nogil=True)
def logpdf(x, kind, p1, p2, logw, logc):
    """Mixture log density via a running log-sum-exp over components."""
    m = -math.inf
    s = 0.0
    for k in range(kind.shape[0]):
        t = logw[k] + component_logpdf(x, kind[k], p1[k], p2[k], logc[k])
        if t == -math.inf:
            continue
        if t > m:
            s = s * math.exp(m - t) + 1.0
            m = t
        else:
            s += math.exp(t - m)
    if m == -math.inf:
        return -math.inf
    return m + math.log(s)


@njit(cache=True, nogil=True)
def logpdf_array(xs, kind, p1, p2, logw, logc):
    out = np.empty(xs.shape[0])
    for i in range(xs.shape[0]):
        out[i] = logpdf(xs[i], kind, p1, p2, logw, logc)
    return out


@njit(cache=True, nogil=True)
def _betacf(a, b, x):
    # modified Lentz evaluation of the incomplete beta continued fraction
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _BETACF_TINY:
        d = _BETACF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _BETACF_MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETACF_TINY:
            d = _BETACF_TINY
        c = 1.0 + aa / c
        if abs(c) < _BETACF_TINY:
            c = _BETACF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETACF_TINY:
            d = _BETACF_TINY
        c = 1.0 + aa / c
        if abs(c) < _BETACF_TINY:
            c = _BETACF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETACF_EPS:
            return h
    return h


@njit(cache=True, nogil=True)
def betainc(a, b, x):
    """Regularised incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    lbeta = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
    front = math.exp(lbeta + a * math.log(x) + b * math.log1p(-x))
    # the fraction converges fast on the side of the mean
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


@njit(cache=True, nogil=True)
def component_cdf(x, kind, a, b):
    if kind == NORMAL:
        return 0.5 * math.erfc(-(x - a) / (b * math.sqrt(2.0)))
    if kind == UNIFORM:
        if x <= a:
            return 0.0
        if x >= b:
            return 1.0
        return (x - a) / (b - a)
    return betainc(a, b, x)


@njit(cache=True, nogil=True)
def cdf(x, kind, p1, p2, logw):
    s = 0.0
    for k in range(kind.shape[0]):
        s += math.exp(logw[k]) * component_cdf(x, kind[k], p1[k], p2[k])
    return min(max(s, 0.0), 1.0)


@njit(cache=True, nogil=True)
def cdf_array(xs, kind, p1, p2, logw):
    out = np.empty(xs.shape[0])
    for i in range(xs.shape[0]):
        out[i] = cdf(xs[i], kind, p1, p2, logw)
    return out


@njit(cache=True, nogil=True)
def quantile_array(ps, lo, hi, kind, p1, p2, logw):
    """Bisection on [lo, hi] until the bracket cannot shrink further."""
    out = np.empty(ps.shape[0])
    for i in range(ps.shape[0]):
        p = ps[i]
        a = lo
        b = hi
        for _ in range(2000):
            mid = 0.5 * (a + b)
            if mid <= a or mid >= b:
                break
            if cdf(mid, kind, p1, p2, logw) < p:
                a = mid
            else:
                b = mid
        out[i] = 0.5 * (a + b)
    return out


@njit(cache=True, nogil=True)
def shift(halfwidth, offset, s):
    width = halfwidth + halfwidth
    return math.floor((s + halfwidth - offset) / width) * width + offset


@njit(cache=True, nogil=True)
def shift_array(half, off, s):
    out = np.empty(s.size)
    for i in range(s.size):
        out[i] = shift(half[i], off[i], s[i])
    return out


@njit(cache=True, nogil=True)
def mh_update(s, lp_s, halfwidth, offset, accept_u, kind, p1, p2, logw, logc):
    """One Metropolis-multishift move; returns (new state, its log density, ok)."""
    y = shift(halfwidth, offset, s)
    lp_y = logpdf(y, kind, p1, p2, logw, logc)
    if lp_y == -math.inf:
        if lp_s == -math.inf:
            return s, lp_s, False
        return s, lp_s, True
    if lp_y >= lp_s:
        return y, lp_y, True
    if accept_u <= math.exp(lp_y - lp_s):
        return y, lp_y, True
    return s, lp_s, True


@njit(cache=True, nogil=True)
def _all_equal(states):
    v = states[0]
    for i in range(1, states.shape[0]):
        if states[i] != v:
            return False
    return True


@njit(cache=True, nogil=True)
def evolve(states, half, off, acc, kind, p1, p2, logw, logc, stop_on_coalesce, t0):
    """Advance ``states`` in place through the given steps under shared randomness.

    ``t0`` is the number of steps already taken by these states; the returned
    coalescence step counts from there. Returns ``(coalesced_step, steps_run)``
    with ``coalesced_step`` equal to NOT_COALESCED or SUPPORT_ERROR when
    applicable. Once coalesced, only one path is advanced and copied.
    """
    n = states.shape[0]
    lps = np.empty(n)
    for i in range(n):
        lps[i] = logpdf(states[i], kind, p1, p2, logw, logc)
    coal = NOT_COALESCED
    if _all_equal(states):
        coal = t0
        if stop_on_coalesce:
            return coal, 0
    width = n if coal == NOT_COALESCED else 1
    for t in range(half.shape[0]):
        for i in range(width):
            s, lp, ok = mh_update(states[i], lps[i], half[t], off[t], acc[t],
                                  kind, p1, p2, logw, logc)
            if not ok:
                return SUPPORT_ERROR, t
            states[i] = s
            lps[i] = lp
        if coal == NOT_COALESCED:
            if _all_equal(states):
                coal = t0 + t + 1
                if stop_on_coalesce:
                    return coal, t + 1
                width = 1
        else:
            for i in range(1, n):
                states[i] = states[0]
    return coal, half.shape[0]


@njit(cache=True, nogil=True)
def evolve_record(states, half, off, acc, kind, p1, p2, logw, logc):
    """Like ``evolve`` without early exit, keeping every intermediate state."""
    n = states.shape[0]
    steps = half.shape[0]
    path = np.empty((steps + 1, n))
    path[0] = states
    lps = np.empty(n)
    for i in range(n):
        lps[i] = logpdf(states[i], kind, p1, p2, logw, logc)
    coal = t_coal = NOT_COALESCED
    if _all_equal(states):
        coal = 0
    for t in range(steps):
        for i in range(n):
            s, lp, ok = mh_update(states[i], lps[i], half[t], off[t], acc[t],
                                  kind, p1, p2, logw, logc)
            if not ok:
                return SUPPORT_ERROR, path[: t + 1]
            states[i] = s
            lps[i] = lp
        path[t + 1] = states
        if coal == NOT_COALESCED and _all_equal(states):
            coal = t + 1
    t_coal = coal
    return t_coal, path


@njit(cache=True, nogil=True)
def evolve_groups(states, half, off, acc, kind, p1, p2, logw, logc,
                  group_ptr, group_idx, times, t0):
    """Advance states and record, per index group, the first step it is all-equal.

    Paths holding equal values are updated once: only the distinct values are
    evolved and each path keeps a label into them. ``times[g]`` must be
    NOT_COALESCED on entry for groups still open. Stops as soon as every group
    has coalesced. Returns the number of steps run, or SUPPORT_ERROR.
    """
    n = states.shape[0]
    n_groups = group_ptr.shape[0] - 1
    # distinct values and per-path labels
    order = np.argsort(states, kind="mergesort")
    vals = np.empty(n)
    labels = np.empty(n, dtype=np.int64)
    k = 0
    for j in range(n):
        i = order[j]
        if k == 0 or states[i] != vals[k - 1]:
            vals[k] = states[i]
            k += 1
        labels[i] = k - 1
    lps = np.empty(n)
    for j in range(k):
        lps[j] = logpdf(vals[j], kind, p1, p2, logw, logc)
    remap = np.empty(n, dtype=np.int64)
    for t in range(-1, half.shape[0]):
        if t >= 0:
            for j in range(k):
                s, lp, ok = mh_update(vals[j], lps[j], half[t], off[t], acc[t],
                                      kind, p1, p2, logw, logc)
                if not ok:
                    return SUPPORT_ERROR
                vals[j] = s
                lps[j] = lp
            # merge values that became equal
            vorder = np.argsort(vals[:k], kind="mergesort")
            nv = np.empty(k)
            nlp = np.empty(k)
            m = 0
            for jj in range(k):
                j = vorder[jj]
                if m == 0 or vals[j] != nv[m - 1]:
                    nv[m] = vals[j]
                    nlp[m] = lps[j]
                    m += 1
                remap[j] = m - 1
            for i in range(n):
                labels[i] = remap[labels[i]]
            k = m
            vals[:k] = nv[:m]
            lps[:k] = nlp[:m]
        open_groups = 0
        for g in range(n_groups):
            if times[g] != NOT_COALESCED:
                continue
            v = labels[group_idx[group_ptr[g]]]
            same = True
            for j in range(group_ptr[g] + 1, group_ptr[g + 1]):
                if labels[group_idx[j]] != v:
                    same = False
                    break
            if same:
                times[g] = t0 + t + 1
            else:
                open_groups += 1
        if open_groups == 0:
            for i in range(n):
                states[i] = vals[labels[i]]
            return t + 1
    for i in range(n):
        states[i] = vals[labels[i]]
    return half.shape[0]


@njit(cache=True, nogil=True)
def ar1_evolve(states, half, off, rho, stop_on_coalesce, t0):
    """Monotone AR(1) multishift chain ``x -> shift(rho * x)``; same contract as ``evolve``."""
    n = states.shape[0]
    coal = NOT_COALESCED
    if _all_equal(states):
        coal = t0
        if stop_on_coalesce:
            return coal, 0
    for t in range(half.shape[0]):
        for i in range(n):
            states[i] = shift(half[t], off[t], rho * states[i])
        if coal == NOT_COALESCED and _all_equal(states):
            coal = t0 + t + 1
            if stop_on_coalesce:
                return coal, t + 1
    return coal, half.shape[0]
