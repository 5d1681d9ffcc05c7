"""Mixture targets: grammar, density/CDF/quantile, most-interest range, catalog.

Grammar (whitespace insignificant)::

    mixture := term { "+" term }
    term    := [ weight "*" ] dist
    dist    := "N(" num "," num ")" | "U(" num "," num ")" | "Beta(" num "," num ")"
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _kernels as K

WEIGHT_TOL = 1e-9
NORMAL_TAIL_SDS = 12.0


class TargetError(ValueError):
    """Invalid target text or parameters."""


class TargetSyntaxError(TargetError):
    def __init__(self, message: str, text: str, pos: int):
        self.text = text
        self.pos = pos
        super().__init__(f"{message} at position {pos}: {text!r}")


@dataclass(frozen=True)
class Component:
    kind: str  # "N", "U" or "Beta"
    a: float
    b: float

    def __post_init__(self):
        if self.kind not in _KIND_CODES:
            raise TargetError(f"unknown distribution {self.kind!r}")
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise TargetError(f"{self}: parameters must be finite")
        if self.kind == "N" and not self.b > 0:
            raise TargetError(f"{self}: sd must be > 0")
        if self.kind == "U" and not self.a < self.b:
            raise TargetError(f"{self}: need a < b")
        if self.kind == "Beta" and not (self.a > 0 and self.b > 0):
            raise TargetError(f"{self}: alpha and beta must be > 0")

    def __str__(self) -> str:
        return f"{self.kind}({self.a!r},{self.b!r})"

    @property
    def support(self) -> tuple[float, float]:
        """Closed support, normal tails cut at mean +- 12 sd."""
        if self.kind == "N":
            return (self.a - NORMAL_TAIL_SDS * self.b, self.a + NORMAL_TAIL_SDS * self.b)
        if self.kind == "U":
            return (self.a, self.b)
        return (0.0, 1.0)

    @property
    def mean(self) -> float:
        if self.kind == "N":
            return self.a
        if self.kind == "U":
            return 0.5 * (self.a + self.b)
        return self.a / (self.a + self.b)

    def log_norm(self) -> float:
        if self.kind == "N":
            return -math.log(self.b) - 0.5 * math.log(2.0 * math.pi)
        if self.kind == "U":
            return -math.log(self.b - self.a)
        return math.lgamma(self.a + self.b) - math.lgamma(self.a) - math.lgamma(self.b)


_KIND_CODES = {"N": K.NORMAL, "U": K.UNIFORM, "Beta": K.BETA}


class Model(NamedTuple):
    """Array form of a target consumed by the compiled kernels."""

    kind: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    logw: np.ndarray
    logc: np.ndarray


@dataclass(frozen=True)
class Target:
    components: tuple[Component, ...]
    weights: tuple[float, ...]
    model: Model = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        comps = tuple(self.components)
        weights = tuple(float(w) for w in self.weights)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "weights", weights)
        if not comps:
            raise TargetError("target needs at least one component")
        if len(comps) != len(weights):
            raise TargetError("components and weights differ in length")
        for w in weights:
            if not 0.0 < w <= 1.0:
                raise TargetError(f"weight {w!r} outside (0, 1]")
        total = math.fsum(weights)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise TargetError(f"weights sum to {total:.12g}, not 1")
        model = Model(
            kind=np.array([_KIND_CODES[c.kind] for c in comps], dtype=np.int64),
            p1=np.array([c.a for c in comps], dtype=np.float64),
            p2=np.array([c.b for c in comps], dtype=np.float64),
            logw=np.log(np.array(weights, dtype=np.float64)),
            logc=np.array([c.log_norm() for c in comps], dtype=np.float64),
        )
        for arr in model:
            arr.setflags(write=False)
        object.__setattr__(self, "model", model)

    def __str__(self) -> str:
        return format_target(self)

    @property
    def working_support(self) -> tuple[float, float]:
        lows, highs = zip(*(c.support for c in self.components))
        return (min(lows), max(highs))

    def log_density(self, x):
        m = self.model
        if np.ndim(x) == 0:
            return K.logpdf(float(x), m.kind, m.p1, m.p2, m.logw, m.logc)
        xs = np.ascontiguousarray(x, dtype=np.float64)
        return K.logpdf_array(xs.ravel(), *m).reshape(xs.shape)

    def density(self, x):
        return np.exp(self.log_density(x))

    def cdf(self, x):
        m = self.model
        if np.ndim(x) == 0:
            return K.cdf(float(x), m.kind, m.p1, m.p2, m.logw)
        xs = np.ascontiguousarray(x, dtype=np.float64)
        return K.cdf_array(xs.ravel(), m.kind, m.p1, m.p2, m.logw).reshape(xs.shape)

    def quantile(self, p):
        ps = np.asarray(p, dtype=np.float64)
        if np.any(~((ps > 0.0) & (ps < 1.0))):
            raise ValueError("quantile level must lie strictly inside (0, 1)")
        lo, hi = self.working_support
        m = self.model
        out = K.quantile_array(ps.ravel(), lo, hi, m.kind, m.p1, m.p2, m.logw)
        return float(out[0]) if ps.ndim == 0 else out.reshape(ps.shape)

    def mode_boundaries(self) -> list[float]:
        """Midpoints between consecutive distinct component means."""
        means = sorted(set(c.mean for c in self.components))
        return [0.5 * (a + b) for a, b in zip(means, means[1:])]


def density(target: Target, x):
    return target.density(x)


def cdf(target: Target, x):
    return target.cdf(x)


def quantile(target: Target, p):
    return target.quantile(p)


# -- grammar -----------------------------------------------------------------

_NUM = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_NAME = re.compile(r"Beta|N|U")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message: str, pos: int | None = None):
        raise TargetSyntaxError(message, self.text, self.pos if pos is None else pos)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def at(self, op: str) -> bool:
        self.skip_ws()
        return self.text.startswith(op, self.pos)

    def expect(self, op: str):
        if not self.at(op):
            self.error(f"expected {op!r}")
        self.pos += len(op)

    def match(self, pattern: re.Pattern, what: str) -> str:
        self.skip_ws()
        m = pattern.match(self.text, self.pos)
        if m is None:
            self.error(f"expected {what}")
        self.pos = m.end()
        return m.group()

    def mixture(self) -> Target:
        terms = [self.term()]
        while not self.at_end():
            self.expect("+")
            terms.append(self.term())
        weights = [w for w, _ in terms]
        comps = tuple(c for _, c in terms)
        if len(terms) == 1 and weights[0] is None:
            return Target(comps, (1.0,))
        if None in weights:
            raise TargetError("every term of a mixture needs an explicit weight")
        return Target(comps, tuple(weights))

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)

    def term(self):
        self.skip_ws()
        weight = None
        if _NUM.match(self.text, self.pos):
            start = self.pos
            literal = self.match(_NUM, "a weight")
            weight = float(literal)
            if not 0.0 < weight <= 1.0:
                self.error(f"weight {literal} outside (0, 1]", start)
            self.expect("*")
        name = self.match(_NAME, "N(...), U(...) or Beta(...)")
        self.expect("(")
        a = float(self.match(_NUM, "a number"))
        self.expect(",")
        b = float(self.match(_NUM, "a number"))
        self.expect(")")
        return weight, Component(name, a, b)


def parse_target(text: str) -> Target:
    """Parse a mixture such as ``"0.8*N(-2,1)+0.2*N(2,1)"``."""
    if not text or not text.strip():
        raise TargetSyntaxError("empty target", text or "", 0)
    return _Parser(text).mixture()


def format_target(target: Target) -> str:
    if len(target.components) == 1:
        return str(target.components[0])
    return "+".join(f"{w!r}*{c}" for w, c in zip(target.weights, target.components))


# -- most-interest range --------------------------------------------------------

@dataclass(frozen=True)
class MirResult:
    epsilon: float
    level: float
    intervals: tuple[tuple[float, float], ...]
    hull_lo: float
    hull_hi: float
    mass: float


def most_interest_range(target: Target, epsilon: float, resolution: int = 100_000) -> MirResult:
    """Smallest grid set of target probability >= 1 - epsilon.

    Grid cells are ranked by the density at their centre and accumulated,
    with their exact probability, until the mass is reached. Ties keep
    left-to-right order, so flat regions fill from the left.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if resolution < 1000:
        raise ValueError(f"resolution must be >= 1000, got {resolution}")
    lo, hi = target.working_support
    edges = np.linspace(lo, hi, resolution + 1)
    dens = target.density(0.5 * (edges[:-1] + edges[1:]))
    # exact cell probabilities, so spikes narrower than a cell still count
    cell_mass = np.diff(target.cdf(edges))
    order = np.argsort(-dens, kind="stable")
    cum = np.cumsum(cell_mass[order])
    need = 1.0 - epsilon
    k = int(np.searchsorted(cum, need, side="left"))
    k = min(k, resolution - 1)
    chosen = np.zeros(resolution, dtype=bool)
    chosen[order[: k + 1]] = True
    level = float(dens[order[k]])

    padded = np.concatenate(([False], chosen, [False])).astype(np.int8)
    starts = np.flatnonzero(np.diff(padded) == 1)
    stops = np.flatnonzero(np.diff(padded) == -1)
    intervals = tuple((float(edges[s]), float(edges[e])) for s, e in zip(starts, stops))
    return MirResult(
        epsilon=float(epsilon),
        level=level,
        intervals=intervals,
        hull_lo=intervals[0][0],
        hull_hi=intervals[-1][1],
        mass=float(cum[k]),
    )


# -- built-in cases ------------------------------------------------------------

@dataclass(frozen=True)
class Case:
    name: str
    spec: str
    range: tuple[float, float]
    sigma: float
    block_length: int | None  # median coalescence time, when known

    @property
    def target(self) -> Target:
        return parse_target(self.spec)


CATALOG: dict[str, Case] = {
    c.name: c
    for c in (
        Case("case1", "N(0,1)", (-10.0, 10.0), 1.0, 29),
        Case("case2", "N(30,1)", (20.0, 40.0), 1.0, 29),
        Case("case3", "0.8*N(-2,1)+0.2*N(2,1)", (-10.0, 10.0), 1.0, 38),
        Case("case4", "0.2*N(-5,1)+0.2*N(5,1)+0.6*N(15,1)", (-15.0, 25.0), 3.5, 116),
        Case("case5", "0.8*U(-100,100)+0.2*Beta(50,50)", (-100.0, 100.0), 3.5, None),
        Case("case6", "0.9*U(-100,100)+0.1*Beta(500,500)", (-100.0, 100.0), 0.1, None),
    )
}


def resolve_target(text: str) -> Target:
    """Catalog name (``case1``..``case6``) or a grammar string."""
    case = CATALOG.get(text.strip())
    return case.target if case is not None else parse_target(text)
