"""Layered normal multishift coupler.

One draw picks a horizontal layer of the standard normal density (a centred
interval ``[-r, r]``) and an offset inside it. The induced map sends every
state to the grid point ``offset + k * 2r`` of the cell it falls in, so the
whole real line is collapsed onto a lattice, while for any fixed state the
shift is exactly N(0, sigma^2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .rng import RngStream, uniform_to_normal

SQRT_2PI = math.sqrt(2.0 * math.pi)
MIN_HALFWIDTH = 1e-12
UNIFORMS_PER_DRAW = 3


@dataclass(frozen=True)
class CouplerDraw:
    halfwidth: float
    offset: float
    scale: float

    def __post_init__(self):
        if not self.halfwidth >= 0.0:
            raise ValueError(f"halfwidth must be >= 0, got {self.halfwidth}")
        if abs(self.offset) > self.halfwidth:
            raise ValueError(f"|offset| {abs(self.offset)} exceeds halfwidth {self.halfwidth}")
        if not self.scale > 0.0:
            raise ValueError(f"scale must be > 0, got {self.scale}")

    @property
    def width(self) -> float:
        return 2.0 * self.halfwidth

    def __call__(self, s: float) -> float:
        return apply_shift(self, s)


def normal_pdf(z):
    return np.exp(-0.5 * np.square(z)) / SQRT_2PI


def layer_halfwidth(u):
    """Half-width of the standard normal layer at height ``u`` (inverse density)."""
    return np.sqrt(np.maximum(-2.0 * np.log(SQRT_2PI * np.asarray(u, dtype=float)), 0.0))


def unit_layers(u3: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map rows of three uniforms (z, height, offset) to unit (halfwidth, offset).

    Column 0 becomes Z by the inverse normal CDF, column 1 the layer height
    U = (1 - u) f(Z) in (0, f(Z)], column 2 the offset uniform on [-r, r).
    """
    z = uniform_to_normal(u3[:, 0])
    height = (1.0 - u3[:, 1]) * normal_pdf(z)
    r = layer_halfwidth(height)
    x = r * (2.0 * u3[:, 2] - 1.0)
    return r, x


def draw_coupler(stream: RngStream, sigma: float = 1.0) -> CouplerDraw:
    """Draw one coupler packet; consumes three uniforms (more only on a redraw)."""
    if not sigma > 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    while True:
        r, x = unit_layers(stream.uniforms(UNIFORMS_PER_DRAW)[None, :])
        if r[0] >= MIN_HALFWIDTH:
            return CouplerDraw(sigma * float(r[0]), sigma * float(x[0]), float(sigma))


def draw_couplers(stream: RngStream, n: int, sigma: float = 1.0) -> list[CouplerDraw]:
    """``n`` packets from one block of ``3n`` uniforms (row-major)."""
    if not sigma > 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    u = stream.uniforms(UNIFORMS_PER_DRAW * n).reshape(n, UNIFORMS_PER_DRAW)
    r, x = unit_layers(u)
    out = []
    for rr, xx in zip(r.tolist(), x.tolist()):
        while rr < MIN_HALFWIDTH:
            d = draw_coupler(stream, 1.0)
            rr, xx = d.halfwidth, d.offset
        out.append(CouplerDraw(sigma * rr, sigma * xx, float(sigma)))
    return out


def apply_shift(draw: CouplerDraw, s: float) -> float:
    if draw.halfwidth < MIN_HALFWIDTH:
        raise ValueError("degenerate coupler draw (zero width)")
    return K.shift(draw.halfwidth, draw.offset, float(s))


def apply_shift_array(halfwidth, offset, s) -> np.ndarray:
    """Elementwise shift for broadcastable arrays of draws and states."""
    h, x, s = np.broadcast_arrays(*(np.asarray(a, dtype=np.float64) for a in (halfwidth, offset, s)))
    if h.size and h.min() < MIN_HALFWIDTH:
        raise ValueError("degenerate coupler draw (zero width)")
    flat = K.shift_array(np.ascontiguousarray(h).ravel(), np.ascontiguousarray(x).ravel(),
                         np.ascontiguousarray(s).ravel())
    return flat.reshape(h.shape)
