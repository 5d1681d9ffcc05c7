"""Perfect sampling from one-dimensional mixtures with read-once coupling from
the past, using a Metropolis update whose proposal is the layered normal
multishift coupler."""
from .diagnostics import ks_statistic, qq_outliers, summary_stats
from .metro_ms import StepRandomness, draw_steps, evolve_paths, metropolis_step
from .multishift import CouplerDraw, apply_shift, draw_coupler
from .rng import RngStream, new_stream
from .sampler import SamplerConfig, calibrate_block_length, run_block, sample
from .targets import CATALOG, Target, most_interest_range, parse_target, resolve_target

__all__ = [
    "CATALOG",
    "CouplerDraw",
    "RngStream",
    "SamplerConfig",
    "StepRandomness",
    "Target",
    "apply_shift",
    "calibrate_block_length",
    "draw_coupler",
    "draw_steps",
    "evolve_paths",
    "ks_statistic",
    "metropolis_step",
    "most_interest_range",
    "new_stream",
    "parse_target",
    "qq_outliers",
    "resolve_target",
    "run_block",
    "sample",
    "summary_stats",
]
