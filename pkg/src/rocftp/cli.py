"""Command-line entry point: ``rocftp <subcommand> ...``.

Exit status: 0 on success, 2 on usage or target-parse errors, 3 on runtime
failures (support errors, exhausted budgets, no coalescence).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile

import numpy as np

from .cftp import CftpBudgetError, cftp_demo
from .diagnostics import summary_stats
from .experiments import block_sweep, coalescence_study, decay_study, gof_study
from .metro_ms import SupportError
from .parallel import default_threads
from .rng import new_stream
from .sampler import (
    CALIBRATE_TAG,
    BudgetExceeded,
    CoalescenceError,
    SamplerConfig,
    calibrate_block_length,
    coalescence_times,
    sample,
)
from .targets import CATALOG, TargetError, most_interest_range, resolve_target

EXIT_USAGE = 2
EXIT_RUNTIME = 3
DEFAULT_CALIBRATE_REPS = 1000

# flags whose values may start with '-' (e.g. "--range -10,10")
_PAIR_FLAGS = ("--range", "--start", "--starts")


class UsageError(Exception):
    pass


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _floats(text: str, n: int | None = None) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if n is not None and len(vals) != n:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers, got {text!r}")
    return vals


def _pair(text: str) -> tuple[float, float]:
    return _floats(text, 2)


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _default_seed() -> int:
    env = os.environ.get("ROCFTP_SEED")
    try:
        return int(env) if env else 1
    except ValueError:
        return 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    fmt_cls = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="rocftp", description="Perfect sampling with ROCFTP and the "
                     "Metropolis-multishift coupler.", formatter_class=fmt_cls)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, target=True, rng=True):
        if target:
            p.add_argument("--target", required=True,
                           help="mixture such as '0.8*N(-2,1)+0.2*N(2,1)' or case1..case6")
            p.add_argument("--range", type=_pair, default=None, metavar="LO,HI",
                           help="starting range hat0,hat1 (catalog default for caseK)")
            p.add_argument("--sigma", type=float, default=None,
                           help="proposal scale (catalog default for caseK, else 1)")
        p.add_argument("--seed", type=int, default=_default_seed(),
                       help="master seed (falls back to $ROCFTP_SEED)")
        p.add_argument("--out", default=None, help="output file (stdout if omitted)")
        if rng:
            p.add_argument("--threads", type=int, default=default_threads(),
                           help="worker threads; never changes the output")

    def block_len(p):
        g = p.add_mutually_exclusive_group()
        g.add_argument("--block-length", type=int, default=None, metavar="T",
                       help="block length (catalog default for caseK)")
        g.add_argument("--calibrate", type=int, default=None, metavar="REPS",
                       help="set T to the median coalescence time over REPS trials")

    p = sub.add_parser("sample", help="draw exact samples", formatter_class=fmt_cls)
    common(p)
    block_len(p)
    p.add_argument("--n", type=int, required=True, help="number of samples")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="output format")
    p.add_argument("--max-blocks", type=int, default=10_000_000, help="give up after this many blocks")

    p = sub.add_parser("calibrate", help="median coalescence time and its summary",
                       formatter_class=fmt_cls)
    common(p)
    p.add_argument("--reps", type=int, default=10_000, help="coalescence trials")
    p.add_argument("--paths", type=int, choices=(2, 3), default=3,
                   help="2: range ends only; 3: ends plus the midpoint primary path")

    p = sub.add_parser("mir", help="most-interest range", formatter_class=fmt_cls)
    p.add_argument("--target", required=True, help="mixture or case1..case6")
    p.add_argument("--epsilon", type=float, default=1e-3, help="allowed outside mass")
    p.add_argument("--resolution", type=int, default=100_000, help="grid cells")
    p.add_argument("--out", default=None, help="output file (stdout if omitted)")

    p = sub.add_parser("sweep-block", help="blocks to first coalescence per block length",
                       formatter_class=fmt_cls)
    common(p)
    p.add_argument("--T", dest="T_list", type=_ints, default=(20, 30, 40, 50, 60),
                   metavar="T1,T2,...", help="block lengths")
    p.add_argument("--reps", type=int, default=10_000, help="runs per block length")
    p.add_argument("--ar1-rho", type=float, default=None,
                   help="use the monotone AR(1) multishift chain with this rho instead")

    p = sub.add_parser("coalescence", help="nested path-count study", formatter_class=fmt_cls)
    common(p)
    p.add_argument("--counts", type=_ints, default=(2, 10, 100), metavar="K1,K2,...",
                   help="nested path counts, ascending from 2")
    p.add_argument("--reps", type=int, default=1000, help="replications")

    p = sub.add_parser("decay", help="tail of the coupling time", formatter_class=fmt_cls)
    common(p)
    p.add_argument("--starts", type=_floats, default=(-10.0, 0.0, 10.0), metavar="X1,X2,...",
                   help="start points of the coupled paths")
    p.add_argument("--t-max", type=int, default=100, help="largest t reported")
    p.add_argument("--reps", type=int, default=10_000, help="replications")

    p = sub.add_parser("gof", help="goodness of fit of sampler output", formatter_class=fmt_cls)
    common(p)
    block_len(p)
    p.add_argument("--n", type=int, default=10_000, help="number of samples")
    p.add_argument("--delta", type=float, default=0.5, help="QQ outlier threshold")
    p.add_argument("--samples-out", default=None, help="also write the samples here")

    p = sub.add_parser("cftp-demo", help="CFTP on the AR(1) multishift chain",
                       formatter_class=fmt_cls)
    common(p, target=False)
    p.add_argument("--rho", type=float, default=0.92, help="AR(1) coefficient")
    p.add_argument("--start", type=_pair, default=(-100.0, 100.0), metavar="LO,HI",
                   help="bounding start states")
    p.add_argument("--reps", type=int, default=1000, help="independent runs")
    p.add_argument("--max-doublings", type=int, default=40, help="lookback budget")
    return parser


def _normalise_argv(argv: list[str]) -> list[str]:
    out = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a in _PAIR_FLAGS and i + 1 < len(argv):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def _write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".rocftp-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(header, rows, trailer: str | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    if trailer:
        buf.write(f"# {trailer}\n")
    return buf.getvalue()


def _setting(args):
    """Resolve target, range and sigma, filling catalog defaults for caseK."""
    target = resolve_target(args.target)
    case = CATALOG.get(args.target.strip())
    rng = args.range or (case.range if case else None)
    if rng is None:
        raise UsageError("--range is required for a target that is not a catalog case")
    sigma = args.sigma if args.sigma is not None else (case.sigma if case else 1.0)
    if not sigma > 0:
        raise UsageError("--sigma must be > 0")
    if not rng[0] <= rng[1]:
        raise UsageError("--range needs LO <= HI")
    return target, case, float(rng[0]), float(rng[1]), float(sigma)


def _block_length(args, target, case, lo, hi, sigma) -> int:
    if args.block_length is not None:
        if args.block_length < 1:
            raise UsageError("--block-length must be >= 1")
        return args.block_length
    reps = args.calibrate
    if reps is None:
        if case is not None and case.block_length is not None:
            return case.block_length
        reps = DEFAULT_CALIBRATE_REPS
    if reps < 100:
        raise UsageError("--calibrate needs at least 100 replications")
    return calibrate_block_length(target, lo, hi, sigma, reps, new_stream(args.seed, 0),
                                  threads=args.threads)


def cmd_sample(args) -> str:
    target, case, lo, hi, sigma = _setting(args)
    if args.n < 0:
        raise UsageError("--n must be >= 0")
    T = _block_length(args, target, case, lo, hi, sigma)
    config = SamplerConfig(target, lo, hi, sigma, T, seed=args.seed, max_blocks=args.max_blocks)
    xs, stats = sample(config, args.n)
    if args.format == "json":
        doc = {"samples": [float(fmt(x)) for x in xs],
               "stats": {**stats.as_dict(), "block_length": T, "seed": args.seed}}
        return json.dumps(doc, indent=1) + "\n"
    return _csv(["sample"], ([x] for x in xs))


def cmd_calibrate(args) -> str:
    target, _, lo, hi, sigma = _setting(args)
    if args.reps < 100:
        raise UsageError("--reps must be >= 100")
    starts = (lo, hi) if args.paths == 2 else (lo, hi, 0.5 * (lo + hi))
    times = coalescence_times(target, starts, sigma, args.reps, new_stream(args.seed, 0),
                              tag=CALIBRATE_TAG, threads=args.threads)
    s = summary_stats(times)
    T = max(1, math.ceil(s.median))
    return _csv(["block_length", "min", "q1", "median", "mean", "q3", "max", "reps"],
                [[T, *s.as_tuple(), args.reps]], f"seed={args.seed} reps={args.reps}")


def cmd_mir(args) -> str:
    target = resolve_target(args.target)
    res = most_interest_range(target, args.epsilon, args.resolution)
    rows = [[res.epsilon, res.level, res.mass, res.hull_lo, res.hull_hi, a, b]
            for a, b in res.intervals]
    return _csv(["epsilon", "level", "mass", "hull_lo", "hull_hi", "interval_lo", "interval_hi"],
                rows)


def cmd_sweep(args) -> str:
    target, _, lo, hi, sigma = _setting(args)
    if args.reps < 100:
        raise UsageError("--reps must be >= 100")
    rows = block_sweep(target, lo, hi, sigma, args.T_list, args.reps, new_stream(args.seed, 0),
                       threads=args.threads, ar1_rho=args.ar1_rho)
    return _csv(["T", "p_hat", "n_bar", "tau_bar", "reps"],
                ([r.T, r.p_hat, r.n_bar, r.tau_bar, r.reps] for r in rows),
                f"seed={args.seed} reps={args.reps}")


def cmd_coalescence(args) -> str:
    target, _, lo, hi, sigma = _setting(args)
    try:
        study = coalescence_study(target, lo, hi, sigma, args.counts, args.reps,
                                  new_stream(args.seed, 0), threads=args.threads)
    except ValueError as exc:
        raise UsageError(str(exc))
    rows = []
    for k, mean, pct, s in zip(study.path_counts, study.means, study.percent_equal,
                               study.summaries()):
        rows.append([k, mean, pct, s.min, s.q1, s.median, s.q3, s.max])
    return _csv(["paths", "mean_time", "percent_equal", "min", "q1", "median", "q3", "max"],
                rows, f"seed={args.seed} reps={args.reps}")


def cmd_decay(args) -> str:
    target, _, _, _, sigma = _setting_no_range(args)
    if args.reps < 1000:
        raise UsageError("--reps must be >= 1000")
    rows = decay_study(target, args.starts, sigma, args.t_max, args.reps,
                       new_stream(args.seed, 0), threads=args.threads)
    out = []
    for r in rows:
        logp = math.log(r.survive_hat) if r.survive_hat > 0 else float("-inf")
        out.append([r.t, r.survive_hat, logp, r.tv_bound])
    return _csv(["t", "survive_hat", "log_survive_hat", "tv_bound"], out,
                f"seed={args.seed} reps={args.reps}")


def _setting_no_range(args):
    # decay takes explicit start points; the range flag is optional there
    if args.range is None:
        case = CATALOG.get(args.target.strip())
        if case is None:
            args.range = (min(args.starts), max(args.starts))
    return _setting(args)


def cmd_gof(args) -> str:
    target, case, lo, hi, sigma = _setting(args)
    if args.n < 100:
        raise UsageError("--n must be >= 100")
    if not args.delta > 0:
        raise UsageError("--delta must be > 0")
    T = _block_length(args, target, case, lo, hi, sigma)
    rep = gof_study(target, lo, hi, sigma, T, args.n, args.delta, new_stream(args.seed, 0))
    rows = [["block_length", T], ["n", args.n], ["delta", args.delta],
            ["ks_d", rep.ks_d], ["ks_p", rep.ks_p],
            ["qq_outliers", rep.outliers], ["qq_outlier_fraction", rep.outlier_fraction],
            ["blocks", rep.stats.blocks], ["coalescent_blocks", rep.stats.coalescent_blocks],
            ["p_hat", rep.stats.p_hat]]
    for i, mm in enumerate(rep.modes):
        rows.append([f"mode{i}_observed", mm.observed])
        rows.append([f"mode{i}_expected", mm.expected])
    if args.samples_out:
        _write(args.samples_out, _csv(["sample"], ([x] for x in rep.samples)))
    return _csv(["metric", "value"], rows, f"seed={args.seed} reps={args.n}")


def cmd_cftp(args) -> str:
    if args.reps < 1:
        raise UsageError("--reps must be >= 1")
    if not abs(args.rho) < 1:
        raise UsageError("--rho must satisfy |rho| < 1")
    if not args.start[0] < args.start[1]:
        raise UsageError("--start needs LO < HI")
    rows = cftp_demo(args.rho, args.start, args.reps, args.seed, threads=args.threads,
                     max_doublings=args.max_doublings)
    return _csv(["rep", "sample", "backoff_steps"],
                ([r.rep, r.sample, r.backoff_steps] for r in rows),
                f"seed={args.seed} reps={args.reps}")


COMMANDS = {
    "sample": cmd_sample,
    "calibrate": cmd_calibrate,
    "mir": cmd_mir,
    "sweep-block": cmd_sweep,
    "coalescence": cmd_coalescence,
    "decay": cmd_decay,
    "gof": cmd_gof,
    "cftp-demo": cmd_cftp,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        return _run(parser, argv)
    except SystemExit as exc:  # --help
        return exc.code if isinstance(exc.code, int) else 0


def _run(parser, argv) -> int:
    try:
        args = parser.parse_args(_normalise_argv(argv))
        if getattr(args, "threads", 1) < 1:
            raise UsageError("--threads must be >= 1")
        text = COMMANDS[args.command](args)
        _write(args.out, text)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TargetError as exc:
        print(f"error: invalid target: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SupportError, CoalescenceError, BudgetExceeded, CftpBudgetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return 0


if __name__ == "__main__":
    sys.exit(main())
