"""Command-line entry point: ``slitwave {run,sweep,oracle,compare}``.

Exit codes: 0 success, 2 configuration error, 3 numerical-tolerance
failure, 4 I/O error. Nothing is random, so every run is reproducible.
"""
import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .aperture import Aperture, build_mask
from .errors import ConfigError, NumericalError
from .experiment import ASSUMPTIONS, run_all, run_scenario, sweep_longitudinal
from .io import load_config, parse_config, render_plots, write_profile_csv
from .propagator import propagate, propagate_oracle

log = logging.getLogger("slitwave")

ORACLE_RTOL = 1e-4
ORACLE_HALFWIDTH = 3e-3
ORACLE_SUBGRATING = 50


def _config(args):
    config = load_config(args.config) if args.config else parse_config("")
    if getattr(args, "assumption", None):
        config = config.with_assumption(args.assumption)
    return config


def _out(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(args):
    config = _config(args)
    out = _out(args)
    result = run_scenario(config, workers=args.workers)
    path = write_profile_csv(result, out / f"profile_{config.assumption}.csv")
    log.info("wrote %s", path)
    if not args.no_plots:
        for p in render_plots([result], out, fmt=args.format):
            log.info("wrote %s", p)
    return 0


def cmd_compare(args):
    config = _config(args)
    out = _out(args)
    results = run_all(config, workers=args.workers)
    for name, result in results.items():
        write_profile_csv(result, out / f"profile_{name}.csv")
    if not args.no_plots:
        render_plots(results.values(), out, fmt=args.format)
    return 0


def cmd_sweep(args):
    config = _config(args)
    out = _out(args)
    results = sweep_longitudinal(config, workers=args.workers)
    for i, result in enumerate(results):
        write_profile_csv(result, out / f"sweep_{config.assumption}_{i:03d}.csv")
    if not args.no_plots:
        render_plots(results, out, kind="sweep", fmt=args.format)
    log.info("wrote %d planes to %s", len(results), out)
    return 0


def oracle_check(config, points=None):
    """Segment method vs sampling oracle on slit A and a 50-slit sub-grating.

    Returns a list of ``(label, x, segment, oracle, rel_error)`` arrays.
    """
    n = points or config.oracle_points
    x = np.linspace(-ORACLE_HALFWIDTH, ORACLE_HALFWIDTH, n)
    grating = build_mask(config.geometry, "B-only").intervals
    start = max(0, len(grating) // 2 - ORACLE_SUBGRATING // 2)
    cases = [("slit_A", build_mask(config.geometry, "A-only")),
             ("subgrating_50", Aperture(grating[start:start + ORACLE_SUBGRATING]))]
    report = []
    for label, aperture in cases:
        fast = propagate(config.setup, config.beam, aperture, config.t1, config.t2, x,
                         degree=config.max_degree, fit_rtol=config.fit_rtol).values
        slow = propagate_oracle(config.setup, config.beam, aperture, config.t1, config.t2, x,
                                max_phase_step=config.oracle_phase_step,
                                sample_budget=config.oracle_sample_budget).values
        report.append((label, x, fast, slow, np.abs(fast - slow) / np.abs(slow)))
    return report


def cmd_oracle(args):
    config = _config(args)
    out = _out(args)
    report = oracle_check(config)
    lines = ["aperture,x_m,segment_re,segment_im,oracle_re,oracle_im,rel_error"]
    worst = 0.0
    for label, x, fast, slow, rel in report:
        for i in range(x.size):
            lines.append(f"{label},{x[i]:.17g},{fast[i].real:.17g},{fast[i].imag:.17g},"
                         f"{slow[i].real:.17g},{slow[i].imag:.17g},{rel[i]:.17g}")
        print(f"{label:>14}: max relative field error {rel.max():.3e}")
        worst = max(worst, rel.max())
    with open(out / "oracle_check.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    if worst >= ORACLE_RTOL:
        print(f"FAIL: {worst:.3e} >= {ORACLE_RTOL:g}", file=sys.stderr)
        return 3
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="slitwave", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "run": (cmd_run, "single scenario at the detector"),
        "sweep": (cmd_sweep, "longitudinal evolution behind the slits"),
        "oracle": (cmd_oracle, "cross-check the propagator against the sampling oracle"),
        "compare": (cmd_compare, "all three assumptions side by side"),
    }
    for name, (func, help_text) in commands.items():
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--config", metavar="PATH", help="TOML config (defaults: reference setup)")
        p.add_argument("--out", metavar="DIR", default="out", help="output directory")
        p.add_argument("--assumption", choices=ASSUMPTIONS)
        p.add_argument("--workers", type=int, default=1, help="threads over detector points")
        p.add_argument("--no-plots", action="store_true")
        p.add_argument("--format", choices=("png", "svg"), default="png")
        p.add_argument("--seedless", action="store_true",
                       help="accepted for compatibility; every run is seedless")
    return parser


def main(argv=None):
    logging.basicConfig(format="[%(name)s] %(message)s", level=logging.INFO)
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
