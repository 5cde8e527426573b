"""Command line entry point: ``tomolab <subcommand> --config FILE --seed N --out DIR``."""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from . import __version__
from .experiments import RUNNERS, load_config, run, write_reports
from .linalg import TomolabError

HELP = {
    "risk": "risk curves for random-basis or Pauli tomography (config key: kind)",
    "scaling": "bisect n* per dimension and fit the exponent of n* against d",
    "bounds": "all Monte Carlo versus closed-form checks",
    "moments": "Haar twirls, second moments and rank-r moments",
    "chi2": "chi-square functional against its mean and sup bounds",
    "packing": "build and verify the rejection-sampled packings",
    "shadows": "shadow estimation end to end at the planned sample size",
    "discriminate": "identify a hidden packing state from shadow estimates",
    "tables": "numerical lower-bound tables and their scaling laws",
    "tomography": "a single tomography run on a given or random state",
    "selftest": "run the acceptance criteria",
}


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tomolab", description="single-copy tomography experiments")
    p.add_argument("--version", action="version", version=f"tomolab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in RUNNERS:
        sp = sub.add_parser(name, help=HELP[name])
        sp.add_argument("--config", help="YAML config file (flat keys, see docs/config.md)")
        sp.add_argument("--seed", type=_seed, help="root seed; overrides the config value")
        sp.add_argument("--out", default="out", help="output directory (default: ./out)")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed=args.seed)
        reports = run(args.command, cfg, args.out)
    except (TomolabError, ValueError, OSError) as exc:
        print(f"tomolab: error: {exc}", file=sys.stderr)
        return 2
    path = write_reports(reports, args.out, __version__)
    failed = 0
    for rep in reports:
        counts = ", ".join(f"{k}={v}" for k, v in rep.verdict_counts().items())
        print(f"{rep.name}: {len(rep.rows)} rows ({counts}) in {rep.wall_clock:.1f}s")
        failed += rep.n_failed
    print(f"wrote {path}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
