"""Command line front end: ``ivanet <stage> --config run.json``.

Years are processed in a process pool whose size comes from the
``IVANET_WORKERS`` environment variable (default 1). The exit status is 0
only when every requested year succeeded.
"""

from __future__ import annotations

import argparse
import logging
import multiprocessing
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .config import RunConfig, load_config
from .pipeline import STAGES, YearOutcome, run_year, write_integration_tables, write_sankey

logger = logging.getLogger("ivanet")

WORKERS_ENV = "IVANET_WORKERS"

COMMANDS = {
    "build": ("build",),
    "communities": ("communities",),
    "decompose": ("decompose",),
    "metrics": ("metrics",),
    "integrate": ("integrate",),
    "all": STAGES,
}


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise SystemExit(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def run(config: RunConfig, stages, force: bool = False, workers: int = 1) -> list[YearOutcome]:
    """Run ``stages`` for every manifest in ``config`` and write cross-year files."""
    manifests = [str(p) for p in config.manifest_paths()]
    if not manifests:
        raise ValueError("config lists no manifests")
    if workers > 1 and len(manifests) > 1:
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(min(workers, len(manifests)), mp_context=ctx) as pool:
            outcomes = list(pool.map(run_year, [config] * len(manifests), manifests,
                                     [stages] * len(manifests), [force] * len(manifests)))
    else:
        outcomes = [run_year(config, m, stages, force) for m in manifests]
    years = [o.year for o in outcomes if o.ok]
    if len(set(years)) != len(years):
        raise ValueError(f"manifests share a year: {sorted(years)}")
    if "communities" in stages:
        write_sankey(config, years)
    if "integrate" in stages:
        write_integration_tables(config, years)
    return outcomes


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ivanet", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON run configuration")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("--force", action="store_true", help="recompute stages even if cached")
    common.add_argument("--strict", action="store_true", help="fail years whose tables do not balance")
    common.add_argument("--drop", action="append", metavar="COUNTRY",
                        help="drop a country before building (repeatable)")
    common.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=f"run the {name} stage" if name != "all" else "run every stage")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    overrides = {"out": args.out}
    if args.strict:
        overrides["strict"] = True
    config = load_config(args.config, **overrides)
    if args.drop:
        config = config.replace(drop_countries=tuple(dict.fromkeys(config.drop_countries + tuple(args.drop))))
    try:
        outcomes = run(config, COMMANDS[args.command], args.force, worker_count())
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    failed = [o for o in outcomes if not o.ok]
    for o in outcomes:
        status = "ok" if o.ok else f"FAILED ({o.error})"
        detail = f"ran={','.join(o.ran) or '-'} cached={','.join(o.skipped) or '-'}"
        print(f"{o.year if o.year is not None else o.manifest}: {status} {detail}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
