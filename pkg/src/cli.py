"""Command-line entry: `simulate` runs one experiment or sweep and emits a result table."""

import argparse
import logging
import sys
from typing import Any, Dict, List, Optional
from src.config.settings import settings
from src.sim.config import dump_config, figure_preset, load_config, spec_from_dict, spec_to_dict
from src.sim.harness import emit, run_experiment, write_output
from src.utils.exceptions import InvalidParameterError, SimulationError

logger = logging.getLogger("src.cli")

# flag dest -> config key; the pairs m/c and r/rho replace each other
OVERRIDES = {
    "n": "n", "m": "m", "c": "c", "r": "r", "rho": "rho", "k": "k", "a": "a",
    "beta": "beta", "delta": "delta", "placement": "placement", "delivery": "delivery",
    "iters": "iterations", "seed": "seed", "sweep": "sweep", "series": "series",
}
EXCLUSIVE = {"m": "c", "c": "m", "r": "rho", "rho": "r"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simulate",
        description="Simulate a cache cluster serving a Zipf request stream and report the server rate.",
    )
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--config", help="JSON config file (flat keys mirroring these flags)")
    source.add_argument("--preset", help="Figure preset: fig8i, fig8ii, fig8iii, fig9i, fig9ii, fig9iii")

    parser.add_argument("--n", type=int, help="Number of contents")
    caches = parser.add_mutually_exclusive_group()
    caches.add_argument("--m", type=int, help="Number of caches")
    caches.add_argument("--c", type=float, help="Contents per cache, n / m")
    load = parser.add_mutually_exclusive_group()
    load.add_argument("--r", type=int, help="Requests per slot")
    load.add_argument("--rho", type=float, help="Requests per cache, r / m, in (0, 1]")
    parser.add_argument("--k", type=int, help="Storage per cache in file units")
    parser.add_argument("--a", type=int, help="Service limit per cache per slot")
    parser.add_argument("--beta", type=float, help="Zipf exponent")
    parser.add_argument("--delta", type=float, help="Knapsack Storage band exponent, 0 < delta < beta - 1")
    parser.add_argument("--placement", choices=settings.PLACEMENT_POLICIES)
    parser.add_argument("--delivery", choices=settings.DELIVERY_POLICIES)
    parser.add_argument("--iters", type=int, help="Monte Carlo trials per point")
    parser.add_argument("--seed", type=int, help="Master seed")
    parser.add_argument("--sweep", help="Sweep as axis=v1,v2,... with axis in k, a, ak, n, beta")
    parser.add_argument("--series", help="Repeat the sweep per value, as axis=v1,v2,... with axis in k, a, n, beta")
    parser.add_argument("--lower-bound", action="store_true", help="Add the knapsack lower-bound column")

    parser.add_argument("--format", choices=settings.OUTPUT_FORMATS, default=None,
                        help=f"Output format (default {settings.DEFAULT_FORMAT})")
    parser.add_argument("--out", help="Write results to this file instead of stdout")
    parser.add_argument("--workers", type=int, default=None,
                        help=f"Worker processes (default {settings.WORKERS})")
    parser.add_argument("--dump-config", action="store_true",
                        help="Print the resolved config and exit without simulating")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    return parser


def configure_logging(verbose: bool = False) -> None:
    """Log to stderr, plus LOG_FILE when set; stdout carries the result table."""
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if settings.LOG_FILE:
        handlers.append(logging.FileHandler(settings.LOG_FILE))
    logging.basicConfig(
        level=logging.DEBUG if verbose else getattr(logging, settings.LOG_LEVEL, logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=handlers,
    )


def resolve_spec(args: argparse.Namespace) -> Dict[str, Any]:
    """
    Merge config file or preset with command-line overrides.

    Args:
        args: Parsed arguments

    Returns:
        Flat config mapping
    """
    if args.config:
        data = spec_to_dict(load_config(args.config))
    elif args.preset:
        data = spec_to_dict(figure_preset(args.preset))
    else:
        data = {}
    for dest, key in OVERRIDES.items():
        value = getattr(args, dest)
        if value is None:
            continue
        data[key] = value
        if dest in EXCLUSIVE:
            data.pop(EXCLUSIVE[dest], None)
    if args.lower_bound:
        data["lower_bound"] = True
    if "n" not in data:
        raise InvalidParameterError("n is required", "Pass --n, --config or --preset")
    return data


def run(argv: Optional[List[str]] = None) -> int:
    """
    Run the command line.

    Returns:
        0 on success, 2 on invalid configuration, 1 on other failures
    """
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        spec = spec_from_dict(resolve_spec(args))
        if args.dump_config:
            sys.stdout.write(dump_config(spec))
            return 0
        if args.workers is not None and args.workers < 1:
            raise InvalidParameterError("--workers must be at least 1")

        logger.info(
            "Running %s: %s placement, deliveries %s, sweep %s",
            spec.name or "custom config", spec.base.placement, ",".join(spec.policies),
            spec.axis or "none",
        )
        table = run_experiment(spec, workers=args.workers)
        data = emit(table, args.format or settings.DEFAULT_FORMAT)
        if args.out:
            write_output(data, args.out)
            logger.info("Wrote %d rows to %s", len(table.rows), args.out)
        else:
            sys.stdout.buffer.write(data)
            sys.stdout.flush()
        return 0
    except InvalidParameterError as e:
        logger.error("%s (%s)", e.message, e.suggestion)
        return 2
    except SimulationError as e:
        logger.error("%s: %s", e.code, e.message, exc_info=True)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
