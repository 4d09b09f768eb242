"""Command-line entry point.

Exit codes: 0 success, 2 validation error, 3 numerical failure (NaN or
blow-up), 4 I/O error.
"""
import argparse
import logging
import sys

from .experiments import COMMANDS, load_config, run_experiment
from .spectral import NumericalError, ValidationError

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("fdsp")


def build_parser():
    p = argparse.ArgumentParser(prog="fdsp", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="TOML configuration file")
        s.add_argument("--out", default=None,
                       help="parent directory of the run directory (overrides output_dir)")
        s.add_argument("--resume", default=None, help="snapshot to resume from")
        s.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    return p


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_VALIDATION if e.code else EXIT_OK
    try:
        if args.threads < 1:
            raise ValidationError("--threads must be >= 1")
        cfg = load_config(args.config, args.command)
        d, _ = run_experiment(cfg, args.out, args.resume, args.threads)
    except ValidationError as e:
        log.error("validation: %s", e)
        return EXIT_VALIDATION
    except NumericalError as e:
        log.error("numerical failure: %s", e)
        return EXIT_NUMERICAL
    except OSError as e:
        log.error("i/o: %s", e)
        return EXIT_IO
    log.info("wrote %s", d)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
