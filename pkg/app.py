"""
Mann Iteration Workbench - Command Line Entry Point

Usage:
    python app.py run CONFIG [--out-dir DIR] [--seed N] [--strict-tolerance TOL] [--pdf]
    python app.py moduli CONFIG [--out-dir DIR] [--seed N] [--pdf]

Exit codes:
    0  every certificate and check passed
    1  a certificate or validation check failed
    2  config error or step outside its allowed range
    3  internal error
"""

import argparse
import logging
import sys

from utils.experiment import (
    EXIT_CONFIG_ERROR,
    EXIT_INTERNAL_ERROR,
    EXIT_OK,
    ConfigError,
    run_experiment,
    run_moduli_report,
)
from utils.rates import DivergenceScanError, StepRangeError
from utils.settings import LOG_LEVEL
from utils.spaces import DimensionMismatchError

logger = logging.getLogger("mann")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mann",
        description="Mann iteration of k-strict pseudocontractions: rates, certificates and moduli checks.",
    )
    parser.add_argument("--log-level", default=LOG_LEVEL,
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                        help="logging verbosity (default from MANN_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="JSON experiment config")
        p.add_argument("--out-dir", default=None, help="output directory (default runs/<name>)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--strict-tolerance", type=float, default=None,
                       help="override the tolerance used by certificates and checks")
        p.add_argument("--pdf", action="store_true", help="also write a PDF report")

    common(sub.add_parser("run", help="validate, iterate, certify and report"))
    common(sub.add_parser("moduli", help="moduli report for the config's space"))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    runner = run_experiment if args.command == "run" else run_moduli_report

    try:
        result = runner(args.config, out_dir=args.out_dir, seed=args.seed,
                        tolerance=args.strict_tolerance, pdf=args.pdf)
    except (ConfigError, StepRangeError, DimensionMismatchError) as exc:
        logger.error("%s", exc)
        print(f"❌ {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except DivergenceScanError as exc:
        print(f"❌ {exc}", file=sys.stderr)
        return EXIT_INTERNAL_ERROR
    except Exception:
        logger.exception("internal error")
        return EXIT_INTERNAL_ERROR

    runs = result if isinstance(result, list) else [result]
    for artifacts in runs:
        print(artifacts.summary)
        print()
    code = max((a.exit_code for a in runs), default=EXIT_OK)
    print("✅ all checks passed" if code == EXIT_OK else "❌ some checks failed")
    return code


if __name__ == "__main__":
    sys.exit(main())
