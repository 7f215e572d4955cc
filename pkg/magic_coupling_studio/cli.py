"""Command line entry point: ``magic-studio <subcommand> --config cfg.json``."""

import argparse
import logging
import sys
from typing import Any, Callable, Dict, List, Optional

from .client import MagicCouplingStudio
from .config import parse_n_range
from .errors import ConfigurationError, MagicStudioError, NumericalError, ReportError
from .report import OutputFormat, format_table, render_report

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIGURATION = 1
EXIT_NUMERICAL = 2


class _ArgumentParser(argparse.ArgumentParser):
    """Reports usage errors with the configuration exit code."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIGURATION, f"{self.prog}: error: {message}\n")


def _n_range(text: str):
    try:
        return parse_n_range(text)
    except ConfigurationError as e:
        raise argparse.ArgumentTypeError(str(e))


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="JSON configuration file")
    parser.add_argument("--out", default="results", help="output directory (default: results)")
    parser.add_argument("--format", dest="formats", action="append",
                        choices=[f.value for f in OutputFormat],
                        help="output format; repeat for several (default: table)")
    parser.add_argument("--gradient", type=float, help="axial field gradient in T/m, overrides the config")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings only")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="magic-studio",
        description="Higher-order couplings of trapped-ion chains in a magnetic field gradient.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    for name, help_text in (
        ("equilibrium", "equilibrium positions of the chain"),
        ("couplings", "two-body spin-spin couplings"),
        ("three-body", "three-spin couplings from Coulomb and trap anharmonicities"),
        ("local-fields", "phonon-dependent local fields"),
        ("curvature", "three-spin couplings from field curvature"),
        ("transversal", "corrections from the transversal modes"),
    ):
        _add_common(sub.add_parser(name, help=help_text))

    modes = sub.add_parser("modes", help="normal modes")
    _add_common(modes)
    modes.add_argument("--direction", default="axial", choices=["axial", "x", "y"])

    for name, help_text in (("sweep", "sweep over the number of ions"),
                            ("report", "couplings, local fields, sweep and fits together")):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        p.add_argument("--n-range", type=_n_range, help="inclusive range of N, e.g. 2:40")

    fit = sub.add_parser("fit", help="scaling-law fit of a sweep column")
    _add_common(fit)
    fit.add_argument("--n-range", type=_n_range, help="inclusive range of N, e.g. 2:40")
    fit.add_argument("--column", default="j2_max",
                     choices=["j2_max", "j2_min", "local_field_edge", "resonance_gap"])
    fit.add_argument("--model", default="power_law", choices=["power_law", "log_corrected"])
    fit.add_argument("--fit-space", choices=["linear", "log"],
                     help="fit on raw or log values (default: linear for power_law, log for log_corrected)")

    oracle = sub.add_parser("oracle", help="truncated Fock space check of the analytic couplings")
    _add_common(oracle)
    oracle.add_argument("--n-ions", type=int, default=2, help="ions in the oracle chain (at most 3)")
    oracle.add_argument("--cutoff", type=int, help="largest phonon number per mode")
    oracle.add_argument("--order", type=int, choices=[2, 3], help="expansion order")
    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


_DISPATCH: Dict[str, Callable[[MagicCouplingStudio, argparse.Namespace], Dict[str, Any]]] = {
    "equilibrium": lambda studio, args: studio.equilibrium(),
    "modes": lambda studio, args: studio.modes(args.direction),
    "couplings": lambda studio, args: studio.couplings(),
    "three-body": lambda studio, args: studio.three_body(),
    "local-fields": lambda studio, args: studio.local_fields(),
    "curvature": lambda studio, args: studio.curvature(),
    "transversal": lambda studio, args: studio.transversal(),
    "sweep": lambda studio, args: studio.sweep(args.n_range),
    "fit": lambda studio, args: studio.fit(args.column, args.model, args.n_range, args.fit_space),
    "oracle": lambda studio, args: studio.oracle(args.n_ions, args.cutoff, args.order),
    "report": lambda studio, args: studio.report(args.n_range),
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args)
    formats = args.formats or [OutputFormat.TABLE.value]
    try:
        studio = MagicCouplingStudio(args.config, gradient=args.gradient)
        payload = _DISPATCH[args.subcommand](studio, args)
        render_report(payload, formats, args.out)
    except ConfigurationError as e:
        logger.error("configuration error (%s): %s", e.field, e)
        return EXIT_CONFIGURATION
    except (NumericalError, ReportError) as e:
        logger.error("%s: %s", type(e).__name__, e)
        return EXIT_NUMERICAL
    except MagicStudioError as e:
        logger.error("%s", e)
        return EXIT_NUMERICAL

    if OutputFormat.TABLE.value in formats:
        for name, rows in payload["tables"].items():
            if name != "main":
                print(f"[{name}]")
            print(format_table(rows))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
