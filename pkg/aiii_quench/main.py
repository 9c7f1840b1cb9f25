"""
AIII Quench Simulator - command-line entry point

Subcommands run one measurement pipeline each and write data files with a
metadata header. Exit codes: 0 success, 2 invalid configuration, 3 numeric,
topology or I/O failure, 1 anything unexpected.
"""

import argparse
import json
import logging
import sys
from collections.abc import Callable
from typing import Any

from pydantic import ValidationError

from aiii_quench import __version__
from aiii_quench.config import get_settings, load_run_config, resolve_out_dir
from aiii_quench.errors import QuenchError
from aiii_quench.schemas import ErrorReport, RunConfig
from aiii_quench.services.experiment import QuenchExperimentService, RunResult

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

_MODE_ALIASES = {"noisy": "noisy-exact"}

# Which grid the --grid flag sets for each command
_GRID_TARGET = {
    "textures": "slice",
    "bis": "mesh",
    "winding": "mesh",
    "noise": "mesh",
}


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--case", choices=["I", "II", "III", "slice", "trivial"], help="m_z preset")
    parser.add_argument("--mz", help='Post-quench m_z in rad/s or as an expression such as "0.86*xi0"')
    parser.add_argument("--grid", type=int, help="Grid points per axis (slice for textures, mesh otherwise)")
    parser.add_argument(
        "--mode",
        choices=["exact", "trotter", "compiled", "noisy", "noisy-exact"],
        help="Evolution mode",
    )
    parser.add_argument("--averaging", choices=["grid", "dense"], help="Time grid for averaging")
    parser.add_argument("--delta", help='Shell offset in rad/s or as an expression such as "0.1*xi0"')
    parser.add_argument("--seed", type=int, help="Noise seed")
    parser.add_argument("--out", help="Output directory (default: AIII_QUENCH_OUT_DIR or ./results)")
    parser.add_argument("--workers", type=int, help="Worker processes, 0 = all cores")
    parser.add_argument("--log-level", help="Logging level (default: AIII_QUENCH_LOG_LEVEL or INFO)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aiii-quench",
        description="Quench-dynamics measurement of the 3D AIII winding number",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("textures", "time-averaged spin textures on a kz slice"),
        ("bis", "band-inversion surface: slice contours, mesh and band cut"),
        ("winding", "winding number from the dynamical spin-texture field"),
        ("noise", "winding number under static dephasing for several amplitudes"),
        ("pulse", "compile one Trotter slice into an NMR pulse sequence"),
    ):
        sub = commands.add_parser(name, help=help_text)
        _add_common_flags(sub)
        if name == "noise":
            sub.add_argument("--levels", nargs="+", help='Noise amplitudes, e.g. 0 "0.1*xi_so"')
            sub.add_argument("--samples", type=int, help="Noise samples per point")
        if name == "pulse":
            sub.add_argument("--h", nargs=4, metavar=("H0", "H1", "H2", "H3"), help="Bloch coefficients")
            sub.add_argument("--tau", type=float, help="Slice length in ms")
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    """Nested config dict from the flags that were given."""
    out: dict[str, Any] = {}

    def put(section: str | None, key: str, value: Any) -> None:
        if value is None:
            return
        if section is None:
            out[key] = value
        else:
            out.setdefault(section, {})[key] = value

    put(None, "case", args.case)
    put("model", "m_z", args.mz)
    if args.grid is not None and args.command in _GRID_TARGET:
        put(_GRID_TARGET[args.command], "n", args.grid)
    if args.mode is not None:
        put("quench", "mode", _MODE_ALIASES.get(args.mode, args.mode))
    put("quench", "averaging", args.averaging)
    put("mesh", "delta", args.delta)
    put(None, "seed", args.seed)
    put(None, "out_dir", args.out)
    put(None, "workers", args.workers)
    put("noise", "levels", getattr(args, "levels", None))
    put("quench", "noise_samples", getattr(args, "samples", None))
    put("pulse", "h", getattr(args, "h", None))
    put("pulse", "tau_ms", getattr(args, "tau", None))
    return out


def _configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def _report_error(code: str, message: str, details: dict | None = None) -> None:
    report = ErrorReport(error=code, message=message, details=details)
    print(report.model_dump_json(), file=sys.stderr)


def _run(command: str, service: QuenchExperimentService) -> RunResult:
    handlers: dict[str, Callable[[], RunResult]] = {
        "textures": service.run_textures,
        "bis": service.run_bis,
        "winding": service.run_winding,
        "noise": service.run_noise,
        "pulse": service.run_pulse,
    }
    return handlers[command]()


def main(argv: list[str] | None = None) -> int:
    """
    Run one subcommand.

    Args:
        argv: Arguments without the program name (default: sys.argv[1:])

    Returns:
        Process exit code
    """
    args = build_parser().parse_args(argv)
    settings = get_settings()
    _configure_logging(args.log_level or settings.log_level)

    try:
        config: RunConfig = load_run_config(args.config, _overrides(args))
        service = QuenchExperimentService(config, resolve_out_dir(config, settings))
    except ValidationError as e:
        logger.error(f"Invalid configuration: {e}")
        _report_error("INVALID_CONFIG", "Configuration failed validation", {"errors": json.loads(e.json())})
        return EXIT_CONFIG
    except ValueError as e:
        logger.error(f"Invalid configuration: {e}")
        _report_error("INVALID_CONFIG", str(e))
        return EXIT_CONFIG

    try:
        logger.info(f"Running {args.command} (config {config.sha256()[:12]})")
        result = _run(args.command, service)
    except QuenchError as e:
        logger.error(f"{args.command} failed: {e}")
        _report_error(type(e).__name__, str(e))
        return EXIT_NUMERIC
    except OSError as e:
        logger.error(f"I/O failure: {e}")
        _report_error("IO_ERROR", str(e))
        return EXIT_NUMERIC
    except ValueError as e:
        logger.error(f"Invalid parameters for {args.command}: {e}")
        _report_error("INVALID_PARAMETERS", str(e))
        return EXIT_CONFIG
    except Exception as e:
        logger.error(f"Unexpected error in {args.command}: {e}", exc_info=True)
        _report_error("INTERNAL_ERROR", "An unexpected error occurred")
        return EXIT_UNEXPECTED

    for path in result.paths:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
