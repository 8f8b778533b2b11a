"""
Command-line entry point.

Example:
  python -m src.phasequant spectrum --potential harmonic --omega 1 --n-max 2
  python -m src.phasequant cornell verify-identity --sweeps 5 --seed 42
"""
import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pydantic import ValidationError

from . import __version__
from .config import configure_logging, get_settings
from .errors import ConfigurationError, NumericalFailureError, PhaseQuantError
from .models import RunConfig
from .service import quant_service

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1


def _potential_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("problem")
    group.add_argument("--potential", dest="kind", default=None,
                       choices=["harmonic", "coulomb", "linear", "cornell", "relativistic_cornell"])
    group.add_argument("--potential-expr", dest="expr", default=None, help="Custom V(x) or V(r)")
    group.add_argument("--domain", default=None, choices=["full-line", "half-line", "punctured-line"])
    group.add_argument("--omega", type=float, default=None)
    group.add_argument("--e-squared", type=float, default=None)
    group.add_argument("--kappa", type=float, default=None)
    group.add_argument("--alpha-tilde", type=float, default=None)
    group.add_argument("--alpha-s", type=float, default=None)
    group.add_argument("--quark-mass", type=float, default=None)
    group.add_argument("--mass", type=float, default=None)
    group.add_argument("--hbar", type=float, default=None)
    group.add_argument("--l", type=int, default=None)
    group.add_argument("--window", type=float, nargs=2, default=None, metavar=("A", "B"))
    group.add_argument("--rel-tol", type=float, default=None)
    group.add_argument("--scan-samples", type=int, default=None)


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="JSON file with the RunConfig schema")
    parser.add_argument("--format", default=None, choices=["json", "csv"])
    parser.add_argument("--out", default=None, help="Output path (stdout when omitted)")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--workers", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phasequant", description="Semiclassical exact quantization toolkit")
    parser.add_argument("--version", action="version", version=f"phasequant {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    spectrum = commands.add_parser("spectrum", help="Levels 0..n_max by the two-turning-point rule")
    _potential_flags(spectrum)
    _common_flags(spectrum)
    spectrum.add_argument("--n-max", type=int, default=None)

    wavefunction = commands.add_parser("wavefunction", help="Piecewise wavefunction of level n")
    _potential_flags(wavefunction)
    _common_flags(wavefunction)
    wavefunction.add_argument("--n", type=int, default=None)
    wavefunction.add_argument("--samples", type=int, default=None)

    cornell = commands.add_parser("cornell", help="Relativistic Cornell spectrum and contour identity")
    cornell.add_argument("action", nargs="?", default="table", choices=["table", "verify-identity"])
    _common_flags(cornell)
    cornell.add_argument("--kappa", type=float, default=None)
    cornell.add_argument("--alpha-tilde", type=float, default=None)
    cornell.add_argument("--alpha-s", type=float, default=None)
    cornell.add_argument("--mass", type=float, default=None, help="Quark mass")
    cornell.add_argument("--l", type=int, default=None)
    cornell.add_argument("--n-r-max", type=int, default=None)
    cornell.add_argument("--l-max", type=int, default=None)
    cornell.add_argument("--shift-c", type=float, default=None)
    cornell.add_argument("--sweeps", type=int, default=None)

    verify = commands.add_parser("verify", help="Compare semiclassical levels with the Numerov oracle")
    _potential_flags(verify)
    _common_flags(verify)
    verify.add_argument("--problem", default=None, choices=["harmonic", "coulomb", "cornell"])
    verify.add_argument("--n-max", type=int, default=None)
    verify.add_argument("--grid-h", type=float, default=None)
    verify.add_argument("--l-max", type=int, default=None)

    identity = commands.add_parser("identity-check", help="Cornell contour identity over random parameters")
    _common_flags(identity)
    identity.add_argument("--sweeps", type=int, default=None)
    return parser


def _set(data: Dict[str, Any], key: str, value: Any) -> None:
    if value is not None:
        data[key] = value


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Config file values overlaid with explicitly given flags."""
    data: Dict[str, Any] = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"cannot read config file {args.config}: {str(e)}")
    flags = vars(args)
    command = args.command
    if command == "cornell" and args.action == "verify-identity":
        command = "identity-check"
    data["command"] = command

    for key in ("format", "out", "seed", "workers", "n_max", "n", "samples", "grid_h", "problem", "sweeps"):
        _set(data, key, flags.get(key))

    if command in ("cornell", "identity-check") or flags.get("problem") == "cornell":
        cornell = dict(data.get("cornell") or {})
        for key in ("kappa", "alpha_tilde", "alpha_s", "l", "n_r_max", "l_max", "shift_c"):
            _set(cornell, key, flags.get(key))
        _set(cornell, "mass", flags.get("mass") if command == "cornell" else flags.get("quark_mass"))
        if cornell:
            data["cornell"] = cornell
        return RunConfig.model_validate(data)

    for key in ("mass", "hbar", "l"):
        _set(data, key, flags.get(key))
    if flags.get("window") is not None:
        data["window"] = list(flags["window"])
    tolerances = dict(data.get("tolerances") or {})
    _set(tolerances, "rel_tol", flags.get("rel_tol"))
    _set(tolerances, "scan_samples", flags.get("scan_samples"))
    if tolerances:
        data["tolerances"] = tolerances
    if flags.get("kind") is not None or flags.get("expr") is not None:
        potential = {}
        for key in ("kind", "expr", "domain", "omega", "e_squared", "kappa", "alpha_tilde", "alpha_s", "quark_mass"):
            _set(potential, key, flags.get(key))
        data["potential"] = potential
    return RunConfig.model_validate(data)


def _csv(header: Sequence[str], rows: List[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def _first_error(results: Any) -> Optional[Dict[str, Any]]:
    """Structured error anywhere in a result payload."""
    if isinstance(results, dict):
        if isinstance(results.get("error"), dict):
            return results["error"]
        for value in results.values():
            found = _first_error(value)
            if found:
                return found
    elif isinstance(results, list):
        for value in results:
            found = _first_error(value)
            if found:
                return found
    return None


def execute(config: RunConfig) -> Dict[str, Any]:
    """Run one command; returns the results payload (and CSV text when requested)."""
    command = config.command
    if command == "spectrum":
        report = quant_service.spectrum(config)
        results = report.model_dump(mode="json", exclude_none=True)
        results["energies"] = [level.energy for level in report.levels]
        return {"results": results}
    if command == "wavefunction":
        payload, rows = quant_service.wavefunction(config)
        return {"results": payload, "csv": _csv(("x", "psi", "region"), rows)}
    if command == "cornell":
        results = quant_service.cornell_table(config)
        header = ("n_r", "l", "E_squared", "M_squared", "linear_rescaled", "interference")
        rows = [[row[h] if row[h] is not None else "" for h in header] for row in results["regge"]]
        return {"results": results, "csv": _csv(header, rows)}
    if command == "identity-check":
        return {"results": quant_service.identity_check(config).model_dump(mode="json")}
    return {"results": quant_service.verify(config)}


def render(config: RunConfig, outcome: Dict[str, Any]) -> str:
    if config.format == "csv":
        return outcome["csv"]
    document = {
        "tool": "phasequant",
        "version": __version__,
        "config": config.resolved(get_settings()),
        **{k: v for k, v in outcome.items() if k != "csv"},
    }
    return json.dumps(document, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _write(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _fail(error: Dict[str, Any], config: Optional[RunConfig], out: Optional[str]) -> int:
    document: Dict[str, Any] = {"tool": "phasequant", "version": __version__, "error": error}
    if config is not None:
        document["config"] = config.resolved(get_settings())
    _write(json.dumps(document, indent=2, sort_keys=True, default=str) + "\n", out)
    logger.error("%s: %s", error.get("type"), error.get("message"))
    return int(error.get("exit_code", EXIT_USAGE))


def run(config: RunConfig) -> int:
    """
    Execute a validated config and write its output.

    Returns:
        0 on success, 1 usage/config error, 2 numerical failure, 3 no bound state / domain error
    """
    try:
        outcome = execute(config)
        error = _first_error(outcome["results"])
        text = render(config, outcome)
    except PhaseQuantError as e:
        return _fail(e.to_dict(), config, config.out)
    except ValueError as e:
        # allow_nan=False rejects non-finite numbers
        return _fail(NumericalFailureError(f"non-finite value in output: {str(e)}").to_dict(), config, config.out)
    _write(text, config.out)
    if error:
        logger.error("%s: %s", error.get("type"), error.get("message"))
        return int(error.get("exit_code", EXIT_USAGE))
    return EXIT_OK


def _attach_expression(argv: Sequence[str]) -> List[str]:
    """Glue `--potential-expr VALUE` so argparse accepts values like "-x^2"."""
    joined: List[str] = []
    tokens = iter(argv)
    for token in tokens:
        if token == "--potential-expr":
            value = next(tokens, None)
            joined.append(token if value is None else f"{token}={value}")
        else:
            joined.append(token)
    return joined


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = _attach_expression(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors; 2 is reserved for numerical failures
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE
    configure_logging()
    try:
        config = config_from_args(args)
    except ValidationError as e:
        error = ConfigurationError(f"invalid configuration: {e.errors(include_url=False)}").to_dict()
        return _fail(error, None, getattr(args, "out", None))
    except PhaseQuantError as e:
        return _fail(e.to_dict(), None, getattr(args, "out", None))
    if config.workers:
        logger.debug("using %d workers", config.workers)
    return run(config)


if __name__ == "__main__":
    raise SystemExit(main())
