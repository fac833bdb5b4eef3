"""
Command-Line Interface
argparse surface for simulate, train, report, pathloss and coefficients.
Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error.
"""

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, TextIO

import yaml
from pydantic import ValidationError as PydanticValidationError

from config.scenario_loader import check_state_bounds, load_scenario
from config.settings import get_config
from core.exceptions import PathLossLabException, UsageError, ValidationError, handle_error
from core.logging_system import get_logger, setup_logging
from models.domain_models import (
    CARRIER_FREQUENCIES_GHZ, AtmosphericState, RegressorKind, Season
)
from services.orchestrator import apply_overrides, get_orchestrator, read_manifest
from services.regression_service import DEFAULT_HYPERPARAMETERS, default_specs
from services.report_service import format_metrics_text, metrics_frame
from utils.itu_rain import Polarization

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

WEATHER_FLAGS = ("temperature", "humidity", "pressure", "rain_rate")

# ---------------------------------------------------------------------------
# argument types
# ---------------------------------------------------------------------------

def _float_list(text: str) -> List[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values

def _season_list(text: str) -> List[Season]:
    by_name = {season.value.lower(): season for season in Season}
    seasons = []
    for part in (p.strip() for p in text.split(",")):
        if not part:
            continue
        if part.lower() not in by_name:
            raise argparse.ArgumentTypeError(
                f"unknown season '{part}' (choose from {', '.join(s.value for s in Season)})"
            )
        seasons.append(by_name[part.lower()])
    if not seasons:
        raise argparse.ArgumentTypeError("empty season list")
    return seasons

def _param(text: str) -> tuple:
    """kind.name=value, the value parsed as a YAML scalar."""
    key, sep, raw = text.partition("=")
    kind, dot, name = key.partition(".")
    if not sep or not dot or not name:
        raise argparse.ArgumentTypeError(f"expected kind.name=value, got '{text}'")
    return kind.strip().lower(), name.strip(), yaml.safe_load(raw)

def parse_model_list(text: str) -> List[RegressorKind]:
    if text.strip().lower() == "all":
        return list(RegressorKind)
    valid = {kind.value: kind for kind in RegressorKind}
    kinds = []
    for name in (p.strip().lower() for p in text.split(",")):
        if name not in valid:
            raise UsageError(f"unknown model '{name}'; valid kinds: all, {', '.join(valid)}")
        if valid[name] not in kinds:
            kinds.append(valid[name])
    return kinds

def parse_param_overrides(params: Sequence[tuple]) -> Dict[str, Dict[str, Any]]:
    overrides: Dict[str, Dict[str, Any]] = {}
    for kind, name, value in params:
        try:
            RegressorKind(kind)
        except ValueError:
            raise UsageError(f"--param: unknown model '{kind}'; valid kinds: {', '.join(k.value for k in RegressorKind)}")
        known = DEFAULT_HYPERPARAMETERS[RegressorKind(kind)]
        if name not in known:
            raise UsageError(
                f"--param: {kind} has no hyperparameter '{name}' "
                f"(known: {', '.join(sorted(known)) or 'none'})"
            )
        overrides.setdefault(kind, {})[name] = value
    return overrides

# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pathloss-lab",
        description="Seasonal mm-wave path-loss simulation and regression benchmark"
    )
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
                        help="Override the configured log level")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="Generate a seasonal channel dataset")
    sim.add_argument("--seasons", type=_season_list, help="Comma-separated seasons (default: all four)")
    sim.add_argument("--freqs", type=_float_list, help="Comma-separated carrier frequencies in GHz")
    sim.add_argument("--dist-min", type=float, help="Smallest T-R separation (m)")
    sim.add_argument("--dist-max", type=float, help="Largest T-R separation (m)")
    sim.add_argument("--dist-steps", type=int, help="Number of distances on the grid")
    sim.add_argument("--drops", type=int, help="Receiver drops per grid point")
    sim.add_argument("--min-paths", type=int, help="Fewest multipath components per drop")
    sim.add_argument("--max-paths", type=int, help="Most multipath components per drop")
    sim.add_argument("--seed", type=int, help="Master seed")
    sim.add_argument("--out", type=Path, help="Dataset CSV to write")
    sim.add_argument("--config", type=Path, help="Scenario YAML (default: bundled scenario)")
    sim.add_argument("--workers", type=int, help="Worker threads")
    sim.add_argument("--manifest", type=Path, help="Replay the run recorded in a simulate manifest")
    sim.set_defaults(handler=cmd_simulate)

    train = sub.add_parser("train", help="Fit and evaluate the regressors")
    train.add_argument("--data", type=Path, help="Dataset CSV")
    train.add_argument("--models", default="all", help="'all' or a comma-separated list of kinds")
    train.add_argument("--split", type=float, help="Training fraction (default 0.8)")
    train.add_argument("--seed", type=int, help="Seed for the split and the models")
    train.add_argument("--out", type=Path, help="Output directory")
    train.add_argument("--param", type=_param, action="append", default=[], metavar="KIND.NAME=VALUE",
                       help="Hyperparameter override, repeatable")
    train.add_argument("--include-received-power", action="store_true", default=None,
                       help="Keep the Received Power column as a feature")
    train.add_argument("--format", choices=["text", "csv"], default="text", help="Metrics format on stdout")
    train.add_argument("--manifest", type=Path, help="Replay the run recorded in a train manifest")
    train.set_defaults(handler=cmd_train)

    report = sub.add_parser("report", help="Render figures from a dataset and/or metrics file")
    report.add_argument("--data", type=Path, help="Dataset CSV")
    report.add_argument("--metrics", type=Path, help="metrics.csv written by train")
    report.add_argument("--out", type=Path, help="Output directory")
    report.add_argument("--seasons", type=_season_list, help="Restrict the line charts to these seasons")
    report.add_argument("--per-row", action="store_true", default=None,
                        help="Aggregate every multipath row instead of one row per drop")
    report.set_defaults(handler=cmd_report)

    pl = sub.add_parser("pathloss", help="Evaluate the close-in path loss model once")
    pl.add_argument("--freq", type=float, required=True, help="Carrier frequency (GHz)")
    pl.add_argument("--dist", type=float, required=True, help="T-R separation (m)")
    pl.add_argument("--n", type=float, default=3.2, help="Path loss exponent")
    pl.add_argument("--alpha", type=float, help="Total specific attenuation (dB/m)")
    pl.add_argument("--temperature", type=float, help="Air temperature (degC)")
    pl.add_argument("--humidity", type=float, help="Relative humidity (%%)")
    pl.add_argument("--pressure", type=float, help="Pressure (mbar)")
    pl.add_argument("--rain-rate", type=float, help="Rain rate (mm/hr)")
    pl.add_argument("--foliage", action="store_true", help="Add foliage attenuation")
    pl.add_argument("--shadow", type=float, default=0.0, help="Shadow fading draw (dB)")
    pl.add_argument("--config", type=Path, help="Scenario YAML holding the attenuation coefficients")
    pl.add_argument("--format", choices=["text", "json"], default="text")
    pl.set_defaults(handler=cmd_pathloss)

    coeffs = sub.add_parser("coefficients", help="Print ITU-R P.838-3 rain coefficients as scenario YAML")
    coeffs.add_argument("--freqs", type=_float_list, default=list(CARRIER_FREQUENCIES_GHZ))
    coeffs.add_argument("--polarization", choices=[p.value for p in Polarization],
                        default=Polarization.HORIZONTAL.value)
    coeffs.set_defaults(handler=cmd_coefficients)

    return parser

# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _replay_conflicts(args: argparse.Namespace, names: Sequence[str]) -> List[str]:
    return [f"--{name.replace('_', '-')}" for name in names if getattr(args, name) not in (None, [], False)]

def cmd_simulate(args: argparse.Namespace, argv: Sequence[str], out: TextIO) -> int:
    orchestrator = get_orchestrator()
    override_flags = ("seasons", "freqs", "dist_min", "dist_max", "dist_steps", "drops",
                      "min_paths", "max_paths", "seed", "config")

    if args.manifest is not None:
        conflicts = _replay_conflicts(args, override_flags)
        if conflicts:
            raise UsageError(f"--manifest cannot be combined with {', '.join(conflicts)}")
        manifest = read_manifest(args.manifest)
        scenario = orchestrator.scenario_from_manifest(manifest)
        out_path = args.out or Path(manifest.outputs[0])
        config_path = Path(manifest.inputs["config"]) if "config" in manifest.inputs else None
        workers = args.workers or manifest.resolved_config.get("n_workers")
    else:
        if args.freqs:
            unknown = [f for f in args.freqs
                       if not any(math.isclose(f, c, abs_tol=1e-9) for c in CARRIER_FREQUENCIES_GHZ)]
            if unknown:
                raise UsageError(
                    f"--freqs: {', '.join(f'{f:g}' for f in unknown)} GHz not among the carriers "
                    f"{', '.join(f'{c:g}' for c in CARRIER_FREQUENCIES_GHZ)}"
                )
        scenario = load_scenario(args.config)
        scenario = apply_overrides(
            scenario,
            sweep={
                "seasons": tuple(args.seasons) if args.seasons else None,
                "frequencies": tuple(args.freqs) if args.freqs else None,
                "dist_min": args.dist_min,
                "dist_max": args.dist_max,
                "dist_steps": args.dist_steps,
                "drops_per_point": args.drops,
                "seed": args.seed,
            },
            multipath={"n_paths_min": args.min_paths, "n_paths_max": args.max_paths}
        )
        out_path = args.out
        config_path = args.config
        workers = args.workers

    if workers is not None and workers < 1:
        raise UsageError("--workers must be >= 1")
    if out_path is None:
        output_dir = get_config().paths.output_dir
        output_dir.mkdir(parents=True, exist_ok=True)
        out_path = output_dir / "dataset.csv"

    csv_path, manifest_path, rows = orchestrator.simulate(scenario, out_path, workers, config_path, argv)
    print(f"Wrote {rows} rows to {csv_path}", file=out)
    print(f"Manifest: {manifest_path}", file=out)
    return EXIT_OK

def cmd_train(args: argparse.Namespace, argv: Sequence[str], out: TextIO) -> int:
    orchestrator = get_orchestrator()

    if args.manifest is not None:
        conflicts = _replay_conflicts(args, ("data", "split", "seed", "param", "include_received_power"))
        if args.models != "all":
            conflicts.append("--models")
        if conflicts:
            raise UsageError(f"--manifest cannot be combined with {', '.join(conflicts)}")
        options = orchestrator.train_options_from_manifest(read_manifest(args.manifest))
    else:
        if args.data is None:
            raise UsageError("train needs --data (or --manifest)")
        if args.split is not None and not 0.0 < args.split < 1.0:
            raise UsageError("--split must lie strictly between 0 and 1")
        kinds = parse_model_list(args.models)
        overrides = parse_param_overrides(args.param)
        try:
            default_specs(kinds, seed=args.seed, overrides=overrides)
        except ValidationError as e:
            raise UsageError(f"--param: {e.message}") from e
        options = {
            "data_path": args.data,
            "kinds": kinds,
            "train_fraction": args.split,
            "seed": args.seed,
            "overrides": overrides,
            "include_received_power": args.include_received_power,
        }

    out_dir = args.out or get_config().paths.output_dir / "train"
    result, written = orchestrator.train(out_dir=out_dir, argv=argv, **options)

    if args.format == "csv":
        metrics_frame(result).to_csv(out, index=False, lineterminator="\n")
    else:
        out.write(format_metrics_text(result))
        print(f"Artifacts written to {out_dir} ({len(written)} files)", file=out)
    return EXIT_OK

def cmd_report(args: argparse.Namespace, argv: Sequence[str], out: TextIO) -> int:
    if args.data is None and args.metrics is None:
        raise UsageError("report needs --data and/or --metrics")
    out_dir = args.out or get_config().paths.output_dir / "report"
    written = get_orchestrator().report(out_dir, args.data, args.metrics, args.seasons, args.per_row, argv)
    for path in written:
        print(path, file=out)
    return EXIT_OK

def cmd_pathloss(args: argparse.Namespace, argv: Sequence[str], out: TextIO) -> int:
    given = [name for name in WEATHER_FLAGS if getattr(args, name) is not None]
    if given and args.alpha is not None:
        raise UsageError("--alpha cannot be combined with weather flags")
    weather = None
    if given:
        missing = [f"--{name.replace('_', '-')}" for name in WEATHER_FLAGS if name not in given]
        if missing:
            raise UsageError(f"weather flags must be given together; missing {', '.join(missing)}")
        try:
            weather = AtmosphericState(**{name: getattr(args, name) for name in WEATHER_FLAGS})
        except PydanticValidationError as e:
            first = e.errors()[0]
            raise UsageError(f"--{str(first['loc'][0]).replace('_', '-')}: {first['msg']}") from e
    elif args.config is not None:
        raise UsageError("--config only applies with weather flags")

    scenario = None
    if weather is not None:
        scenario = load_scenario(args.config)
        try:
            check_state_bounds(weather, scenario)
        except ValidationError as e:
            raise UsageError(f"--{e.field.replace('_', '-')}: {e.message}") from e
    breakdown, attenuation = get_orchestrator().evaluate_path_loss(
        args.freq, args.dist, args.n,
        alpha=args.alpha, weather=weather, foliage=args.foliage, shadow=args.shadow, scenario=scenario
    )

    if args.format == "json":
        payload = {"frequency_ghz": args.freq, "distance_m": args.dist, "path_loss_exponent": args.n,
                   **breakdown.model_dump()}
        if attenuation is not None:
            payload["attenuation"] = attenuation.model_dump()
        print(json.dumps(payload, indent=2), file=out)
        return EXIT_OK

    rows = [
        ("FSPL (1 m)", breakdown.fspl),
        ("Distance term", breakdown.distance_term),
        ("Atmospheric term", breakdown.atmospheric_term),
        ("Shadow", breakdown.shadow),
        ("Path loss", breakdown.total),
    ]
    for label, value in rows:
        print(f"{label:<18}{value:>12.3f} dB", file=out)
    if attenuation is not None:
        print(
            f"{'alpha':<18}{attenuation.total_alpha:>12.6f} dB/m "
            f"(gas {attenuation.gas:.4f} dB/km, rain {attenuation.rain:.4f} dB/km, "
            f"foliage {attenuation.foliage:.2f} dB/m)",
            file=out
        )
    return EXIT_OK

def cmd_coefficients(args: argparse.Namespace, argv: Sequence[str], out: TextIO) -> int:
    out.write(get_orchestrator().coefficients_yaml(args.freqs, Polarization(args.polarization)))
    return EXIT_OK

# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def main(argv: Optional[Sequence[str]] = None, out: Optional[TextIO] = None) -> int:
    """Run one command and return its exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    out = out or sys.stdout
    parser = build_parser()

    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 0 for --help and 2 for bad flags
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    if args.log_level:
        get_config().logging.level = args.log_level
        setup_logging(force=True)

    logger.debug(f"Running {args.command}")
    try:
        return args.handler(args, argv, out)
    except UsageError as e:
        print(f"usage error: {e.message}", file=sys.stderr)
        return EXIT_USAGE
    except PathLossLabException as e:
        details = handle_error(e, context={"command": args.command})
        print(f"error: {details.message}", file=sys.stderr)
        for suggestion in details.suggestions:
            print(f"  hint: {suggestion}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
