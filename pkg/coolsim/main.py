"""Command-line entry point: ``coolsim <command> [options]``.

Commands
--------
model       closed-form temperature drop for one exposure
exp1        sensor transient near the outlet (CSV / HTML)
exp2        phantom comparison against the bench measurements (CSV / SVG / HTML)
psy-run     simulate a velocity-discrimination session (trial CSV)
psy-fit     fit a cumulative Gaussian to a trial CSV (fit JSON)
calibrate   find the observer noise for a target JND (observer JSON)

Exit codes: 0 ok, 1 output could not be written, 2 usage or invalid input,
3 data too degenerate to fit.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pydantic import ValidationError

from . import __version__
from .config import load_scenario, resolve_seed, with_overrides
from .cooling_model import PRECISIONS, PRESET_NAMES, celsius_to_kelvin, kelvin_to_celsius
from .errors import CoolsimError, DegenerateDataError
from .experiment_processers import transient_summary
from .pipeline import (
    atomic_write_text,
    calibrate_pipeline,
    dump_json,
    exp1_pipeline,
    exp2_pipeline,
    format_comparison_csv,
    format_trials_csv,
    model_summary,
    psy_fit_pipeline,
    psy_run_pipeline,
)
from .psychophys_processers import summarize_jnds

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_IO = 1
EXIT_USAGE = 2
EXIT_DEGENERATE = 3


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario JSON file; flags override it")
    common.add_argument("--seed", type=int, help="random seed (falls back to COOLSIM_SEED)")
    common.add_argument(
        "--unit",
        choices=["c", "k"],
        default="k",
        help="unit of temperature flags and printed temperatures (default: k)",
    )
    common.add_argument("-v", "--verbose", action="count", default=0)
    common.add_argument("--csv", dest="csv", help="CSV output path")
    common.add_argument("--svg", dest="svg", help="SVG output path")
    common.add_argument("--html", dest="html", help="HTML report path")
    common.add_argument("--json", dest="json_path", help="JSON output path")
    return common


def _velocity_list(text: str) -> List[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("at least one velocity is required")
    return values


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(
        prog="coolsim",
        description="Cold-air thermal display simulator",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command", required=True)

    p = sub.add_parser("model", parents=[common], help="temperature drop for one exposure")
    p.set_defaults(subparser=p)
    p.add_argument("--preset", choices=PRESET_NAMES, help="body preset (default: silicon)")
    p.add_argument("--u", type=float, required=True, help="flow velocity (m/s)")
    p.add_argument("--t", type=float, required=True, help="exposure time (s)")
    p.add_argument("--precision", choices=PRECISIONS, default="published")
    p.add_argument("--body-temperature", type=float, help="initial body temperature")
    p.add_argument("--air-temperature", type=float, help="cold air temperature")

    p = sub.add_parser("exp1", parents=[common], help="sensor transient near the outlet")
    p.set_defaults(subparser=p)
    p.add_argument("--velocities", type=_velocity_list, help="e.g. 0,0.5,1.0")
    p.add_argument("--duration", type=float, help="simulated time (s)")
    p.add_argument("--room-temperature", type=float)
    p.add_argument("--cold-temperature", type=float)

    p = sub.add_parser("exp2", parents=[common], help="phantom comparison")
    p.set_defaults(subparser=p)
    p.add_argument("--preset", choices=PRESET_NAMES)
    p.add_argument("--velocities", type=_velocity_list, help="e.g. 1.0,2.0,3.0")
    p.add_argument("--duration", type=float, help="exposure time (s)")
    p.add_argument("--precision", choices=PRECISIONS)
    p.add_argument("--body-temperature", type=float)

    p = sub.add_parser("psy-run", parents=[common], help="simulate discrimination sessions")
    p.set_defaults(subparser=p)
    p.add_argument("--sessions", type=int, help="number of sessions (default: 1)")
    p.add_argument("--workers", type=int, help="threads for replicated sessions")
    p.add_argument("--observer", dest="observer_path", help="observer JSON from calibrate")
    p.add_argument("--noise-sd", type=float)
    p.add_argument("--target-jnd", type=float)
    p.add_argument("--response", choices=["skin", "linear"])
    p.add_argument("--standard", type=float)
    p.add_argument("--trials-per-comparison", type=int)

    p = sub.add_parser("psy-fit", parents=[common], help="fit a trial CSV")
    p.set_defaults(subparser=p)
    p.add_argument("trials", help="trial CSV (comparison_mps, response_comparison_colder, ...)")

    p = sub.add_parser("calibrate", parents=[common], help="calibrate observer noise")
    p.set_defaults(subparser=p)
    p.add_argument("--target-jnd", type=float)
    p.add_argument("--response", choices=["skin", "linear"])
    p.add_argument("--response-duration", type=float)
    p.add_argument("--linear-slope", type=float)
    p.add_argument("--standard", type=float)
    return parser


def _to_kelvin(value: Optional[float], unit: str) -> Optional[float]:
    if value is None or unit == "k":
        return value
    return celsius_to_kelvin(value)


def _to_celsius(value: Optional[float], unit: str) -> Optional[float]:
    if value is None or unit == "c":
        return value
    return kelvin_to_celsius(value)


def _format_temperature(kelvin: float, unit: str) -> str:
    if unit == "c":
        value = kelvin_to_celsius(kelvin)
        return f"{value:.6f} °C ({value:.2f} °C)"
    return f"{kelvin:.6f} K ({kelvin:.2f} K)"


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    get = lambda name: getattr(args, name, None)  # noqa: E731
    unit = args.unit
    overrides: Dict[str, Any] = {
        "output.csv": get("csv"),
        "output.svg": get("svg"),
        "output.html": get("html"),
        "output.json_path": get("json_path"),
    }
    if args.command == "model":
        overrides.update(
            {
                "body.preset": get("preset"),
                "body.temperature": _to_kelvin(get("body_temperature"), unit),
                "air.temperature": _to_kelvin(get("air_temperature"), unit),
            }
        )
    elif args.command == "exp1":
        overrides.update(
            {
                "transient.velocities": get("velocities"),
                "transient.duration": get("duration"),
                "transient.room_temperature_c": _to_celsius(get("room_temperature"), unit),
                "transient.cold_temperature_c": _to_celsius(get("cold_temperature"), unit),
            }
        )
    elif args.command == "exp2":
        overrides.update(
            {
                "phantom.preset": get("preset"),
                "phantom.velocities": get("velocities"),
                "phantom.duration": get("duration"),
                "phantom.precision": get("precision"),
                "body.temperature": _to_kelvin(get("body_temperature"), unit),
            }
        )
    elif args.command == "psy-run":
        overrides.update(
            {
                "sessions": get("sessions"),
                "workers": get("workers"),
                "observer.observer_path": get("observer_path"),
                "observer.noise_sd": get("noise_sd"),
                "observer.target_jnd": get("target_jnd"),
                "observer.response": get("response"),
                "schedule.standard": get("standard"),
                "schedule.trials_per_comparison": get("trials_per_comparison"),
            }
        )
    elif args.command == "calibrate":
        overrides.update(
            {
                "observer.target_jnd": get("target_jnd"),
                "observer.response": get("response"),
                "observer.response_duration": get("response_duration"),
                "observer.linear_slope": get("linear_slope"),
                "schedule.standard": get("standard"),
            }
        )
    return overrides


def _validate_flags(args: argparse.Namespace) -> None:
    sub = args.subparser
    checks = {
        "u": (">= 0", lambda v: v >= 0),
        "t": (">= 0", lambda v: v >= 0),
        "duration": ("> 0", lambda v: v > 0),
        "sessions": ("> 0", lambda v: v > 0),
        "workers": ("> 0", lambda v: v > 0),
        "noise_sd": ("> 0", lambda v: v > 0),
        "target_jnd": ("> 0", lambda v: v > 0),
        "trials_per_comparison": ("> 0", lambda v: v > 0),
    }
    for name, (rule, ok) in checks.items():
        value = getattr(args, name, None)
        if value is not None and not ok(value):
            sub.error(f"argument --{name.replace('_', '-')}: must be {rule}, got {value}")
    for value in getattr(args, "velocities", None) or []:
        if value < 0:
            sub.error(f"argument --velocities: must be >= 0, got {value}")
    for name, flag in (("config", "--config"), ("observer_path", "--observer"), ("trials", "trials")):
        value = getattr(args, name, None)
        if value is not None and not Path(value).is_file():
            sub.error(f"argument {flag}: no such file: {value}")


def _run(args: argparse.Namespace) -> int:
    cfg = with_overrides(load_scenario(args.config), _overrides(args))
    if cfg.mode is not None and cfg.mode != args.command:
        logger.warning("Scenario mode %r ignored by command %r", cfg.mode, args.command)
    unit = args.unit

    if args.command == "model":
        summary = model_summary(cfg, args.u, args.t, args.precision)
        print(f"preset        {summary['preset']} ({summary['precision']} precision)")
        print(f"k             {summary['k']:.9g} 1/m (published {summary['k_published']:.3f})")
        print(f"T_s           {_format_temperature(summary['body_temperature_K'], unit)}")
        print(f"T_a           {_format_temperature(summary['air_temperature_K'], unit)}")
        print(f"T_f           {_format_temperature(summary['final_temperature_K'], unit)}")
        drop = summary["delta_T_K"]
        print(f"delta_T_s     {drop:.6f} K ({drop:.2f} K)")
        if cfg.output.json_path:
            atomic_write_text(cfg.output.json_path, dump_json(summary))
        return EXIT_OK

    if args.command == "exp1":
        series = exp1_pipeline(cfg)
        print(transient_summary(series).to_string(index=False, float_format=lambda x: f"{x:.4f}"))
        return EXIT_OK

    if args.command == "exp2":
        report = exp2_pipeline(cfg)
        if not cfg.output.csv:
            sys.stdout.write(format_comparison_csv(report))
        return EXIT_OK

    if args.command == "psy-run":
        seed = resolve_seed(args.seed, cfg)
        result = psy_run_pipeline(cfg, seed)
        if cfg.sessions == 1:
            if not cfg.output.csv:
                sys.stdout.write(format_trials_csv(result))
        elif not cfg.output.json_path:
            sys.stdout.write(dump_json(summarize_jnds(result["jnd"])))
        return EXIT_OK

    if args.command == "psy-fit":
        fit = psy_fit_pipeline(cfg, args.trials)
        if not cfg.output.json_path:
            sys.stdout.write(dump_json(fit.to_dict()))
        return EXIT_OK

    if args.command == "calibrate":
        calibration = calibrate_pipeline(cfg)
        print(calibration.derivation)
        print(f"noise_sd      {calibration.observer.noise_sd:.9g}")
        return EXIT_OK

    raise AssertionError(f"unhandled command {args.command!r}")  # pragma: no cover


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _validate_flags(args)

    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)

    try:
        return _run(args)
    except DegenerateDataError as exc:
        print(f"coolsim {args.command}: cannot fit: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ValidationError as exc:
        print(f"coolsim {args.command}: invalid configuration:\n{exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CoolsimError, ValueError) as exc:
        print(f"coolsim {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"coolsim {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
