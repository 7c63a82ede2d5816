"""End-to-end runs behind each command.

Each pipeline computes its full result before touching the filesystem and
then writes its outputs together through :func:`write_outputs`, so a failed run
never leaves partial files behind.
"""

from __future__ import annotations

import json
import logging
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Tuple, Union

import pandas as pd

from .config import ScenarioConfig, build_model_inputs
from .cooling_model import (
    Precision,
    cooling_coefficient,
    equilibrium_temperature,
    predict_drop,
    published_coefficient,
)
from .device_model import ValveCalibration
from .experiment_processers import (
    comparison_is_consistent,
    run_phantom_experiment,
    simulate_sensor_transient,
    transient_summary,
)
from .psychophys_processers import (
    LinearResponse,
    ObserverCalibration,
    ObserverModel,
    PsychometricFit,
    SkinCoolingResponse,
    TrialRecord,
    build_schedule,
    calibrate_observer,
    fit_psychometric,
    read_trials_csv,
    replicate_sessions,
    simulate_session,
    summarize_jnds,
    trials_to_frame,
)
from .viewers import (
    comparison_svg,
    gen_html_report,
    plot_calibration,
    plot_comparison,
    plot_jnd_box,
    plot_psychometric,
    plot_transient,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _stage(target: Path, text: str) -> str:
    directory = target.parent if str(target.parent) else Path(".")
    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except BaseException:
        os.unlink(tmp_name)
        raise
    return tmp_name


def write_outputs(outputs: Mapping[PathLike, str]) -> List[Path]:
    """Write several files so that either all of them appear or none does.

    Every text is first written to a temp file next to its target; the temp
    files are renamed into place only once all of them were written.
    """
    staged: List[Tuple[str, Path]] = []
    try:
        for path, text in outputs.items():
            target = Path(path)
            staged.append((_stage(target, text), target))
        for tmp_name, target in staged:
            os.replace(tmp_name, target)
            logger.info("Wrote %s", target)
    except BaseException:
        for tmp_name, _ in staged:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)
        raise
    return [target for _, target in staged]


def atomic_write_text(path: PathLike, text: str) -> Path:
    """Write ``text`` to a sibling temp file, then rename it over ``path``."""
    return write_outputs({path: text})[0]


def _short(value: float, decimals: int) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return repr(round(float(value), decimals))


def format_comparison_csv(report: pd.DataFrame) -> str:
    """Comparison report as CSV, K values rounded to 3 decimals.

    >>> import pandas as pd
    >>> frame = pd.DataFrame([[3.0, 1.60622, 1.15, 0.45622]],
    ...     columns=["velocity", "theoretical_K", "measured_K", "abs_error_K"])
    >>> format_comparison_csv(frame).splitlines()[1]
    '3.0,1.606,1.15,0.456'
    """
    lines = ["velocity,theoretical_K,measured_K,abs_error_K"]
    for row in report.itertuples(index=False):
        lines.append(
            ",".join(
                [
                    _short(row.velocity, 6),
                    _short(row.theoretical_K, 3),
                    _short(row.measured_K, 3),
                    _short(row.abs_error_K, 3),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def format_series_csv(series: pd.DataFrame) -> str:
    return series.to_csv(index=False, float_format="%.6f", lineterminator="\n")


def format_trials_csv(records: Iterable[TrialRecord]) -> str:
    frame = trials_to_frame(records)
    for column in ("comparison_first", "response_comparison_colder"):
        frame[column] = frame[column].map({True: "true", False: "false"})
    for column in ("comparison_mps", "standard_mps"):
        frame[column] = frame[column].map(lambda v: repr(float(v)))
    return frame.to_csv(index=False, lineterminator="\n")


def dump_json(payload: Any) -> str:
    return json.dumps(payload, indent=2) + "\n"


# --- model ---------------------------------------------------------------


def model_summary(
    cfg: ScenarioConfig, u: float, t: float, precision: Precision = "published"
) -> Dict[str, float]:
    """Coefficient, equilibrium temperature and drop for one exposure."""
    air, body, geom, gain_decimals = build_model_inputs(cfg)
    k = cooling_coefficient(air, geom, body)
    drop = float(
        predict_drop(k, u, t, body.temperature, air.temperature, precision, gain_decimals)
    )
    if precision == "full":
        final = float(equilibrium_temperature(k, u, t, body.temperature, air.temperature))
    else:
        final = body.temperature - drop
    return {
        "preset": cfg.body.preset,
        "precision": precision,
        "u": u,
        "t": t,
        "k": k.k,
        "k_published": published_coefficient(k).k,
        "body_temperature_K": body.temperature,
        "air_temperature_K": air.temperature,
        "final_temperature_K": final,
        "delta_T_K": drop,
    }


# --- experiments -----------------------------------------------------------


def exp1_pipeline(cfg: ScenarioConfig) -> pd.DataFrame:
    """Simulate the sensor transient and write the configured outputs."""
    cold = None
    if cfg.vortex.enabled:
        air, _, _, _ = build_model_inputs(cfg)
        cold = air.temperature
    series = simulate_sensor_transient(cfg.transient.to_scenario(cold_temperature=cold))
    outputs = {}
    if cfg.output.csv:
        outputs[cfg.output.csv] = format_series_csv(series)
    if cfg.output.html:
        outputs[cfg.output.html] = gen_html_report(
            "Sensor transient",
            [
                ("Sensor transient", plot_transient(series), None),
                ("Per-velocity summary", None, transient_summary(series)),
            ],
        )
    write_outputs(outputs)
    return series


def exp2_pipeline(cfg: ScenarioConfig) -> pd.DataFrame:
    """Compare the model with the phantom measurements and write outputs."""
    phantom = cfg.phantom
    calibration = cfg.valve.load()
    report = run_phantom_experiment(
        phantom.preset,
        phantom.velocities,
        phantom.duration,
        precision=phantom.precision,
        body_temperature=cfg.body.temperature,
        calibration=calibration,
    )
    for problem in comparison_is_consistent(report):
        logger.warning("Comparison report: %s", problem)
    outputs = {}
    if cfg.output.csv:
        outputs[cfg.output.csv] = format_comparison_csv(report)
    if cfg.output.svg:
        outputs[cfg.output.svg] = comparison_svg(report)
    if cfg.output.html:
        outputs[cfg.output.html] = gen_html_report(
            "Phantom comparison",
            [
                (f"Phantom comparison ({phantom.preset})", plot_comparison(report), report),
                ("Valve calibration", plot_calibration(calibration), _breakpoint_table(calibration)),
            ],
        )
    write_outputs(outputs)
    return report


def _breakpoint_table(cal: ValveCalibration) -> pd.DataFrame:
    return pd.DataFrame(list(cal.breakpoints), columns=["duty_ratio", "velocity_mps"])


# --- psychophysics ---------------------------------------------------------


def resolve_observer(cfg: ScenarioConfig) -> ObserverModel:
    """Observer from a saved file, an explicit noise level or calibration."""
    obs = cfg.observer
    if obs.observer_path:
        data = json.loads(Path(obs.observer_path).read_text(encoding="utf-8"))
        return ObserverModel.from_dict(data)
    response = _response_map(cfg)
    if obs.noise_sd is not None:
        return ObserverModel(noise_sd=obs.noise_sd, response_map=response, domain=obs.domain)
    return calibrate_pipeline(cfg, write=False).observer


def _response_map(cfg: ScenarioConfig):
    obs = cfg.observer
    if obs.response == "linear":
        return LinearResponse(slope=obs.linear_slope)
    duration = obs.response_duration or cfg.schedule.stimulus_duration
    return SkinCoolingResponse(duration=duration)


def psy_run_pipeline(cfg: ScenarioConfig, seed: int) -> Union[List[TrialRecord], pd.DataFrame]:
    """Simulate one session (trial CSV) or many (per-session fits + summary)."""
    observer = resolve_observer(cfg)
    max_velocity = cfg.valve.load().max_velocity
    schedule = cfg.schedule.to_schedule(seed, max_velocity)

    if cfg.sessions == 1:
        _, trials = build_schedule(schedule)
        records = simulate_session(observer, trials, seed)
        if cfg.output.csv:
            atomic_write_text(cfg.output.csv, format_trials_csv(records))
        return records

    fits = replicate_sessions(observer, schedule, cfg.sessions, base_seed=seed, workers=cfg.workers)
    summary = summarize_jnds(fits["jnd"])
    summary["failed_sessions"] = int(fits["jnd"].isna().sum())
    outputs = {}
    if cfg.output.csv:
        outputs[cfg.output.csv] = fits.to_csv(index=False, float_format="%.10g", lineterminator="\n")
    if cfg.output.json_path:
        outputs[cfg.output.json_path] = dump_json(summary)
    if cfg.output.html:
        jnds = fits["jnd"].dropna()
        box = plot_jnd_box(jnds, target=cfg.observer.target_jnd) if len(jnds) else None
        outputs[cfg.output.html] = gen_html_report(
            "Velocity discrimination", [("Session JNDs", box, pd.DataFrame([summary]))]
        )
    write_outputs(outputs)
    return fits


def psy_fit_pipeline(cfg: ScenarioConfig, trials_path: PathLike) -> PsychometricFit:
    """Fit a trial CSV and write the fit JSON and optional report."""
    records = read_trials_csv(trials_path)
    fit = fit_psychometric(records)
    outputs = {}
    if cfg.output.json_path:
        outputs[cfg.output.json_path] = dump_json(fit.to_dict())
    if cfg.output.html:
        levels = pd.DataFrame(fit.to_dict()["levels"])
        outputs[cfg.output.html] = gen_html_report(
            "Velocity discrimination", [("Psychometric fit", plot_psychometric(fit), levels)]
        )
    write_outputs(outputs)
    return fit


def calibrate_pipeline(cfg: ScenarioConfig, *, write: bool = True) -> ObserverCalibration:
    """Calibrate the observer noise to the configured JND."""
    obs = cfg.observer
    calibration = calibrate_observer(
        obs.target_jnd,
        standard=cfg.schedule.standard,
        response_map=_response_map(cfg),
        domain=obs.domain,
    )
    if write and cfg.output.json_path:
        atomic_write_text(cfg.output.json_path, dump_json(calibration.to_dict()))
    return calibration

