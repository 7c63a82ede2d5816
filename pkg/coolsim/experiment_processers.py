"""Bench experiments as deterministic simulations.

Two experiments are reproduced here:

* the sensor transient, where a temperature sensor sits a few millimetres
  from the outlet and reads a mix of cold jet and room air, and
* the phantom experiment, where a silicon sheet is cooled for 3 s and its
  measured drop is compared with the cooling model.

The sensor transient has no published dynamics, so it uses a first-order
mixing model: ``dT/dt = -lambda(u) * (T - T_mix(u))`` with
``lambda(u) = mixing_gain * u`` and ``T_mix`` sliding from room temperature
towards the jet temperature as ``u`` grows.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .cooling_model import (
    PUBLISHED_GAIN_DECIMALS,
    Precision,
    celsius_to_kelvin,
    cooling_coefficient,
    predict_drop,
    preset,
)
from .device_model import ValveCalibration, load_calibration
from .errors import InvalidInputError

logger = logging.getLogger(__name__)

SERIES_COLUMNS = ["velocity", "t", "temperature_K"]
COMPARISON_COLUMNS = ["velocity", "theoretical_K", "measured_K", "abs_error_K"]

# Velocities used for the sensor transient (m/s).
SENSOR_VELOCITIES: Tuple[float, ...] = (0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5)


@dataclass(frozen=True)
class SensorTransientScenario:
    """Settings for :func:`simulate_sensor_transient`.

    ``mixing_gain`` (1/m) times the velocity gives the relaxation rate;
    ``blend_velocity`` is the velocity at which the mixed temperature sits
    halfway between room and jet temperature.
    """

    velocities: Tuple[float, ...] = SENSOR_VELOCITIES
    duration: float = 3.0
    time_step: float = 1e-3
    room_temperature: float = celsius_to_kelvin(22.0)
    cold_temperature: float = celsius_to_kelvin(-16.0)
    standoff: float = 5e-3
    mixing_gain: float = 1.5
    blend_velocity: float = 2.0
    record_every: int = 10

    def __post_init__(self) -> None:
        object.__setattr__(self, "velocities", tuple(float(v) for v in self.velocities))
        if not self.velocities:
            raise InvalidInputError("velocities must not be empty")
        if any(v < 0 or not math.isfinite(v) for v in self.velocities):
            raise InvalidInputError("velocities must be non-negative")
        if self.duration <= 0:
            raise InvalidInputError(f"duration must be > 0, got {self.duration}")
        if self.time_step <= 0:
            raise InvalidInputError(f"time_step must be > 0, got {self.time_step}")
        if self.time_step >= self.duration:
            raise InvalidInputError(
                f"time_step ({self.time_step}) must be smaller than duration ({self.duration})"
            )
        if self.mixing_gain <= 0 or self.blend_velocity <= 0:
            raise InvalidInputError("mixing_gain and blend_velocity must be > 0")
        if self.standoff < 0:
            raise InvalidInputError("standoff must be >= 0")
        if self.record_every < 1:
            raise InvalidInputError("record_every must be >= 1")
        worst = self.mixing_gain * max(self.velocities) * self.time_step
        if worst >= 1:
            raise InvalidInputError(
                f"unstable step: mixing_gain*u*time_step = {worst:.3f} must be < 1"
            )

    def relaxation_rate(self, u):
        return self.mixing_gain * np.asarray(u, dtype=float)

    def mixed_temperature(self, u):
        u = np.asarray(u, dtype=float)
        share = u / (u + self.blend_velocity)
        return self.room_temperature - (self.room_temperature - self.cold_temperature) * share


@dataclass(frozen=True)
class ReferenceMeasurement:
    """A measured phantom temperature drop."""

    velocity: float
    duration: float
    measured_drop: float
    start_temperature: float
    end_temperature: float

    def __post_init__(self) -> None:
        if self.measured_drop < 0:
            raise InvalidInputError("measured_drop must be >= 0")


# Silicon sheet at 5 mm, 3 s exposure, spatial mean read off the thermal
# camera before and after. Start 21.30 C; ends 20.89, 20.51 and 20.15 C.
PHANTOM_REFERENCE: Tuple[ReferenceMeasurement, ...] = (
    ReferenceMeasurement(1.0, 3.0, 0.41, 294.45, 294.04),
    ReferenceMeasurement(2.0, 3.0, 0.79, 294.45, 293.66),
    ReferenceMeasurement(3.0, 3.0, 1.15, 294.45, 293.30),
)


def reference_measurements() -> pd.DataFrame:
    """Return the embedded phantom measurements as a DataFrame."""
    return pd.DataFrame(
        [
            {
                "velocity": m.velocity,
                "duration": m.duration,
                "start_K": m.start_temperature,
                "end_K": m.end_temperature,
                "measured_K": m.measured_drop,
            }
            for m in PHANTOM_REFERENCE
        ]
    )


def simulate_sensor_transient(scn: SensorTransientScenario) -> pd.DataFrame:
    """Integrate the mixing model for every velocity in the scenario.

    Returns
    -------
    pd.DataFrame
        Long-format series with columns ``velocity``, ``t`` and
        ``temperature_K``, sampled every ``record_every`` steps (the final
        time is always included). Rows are ordered by velocity, then time.
    """
    velocities = np.array(scn.velocities)
    rate = scn.relaxation_rate(velocities)
    target = scn.mixed_temperature(velocities)
    n_steps = int(math.floor(scn.duration / scn.time_step + 1e-9))

    temps = np.full(velocities.shape, scn.room_temperature)
    times = [0.0]
    samples = [temps.copy()]
    for step in range(1, n_steps + 1):
        temps = temps - rate * scn.time_step * (temps - target)
        if step % scn.record_every == 0 or step == n_steps:
            times.append(step * scn.time_step)
            samples.append(temps.copy())

    grid = np.vstack(samples)  # (n_samples, n_velocities)
    frame = pd.DataFrame(
        {
            "velocity": np.repeat(velocities, len(times)),
            "t": np.tile(np.array(times), len(velocities)),
            "temperature_K": grid.T.reshape(-1),
        },
        columns=SERIES_COLUMNS,
    ).sort_values(["velocity", "t"], kind="mergesort", ignore_index=True)
    logger.info(
        "Sensor transient: %d velocities, %d steps of %.4g s",
        len(velocities),
        n_steps,
        scn.time_step,
    )
    return frame


def transient_summary(series: pd.DataFrame) -> pd.DataFrame:
    """Per-velocity final temperature, total drop and 63 % response time."""
    rows = []
    for velocity, group in series.groupby("velocity", sort=True):
        group = group.sort_values("t")
        start = group["temperature_K"].iloc[0]
        final = group["temperature_K"].iloc[-1]
        drop = start - final
        if drop > 0:
            reached = group[start - group["temperature_K"] >= (1 - math.exp(-1)) * drop]
            tau = float(reached["t"].iloc[0])
        else:
            tau = np.nan
        rows.append(
            {
                "velocity": velocity,
                "final_K": final,
                "drop_K": drop,
                "time_constant_s": tau,
            }
        )
    return pd.DataFrame(rows, columns=["velocity", "final_K", "drop_K", "time_constant_s"])


def _find_reference(velocity: float, duration: float) -> Optional[ReferenceMeasurement]:
    for ref in PHANTOM_REFERENCE:
        if math.isclose(ref.velocity, velocity) and math.isclose(ref.duration, duration):
            return ref
    return None


def run_phantom_experiment(
    body_preset: str = "silicon",
    velocities: Iterable[float] = (1.0, 2.0, 3.0),
    duration: float = 3.0,
    *,
    precision: Precision = "published",
    body_temperature: Optional[float] = None,
    calibration: Optional[ValveCalibration] = None,
) -> pd.DataFrame:
    """Compare the model's drop with the embedded phantom measurements.

    Parameters
    ----------
    body_preset : str
        ``"silicon"`` or ``"skin"``.
    velocities : iterable of float
        Flow velocities in m/s; must lie within the valve calibration.
    duration : float
        Exposure time in s.
    precision : {"published", "full"}
        ``"published"`` evaluates the closed form with rounded coefficients
        as printed; ``"full"`` uses the unrounded coefficient.
    body_temperature : float, optional
        Initial patch temperature in K; defaults to the preset's.
    calibration : ValveCalibration, optional
        Used to check the velocity range; the packaged default otherwise.

    Returns
    -------
    pd.DataFrame
        Columns ``velocity``, ``theoretical_K``, ``measured_K`` and
        ``abs_error_K``. Velocities with no measurement keep NaN in the last
        two columns.
    """
    if duration <= 0:
        raise InvalidInputError(f"duration must be > 0, got {duration}")
    velocities = [float(v) for v in velocities]
    if not velocities:
        raise InvalidInputError("velocities must not be empty")
    cal = calibration if calibration is not None else load_calibration()
    for v in velocities:
        if v < 0 or v > cal.max_velocity:
            raise InvalidInputError(
                f"velocity {v} m/s outside calibrated range 0-{cal.max_velocity} m/s"
            )

    air, body, geom = preset(body_preset)
    t_s = body.temperature if body_temperature is None else body_temperature
    k = cooling_coefficient(air, geom, body)
    gain_decimals = PUBLISHED_GAIN_DECIMALS.get(body_preset.strip().lower())

    rows = []
    for v in velocities:
        theoretical = float(
            predict_drop(k, v, duration, t_s, air.temperature, precision, gain_decimals)
        )
        ref = _find_reference(v, duration) if body_preset.strip().lower() == "silicon" else None
        if ref is None:
            logger.warning("No reference measurement for u=%.3g m/s, t=%.3g s", v, duration)
            measured = np.nan
        else:
            measured = ref.measured_drop
        rows.append(
            {
                "velocity": v,
                "theoretical_K": theoretical,
                "measured_K": measured,
                "abs_error_K": abs(theoretical - measured),
            }
        )
    return pd.DataFrame(rows, columns=COMPARISON_COLUMNS)


def skin_prediction(
    velocity: float, duration: float, *, precision: Precision = "published"
) -> float:
    """Predicted skin temperature drop (K) for a given velocity and duration."""
    air, body, geom = preset("skin")
    k = cooling_coefficient(air, geom, body)
    return float(
        predict_drop(
            k,
            velocity,
            duration,
            body.temperature,
            air.temperature,
            precision,
            PUBLISHED_GAIN_DECIMALS["skin"],
        )
    )


def comparison_is_consistent(report: pd.DataFrame) -> Sequence[str]:
    """Return a list of problems with a comparison report (empty when fine).

    Checks that theoretical drops grow with velocity, that the model does
    not under-predict any measured row, and that the error grows with
    velocity over the measured rows.
    """
    problems = []
    ordered = report.sort_values("velocity")
    if not ordered["theoretical_K"].is_monotonic_increasing:
        problems.append("theoretical drop does not increase with velocity")
    measured = ordered.dropna(subset=["measured_K"])
    if (measured["theoretical_K"] < measured["measured_K"]).any():
        problems.append("model under-predicts a measured drop")
    if not measured["abs_error_K"].is_monotonic_increasing or measured[
        "abs_error_K"
    ].duplicated().any():
        problems.append("error does not strictly increase with velocity")
    return problems
