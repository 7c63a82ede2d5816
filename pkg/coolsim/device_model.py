"""Generation chain: compressor -> vortex tube -> PWM solenoid valve -> nozzle.

The vortex tube is a calibrated affine map, not a thermodynamic model. The
valve maps PWM duty ratio to outlet velocity through a piecewise-linear
calibration table shipped as data.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from .cooling_model import celsius_to_kelvin
from .errors import CalibrationError, InvalidInputError

logger = logging.getLogger(__name__)

MPA = 1e6


@dataclass(frozen=True)
class VortexModel:
    """Affine calibration of cold outlet temperature around one operating point.

    ``T_cold = T_ref_out + s_T*(T_sup - T_ref_sup) - s_P*(P - P_ref) + s_f*(f - f_ref)``

    Raising the supply pressure cools the outlet, warming the supply warms
    it, and a larger cold fraction narrows the temperature split.
    """

    reference_supply_temperature: float = celsius_to_kelvin(22.0)
    reference_pressure: float = 0.7 * MPA
    reference_cold_fraction: float = 0.5
    temperature_slope: float = 1.0
    pressure_slope: float = 10.0 / MPA  # K per Pa
    cold_fraction_slope: float = 20.0  # K per unit fraction
    pressure_band: Tuple[float, float] = (0.6 * MPA, 0.8 * MPA)

    def __post_init__(self) -> None:
        low, high = self.pressure_band
        if not 0 < low <= high:
            raise InvalidInputError(f"pressure_band must satisfy 0 < low <= high, got {self.pressure_band}")
        for name in ("temperature_slope", "pressure_slope", "cold_fraction_slope"):
            if getattr(self, name) < 0:
                raise InvalidInputError(f"{name} must be >= 0")


DEFAULT_VORTEX_MODEL = VortexModel()


@dataclass(frozen=True)
class VortexTubeSpec:
    """Supply conditions of the vortex tube.

    ``cold_outlet_temperature`` is the outlet temperature the tube reaches at
    the model's reference operating point (-16 C from a 22 C supply).
    """

    cold_fraction: float = 0.5
    supply_pressure: float = 0.7 * MPA
    supply_temperature: float = celsius_to_kelvin(22.0)
    cold_outlet_temperature: float = celsius_to_kelvin(-16.0)

    def __post_init__(self) -> None:
        if not 0 < self.cold_fraction < 1:
            raise InvalidInputError(f"cold_fraction must be in (0, 1), got {self.cold_fraction}")
        if self.supply_pressure <= 0:
            raise InvalidInputError(f"supply_pressure must be > 0, got {self.supply_pressure}")
        if self.supply_temperature <= 0 or self.cold_outlet_temperature <= 0:
            raise InvalidInputError("temperatures must be > 0 K")
        if self.cold_outlet_temperature >= self.supply_temperature:
            raise InvalidInputError(
                "cold_outlet_temperature must be below supply_temperature"
            )


@dataclass(frozen=True)
class ValveCommand:
    """PWM command for the solenoid valve."""

    duty_ratio: float
    pwm_frequency: float = 300.0

    def __post_init__(self) -> None:
        if not 0 <= self.duty_ratio <= 1:
            raise InvalidInputError(f"duty_ratio must be in [0, 1], got {self.duty_ratio}")
        if self.pwm_frequency <= 0:
            raise InvalidInputError(f"pwm_frequency must be > 0, got {self.pwm_frequency}")


@dataclass(frozen=True)
class ValveCalibration:
    """Ordered ``(duty_ratio, velocity)`` breakpoints for the valve."""

    breakpoints: Tuple[Tuple[float, float], ...]
    pwm_frequency: float = 300.0

    def __post_init__(self) -> None:
        points = tuple((float(d), float(v)) for d, v in self.breakpoints)
        object.__setattr__(self, "breakpoints", points)
        if not points:
            raise CalibrationError("calibration has no breakpoints")
        duties = np.array([d for d, _ in points])
        velocities = np.array([v for _, v in points])
        if np.any(duties < 0) or np.any(duties > 1):
            raise CalibrationError("breakpoint duty ratios must lie in [0, 1]")
        if np.any(np.diff(duties) <= 0):
            raise CalibrationError("breakpoint duty ratios must be strictly increasing")
        if np.any(np.diff(velocities) < 0):
            raise CalibrationError("breakpoint velocities must be non-decreasing")
        if velocities[0] != 0:
            raise CalibrationError("first breakpoint velocity must be 0")
        if self.pwm_frequency <= 0:
            raise CalibrationError("pwm_frequency must be > 0")

    @property
    def duties(self) -> np.ndarray:
        return np.array([d for d, _ in self.breakpoints])

    @property
    def velocities(self) -> np.ndarray:
        return np.array([v for _, v in self.breakpoints])

    @property
    def max_velocity(self) -> float:
        return self.breakpoints[-1][1]

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]], pwm_frequency: float = 300.0):
        pairs = list(pairs)
        for pair in pairs:
            if len(pair) != 2:
                raise CalibrationError(f"breakpoint must be [duty, velocity], got {pair!r}")
        return cls(tuple(tuple(p) for p in pairs), pwm_frequency=pwm_frequency)


def load_calibration(path: Optional[Union[str, Path]] = None) -> ValveCalibration:
    """Load a valve calibration from JSON.

    The file holds ``{"breakpoints": [[duty, velocity], ...]}`` and an
    optional ``pwm_frequency``. Without ``path`` the packaged default is used.
    """
    if path is None:
        text = (resources.files("coolsim") / "data" / "valve_calibration.json").read_text(
            encoding="utf-8"
        )
        source = "packaged default"
    else:
        text = Path(path).read_text(encoding="utf-8")
        source = str(path)
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CalibrationError(f"{source}: invalid JSON ({exc})") from exc
    if "breakpoints" not in payload:
        raise CalibrationError(f"{source}: missing 'breakpoints'")
    cal = ValveCalibration.from_pairs(
        payload["breakpoints"], pwm_frequency=payload.get("pwm_frequency", 300.0)
    )
    logger.debug("Loaded valve calibration from %s (%d breakpoints)", source, len(cal.breakpoints))
    return cal


def cold_air_temperature(
    spec: VortexTubeSpec, model: VortexModel = DEFAULT_VORTEX_MODEL
) -> float:
    """Cold outlet temperature (K) for the given supply conditions.

    Raises
    ------
    InvalidInputError
        If the supply pressure is outside the model's operating band.
    """
    low, high = model.pressure_band
    if not low <= spec.supply_pressure <= high:
        raise InvalidInputError(
            f"supply_pressure {spec.supply_pressure / MPA:.3f} MPa outside operating band "
            f"{low / MPA:.2f}-{high / MPA:.2f} MPa"
        )
    return (
        spec.cold_outlet_temperature
        + model.temperature_slope
        * (spec.supply_temperature - model.reference_supply_temperature)
        - model.pressure_slope * (spec.supply_pressure - model.reference_pressure)
        + model.cold_fraction_slope * (spec.cold_fraction - model.reference_cold_fraction)
    )


def duty_to_velocity(cmd: ValveCommand, cal: ValveCalibration) -> float:
    """Outlet velocity (m/s) for a PWM command.

    Duty below the first breakpoint gives 0 (valve not opening); above the
    last breakpoint the last velocity is held. The PWM frequency does not
    enter the static map.
    """
    logger.debug("PWM at %.1f Hz, duty %.4f", cmd.pwm_frequency, cmd.duty_ratio)
    duties, velocities = cal.duties, cal.velocities
    if cmd.duty_ratio < duties[0]:
        return 0.0
    return float(np.interp(cmd.duty_ratio, duties, velocities))


def velocity_to_duty(target: float, cal: ValveCalibration) -> float:
    """Smallest duty ratio whose calibrated velocity equals ``target``."""
    if not np.isfinite(target):
        raise InvalidInputError(f"target velocity must be finite, got {target}")
    if target < 0:
        raise InvalidInputError(f"target velocity must be >= 0, got {target}")
    if target > cal.max_velocity:
        raise CalibrationError(
            f"target velocity {target} m/s above calibrated maximum {cal.max_velocity} m/s"
        )
    duties, velocities = cal.duties, cal.velocities
    j = int(np.searchsorted(velocities, target, side="left"))
    if velocities[j] == target:
        return float(duties[j])
    d0, d1 = duties[j - 1], duties[j]
    v0, v1 = velocities[j - 1], velocities[j]
    return float(d0 + (target - v0) * (d1 - d0) / (v1 - v0))


def flow_velocity_from_supply(
    vortex: VortexTubeSpec,
    cmd: ValveCommand,
    cal: ValveCalibration,
    model: VortexModel = DEFAULT_VORTEX_MODEL,
) -> Tuple[float, float]:
    """Return ``(u, T_a)`` the device chain hands to the cooling model."""
    return duty_to_velocity(cmd, cal), cold_air_temperature(vortex, model)
