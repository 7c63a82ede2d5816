"""Scenario configuration.

A scenario is a JSON document validated by :class:`ScenarioConfig`. Every
section has defaults that reproduce the bench setup, so an empty ``{}`` is a
valid scenario. Command-line flags are layered on top with
:func:`with_overrides`; flags win.
"""

from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator

from .cooling_model import (
    PUBLISHED_GAIN_DECIMALS,
    AirState,
    BodyPatch,
    NozzleGeometry,
    celsius_to_kelvin,
    preset,
)
from .device_model import (
    MPA,
    ValveCalibration,
    VortexModel,
    VortexTubeSpec,
    cold_air_temperature,
    load_calibration,
)
from .errors import InvalidInputError
from .experiment_processers import SENSOR_VELOCITIES, SensorTransientScenario
from .psychophys_processers import DEFAULT_COMPARISONS, StimulusSchedule

logger = logging.getLogger(__name__)

SEED_ENV_VAR = "COOLSIM_SEED"

Mode = Literal["model", "exp1", "exp2", "psy-run", "psy-fit", "calibrate"]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class AirConfig(_Section):
    """Overrides for the cold air; ``None`` keeps the preset value."""

    specific_heat: Optional[float] = Field(None, gt=0, description="J/(kg K)")
    density: Optional[float] = Field(None, gt=0, description="kg/m^3")
    temperature: Optional[float] = Field(None, gt=0, description="K")


class BodyConfig(_Section):
    preset: Literal["silicon", "skin"] = "silicon"
    specific_heat: Optional[float] = Field(None, gt=0)
    density: Optional[float] = Field(None, gt=0)
    area: Optional[float] = Field(None, gt=0, description="m^2")
    thickness: Optional[float] = Field(None, gt=0, description="m")
    temperature: Optional[float] = Field(None, gt=0, description="K")


class VortexConfig(_Section):
    enabled: bool = False
    cold_fraction: float = Field(0.5, gt=0, lt=1)
    supply_pressure_mpa: float = Field(0.7, gt=0)
    supply_temperature_c: float = 22.0
    cold_outlet_temperature_c: float = -16.0
    pressure_band_mpa: Tuple[float, float] = (0.6, 0.8)
    temperature_slope: float = Field(1.0, ge=0)
    pressure_slope_k_per_mpa: float = Field(10.0, ge=0)
    cold_fraction_slope: float = Field(20.0, ge=0)

    def to_spec(self) -> VortexTubeSpec:
        return VortexTubeSpec(
            cold_fraction=self.cold_fraction,
            supply_pressure=self.supply_pressure_mpa * MPA,
            supply_temperature=celsius_to_kelvin(self.supply_temperature_c),
            cold_outlet_temperature=celsius_to_kelvin(self.cold_outlet_temperature_c),
        )

    def to_model(self) -> VortexModel:
        low, high = self.pressure_band_mpa
        return VortexModel(
            temperature_slope=self.temperature_slope,
            pressure_slope=self.pressure_slope_k_per_mpa / MPA,
            cold_fraction_slope=self.cold_fraction_slope,
            pressure_band=(low * MPA, high * MPA),
        )


class ValveConfig(_Section):
    calibration_path: Optional[str] = None
    pwm_frequency: float = Field(300.0, gt=0)

    def load(self) -> ValveCalibration:
        cal = load_calibration(self.calibration_path)
        logger.debug("Valve PWM frequency %.1f Hz", self.pwm_frequency)
        return cal


class TransientConfig(_Section):
    velocities: List[float] = Field(default_factory=lambda: list(SENSOR_VELOCITIES))
    duration: float = Field(3.0, gt=0)
    time_step: float = Field(1e-3, gt=0)
    room_temperature_c: float = 22.0
    cold_temperature_c: float = -16.0
    standoff_mm: float = Field(5.0, ge=0)
    mixing_gain: float = Field(1.5, gt=0)
    blend_velocity: float = Field(2.0, gt=0)
    record_every: int = Field(10, ge=1)

    def to_scenario(self, cold_temperature: Optional[float] = None) -> SensorTransientScenario:
        return SensorTransientScenario(
            velocities=tuple(self.velocities),
            duration=self.duration,
            time_step=self.time_step,
            room_temperature=celsius_to_kelvin(self.room_temperature_c),
            cold_temperature=(
                cold_temperature
                if cold_temperature is not None
                else celsius_to_kelvin(self.cold_temperature_c)
            ),
            standoff=self.standoff_mm * 1e-3,
            mixing_gain=self.mixing_gain,
            blend_velocity=self.blend_velocity,
            record_every=self.record_every,
        )


class PhantomConfig(_Section):
    preset: Literal["silicon", "skin"] = "silicon"
    velocities: List[float] = Field(default_factory=lambda: [1.0, 2.0, 3.0])
    duration: float = Field(3.0, gt=0)
    precision: Literal["full", "published"] = "published"

    @field_validator("velocities")
    @classmethod
    def _non_empty(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("velocities must not be empty")
        return value


class ScheduleConfig(_Section):
    standard: float = Field(2.0, ge=0)
    comparisons: List[float] = Field(default_factory=lambda: list(DEFAULT_COMPARISONS))
    trials_per_comparison: int = Field(10, gt=0)
    stimulus_duration: float = Field(2.0, gt=0)
    gap_duration: float = Field(1.0, gt=0)
    response_duration: float = Field(2.0, gt=0)
    break_every: int = Field(10, gt=0)
    break_duration: float = Field(60.0, ge=0)

    def to_schedule(self, seed: int, max_velocity: float) -> StimulusSchedule:
        return StimulusSchedule(
            standard=self.standard,
            comparisons=tuple(self.comparisons),
            trials_per_comparison=self.trials_per_comparison,
            stimulus_duration=self.stimulus_duration,
            gap_duration=self.gap_duration,
            break_every=self.break_every,
            rng_seed=seed,
            response_duration=self.response_duration,
            break_duration=self.break_duration,
            max_velocity=max_velocity,
        )


class ObserverConfig(_Section):
    target_jnd: float = Field(1.2818, gt=0)
    response: Literal["skin", "linear"] = "skin"
    response_duration: Optional[float] = Field(None, gt=0, description="defaults to stimulus_duration")
    linear_slope: float = Field(1.0, gt=0)
    domain: Tuple[float, float] = (0.0, 10.0)
    noise_sd: Optional[float] = Field(None, gt=0)
    observer_path: Optional[str] = None


class OutputConfig(_Section):
    csv: Optional[str] = None
    svg: Optional[str] = None
    html: Optional[str] = None
    json_path: Optional[str] = Field(None, alias="json")

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)


class ScenarioConfig(_Section):
    mode: Optional[Mode] = None
    seed: Optional[int] = None
    sessions: int = Field(1, gt=0)
    workers: int = Field(1, gt=0)
    air: AirConfig = AirConfig()
    body: BodyConfig = BodyConfig()
    vortex: VortexConfig = VortexConfig()
    valve: ValveConfig = ValveConfig()
    transient: TransientConfig = TransientConfig()
    phantom: PhantomConfig = PhantomConfig()
    schedule: ScheduleConfig = ScheduleConfig()
    observer: ObserverConfig = ObserverConfig()
    output: OutputConfig = OutputConfig()


def load_scenario(path: Optional[Union[str, Path]] = None) -> ScenarioConfig:
    """Read and validate a scenario file; defaults when ``path`` is None."""
    if path is None:
        return ScenarioConfig()
    text = Path(path).read_text(encoding="utf-8")
    cfg = ScenarioConfig.model_validate_json(text)
    logger.info("Loaded scenario %s", path)
    return cfg


def with_overrides(cfg: ScenarioConfig, overrides: Mapping[str, Any]) -> ScenarioConfig:
    """Return a validated copy with dotted-key overrides applied.

    ``None`` values are ignored so unset flags never clobber the file.

    >>> with_overrides(ScenarioConfig(), {"phantom.duration": 2.0}).phantom.duration
    2.0
    """
    data: Dict[str, Any] = cfg.model_dump(by_alias=True)
    for dotted, value in overrides.items():
        if value is None:
            continue
        node = data
        *parents, leaf = dotted.split(".")
        for key in parents:
            node = node[key]
        if leaf == "json_path":
            leaf = "json"
        node[leaf] = value
    return ScenarioConfig.model_validate(data)


def resolve_seed(flag: Optional[int], cfg: ScenarioConfig) -> int:
    """Seed from the flag, then the scenario, then ``COOLSIM_SEED``, then 0."""
    if flag is not None:
        return flag
    if cfg.seed is not None:
        return cfg.seed
    env = os.environ.get(SEED_ENV_VAR)
    if env:
        try:
            return int(env)
        except ValueError:
            raise InvalidInputError(f"{SEED_ENV_VAR} must be an integer, got {env!r}") from None
    return 0


def build_model_inputs(
    cfg: ScenarioConfig,
) -> Tuple[AirState, BodyPatch, NozzleGeometry, Optional[int]]:
    """Preset parameters with the scenario's air/body overrides applied.

    When the vortex section is enabled, the air temperature comes from the
    vortex tube model instead of the preset.
    """
    air, body, geom = preset(cfg.body.preset)
    air_fields = {k: v for k, v in cfg.air.model_dump().items() if v is not None}
    body_fields = {
        k: v for k, v in cfg.body.model_dump().items() if k != "preset" and v is not None
    }
    if cfg.vortex.enabled:
        if "temperature" in air_fields:
            raise InvalidInputError("air.temperature conflicts with vortex.enabled")
        air_fields["temperature"] = cold_air_temperature(
            cfg.vortex.to_spec(), cfg.vortex.to_model()
        )
    air = AirState(**{**air.__dict__, **air_fields})
    body = BodyPatch(**{**body.__dict__, **body_fields})
    gain_decimals = PUBLISHED_GAIN_DECIMALS[cfg.body.preset]
    return air, body, geom, gain_decimals
