"""Tests for the vortex tube and valve models."""

import json

import numpy as np
import pytest

from coolsim.cooling_model import celsius_to_kelvin
from coolsim.device_model import (
    MPA,
    ValveCalibration,
    ValveCommand,
    VortexModel,
    VortexTubeSpec,
    cold_air_temperature,
    duty_to_velocity,
    flow_velocity_from_supply,
    load_calibration,
    velocity_to_duty,
)
from coolsim.errors import CalibrationError, InvalidInputError


@pytest.fixture
def cal():
    return load_calibration()


def test_packaged_calibration(cal):
    assert cal.breakpoints == ((0.65, 0.0), (0.73, 3.5), (1.0, 3.7))
    assert cal.pwm_frequency == 300.0
    assert cal.max_velocity == 3.7


def test_cold_air_at_reference_point():
    assert cold_air_temperature(VortexTubeSpec()) == pytest.approx(257.15)


def test_cold_air_follows_supply_temperature():
    warm = VortexTubeSpec(supply_temperature=celsius_to_kelvin(27.0))
    assert cold_air_temperature(warm) == pytest.approx(257.15 + 5.0)


def test_cold_air_pressure_and_fraction_trends():
    base = cold_air_temperature(VortexTubeSpec())
    assert cold_air_temperature(VortexTubeSpec(supply_pressure=0.8 * MPA)) < base
    assert cold_air_temperature(VortexTubeSpec(cold_fraction=0.6)) > base


@pytest.mark.parametrize("pressure", [0.6, 0.8])
def test_cold_air_band_edges_accepted(pressure):
    cold_air_temperature(VortexTubeSpec(supply_pressure=pressure * MPA))


@pytest.mark.parametrize("pressure", [0.5, 0.9])
def test_cold_air_pressure_outside_band(pressure):
    with pytest.raises(InvalidInputError, match="operating band"):
        cold_air_temperature(VortexTubeSpec(supply_pressure=pressure * MPA))


def test_custom_pressure_band():
    model = VortexModel(pressure_band=(0.4 * MPA, 1.0 * MPA))
    cold_air_temperature(VortexTubeSpec(supply_pressure=0.9 * MPA), model)


def test_vortex_spec_validation():
    with pytest.raises(InvalidInputError, match="cold_fraction"):
        VortexTubeSpec(cold_fraction=1.0)
    with pytest.raises(InvalidInputError):
        VortexTubeSpec(cold_outlet_temperature=300.0)


@pytest.mark.parametrize(
    "duty, expected",
    [
        (0.0, 0.0),
        (0.5, 0.0),
        (0.65, 0.0),
        (0.69, 1.75),
        (0.73, 3.5),
        (0.865, 3.6),
        (1.0, 3.7),
    ],
)
def test_duty_to_velocity(cal, duty, expected):
    assert duty_to_velocity(ValveCommand(duty), cal) == pytest.approx(expected, abs=1e-12)


def test_velocity_to_duty_boundaries(cal):
    assert velocity_to_duty(0.0, cal) == 0.65
    assert velocity_to_duty(3.7, cal) == 1.0
    assert velocity_to_duty(3.5, cal) == 0.73


def test_velocity_to_duty_errors(cal):
    with pytest.raises(CalibrationError, match="above calibrated maximum"):
        velocity_to_duty(3.8, cal)
    with pytest.raises(InvalidInputError):
        velocity_to_duty(-0.1, cal)


@pytest.mark.parametrize("target", [float("nan"), float("inf")])
def test_velocity_to_duty_rejects_non_finite(cal, target):
    with pytest.raises(InvalidInputError, match="finite"):
        velocity_to_duty(target, cal)


def test_velocity_duty_round_trip(cal):
    for target in np.linspace(0.0, 3.7, 371):
        duty = velocity_to_duty(float(target), cal)
        assert duty_to_velocity(ValveCommand(duty), cal) == pytest.approx(target, abs=1e-9)


def test_velocity_to_duty_is_minimal_on_flat_segment():
    flat = ValveCalibration.from_pairs([[0.6, 0.0], [0.7, 2.0], [0.8, 2.0], [0.9, 3.0]])
    assert velocity_to_duty(2.0, flat) == 0.7


@pytest.mark.parametrize(
    "pairs, message",
    [
        ([], "no breakpoints"),
        ([[0.7, 0.0], [0.6, 1.0]], "strictly increasing"),
        ([[0.6, 0.0], [0.7, 2.0], [0.8, 1.0]], "non-decreasing"),
        ([[0.6, 0.5], [0.7, 2.0]], "first breakpoint"),
        ([[0.6, 0.0], [1.2, 2.0]], r"\[0, 1\]"),
        ([[0.6, 0.0, 1.0]], "duty, velocity"),
    ],
)
def test_calibration_validation(pairs, message):
    with pytest.raises(CalibrationError, match=message):
        ValveCalibration.from_pairs(pairs)


def test_load_calibration_from_file(tmp_path):
    path = tmp_path / "valve.json"
    path.write_text(json.dumps({"breakpoints": [[0.5, 0.0], [1.0, 5.0]], "pwm_frequency": 250}))
    cal = load_calibration(path)
    assert cal.max_velocity == 5.0
    assert cal.pwm_frequency == 250.0
    assert duty_to_velocity(ValveCommand(0.75, pwm_frequency=250), cal) == pytest.approx(2.5)


def test_load_calibration_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(CalibrationError, match="invalid JSON"):
        load_calibration(bad)
    missing = tmp_path / "missing.json"
    missing.write_text(json.dumps({"pwm_frequency": 300}))
    with pytest.raises(CalibrationError, match="breakpoints"):
        load_calibration(missing)


def test_valve_command_validation():
    with pytest.raises(InvalidInputError, match="duty_ratio"):
        ValveCommand(1.2)
    with pytest.raises(InvalidInputError, match="pwm_frequency"):
        ValveCommand(0.7, pwm_frequency=0)


def test_flow_velocity_from_supply(cal):
    u, t_a = flow_velocity_from_supply(VortexTubeSpec(), ValveCommand(0.73), cal)
    assert u == pytest.approx(3.5)
    assert t_a == pytest.approx(257.15)
