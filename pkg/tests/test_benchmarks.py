"""Performance benchmarks for coolsim key operations."""

import numpy as np
import pytest

from coolsim import (
    ObserverModel,
    StimulusSchedule,
    calibrate_observer,
    fit_psychometric,
    run_phantom_experiment,
    temperature_drop,
)
from coolsim.experiment_processers import SensorTransientScenario, simulate_sensor_transient
from coolsim.psychophys_processers import SkinCoolingResponse, build_schedule, simulate_session


@pytest.fixture
def observer():
    return ObserverModel(noise_sd=0.8366, response_map=SkinCoolingResponse())


@pytest.fixture
def session_records(observer):
    _, trials = build_schedule(StimulusSchedule(rng_seed=42))
    return simulate_session(observer, trials, 42)


def test_benchmark_temperature_drop_grid(benchmark):
    """Benchmark the closed form over a dense velocity grid."""
    u = np.linspace(0, 3.7, 100_000)
    result = benchmark(temperature_drop, 0.005, u, 3.0, 294.45, 257.15)
    assert result.shape == u.shape


def test_benchmark_sensor_transient(benchmark):
    """Benchmark the default sensor transient."""
    result = benchmark(simulate_sensor_transient, SensorTransientScenario())
    assert len(result) > 0


def test_benchmark_phantom_experiment(benchmark):
    result = benchmark(run_phantom_experiment)
    assert len(result) == 3


def test_benchmark_session(benchmark, observer):
    """Benchmark scheduling and answering one 70-trial session."""

    def one_session():
        _, trials = build_schedule(StimulusSchedule(rng_seed=7))
        return simulate_session(observer, trials, 7)

    result = benchmark(one_session)
    assert len(result) == 70


def test_benchmark_fit(benchmark, session_records):
    """Benchmark the maximum-likelihood fit of one session."""
    result = benchmark(fit_psychometric, session_records)
    assert result.jnd > 0


def test_benchmark_calibration(benchmark):
    result = benchmark(calibrate_observer, 1.2818)
    assert result.observer.noise_sd > 0
