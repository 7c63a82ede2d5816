"""Tests for schedules, the simulated observer and psychometric fitting."""

import io
import math
from collections import Counter

import numpy as np
import pandas as pd
import pytest
from scipy.stats import norm

from coolsim.errors import CalibrationError, DegenerateDataError, InvalidInputError, TrialFormatError
from coolsim.psychophys_processers import (
    DEFAULT_COMPARISONS,
    TRIAL_COLUMNS,
    Z75,
    LinearResponse,
    ObserverModel,
    ScheduledTrial,
    SkinCoolingResponse,
    StimulusSchedule,
    TrialRecord,
    asymptotic_jnd,
    build_schedule,
    calibrate_observer,
    fit_levels,
    fit_psychometric,
    jnd,
    level_table,
    read_trials_csv,
    replicate_sessions,
    run_session,
    session_timeline,
    simulate_cohort,
    simulate_session,
    simulate_trial,
    summarize_jnds,
    trials_to_frame,
)

WIDE = (-50.0, 50.0)


def _records(levels):
    """Trial records from ``(velocity, n, k_colder)`` triples."""
    records = []
    for v, n, k in levels:
        for i in range(n):
            records.append(TrialRecord(len(records) + 1, v, 2.0, i % 2 == 0, i < k))
    return records


# --- schedule ------------------------------------------------------------------


def test_default_schedule_has_seventy_trials():
    cfg, trials = build_schedule(StimulusSchedule(rng_seed=42))
    assert cfg.n_trials == 70
    assert len(trials) == 70
    assert Counter(t.comparison for t in trials) == {v: 10 for v in DEFAULT_COMPARISONS}
    assert [t.trial_index for t in trials] == list(range(1, 71))
    assert all(t.standard == 2.0 for t in trials)


def test_schedule_depends_only_on_seed():
    _, first = build_schedule(StimulusSchedule(rng_seed=7))
    _, again = build_schedule(StimulusSchedule(rng_seed=7))
    _, other = build_schedule(StimulusSchedule(rng_seed=8))
    assert first == again
    assert first != other


def test_schedule_presentation_order_is_mixed():
    _, trials = build_schedule(StimulusSchedule(rng_seed=3, trials_per_comparison=50))
    share = np.mean([t.comparison_first for t in trials])
    assert 0.35 < share < 0.65


@pytest.mark.parametrize(
    "kwargs, message",
    [
        (dict(comparisons=()), "empty"),
        (dict(comparisons=(0.5, 4.0)), "calibrated range"),
        (dict(standard=5.0), "calibrated range"),
        (dict(trials_per_comparison=0), "trials_per_comparison"),
    ],
)
def test_schedule_validation(kwargs, message):
    with pytest.raises(InvalidInputError, match=message):
        StimulusSchedule(**kwargs)


def test_session_timeline():
    schedule = StimulusSchedule(rng_seed=1)
    _, trials = build_schedule(schedule)
    timeline = session_timeline(schedule, trials)
    first = timeline.iloc[0]
    assert (first["first_on_s"], first["first_off_s"]) == (0.0, 2.0)
    assert (first["second_on_s"], first["second_off_s"]) == (3.0, 5.0)
    assert first["response_end_s"] == 7.0
    assert timeline["break_after"].sum() == 6
    assert bool(timeline.iloc[9]["break_after"])
    assert timeline.iloc[10]["first_on_s"] == pytest.approx(10 * 7 + 60)
    assert timeline.iloc[-1]["response_end_s"] == pytest.approx(70 * 7 + 6 * 60)


# --- observer ------------------------------------------------------------------


def test_precise_observer_answers_by_velocity():
    observer = ObserverModel(noise_sd=1e-9, response_map=LinearResponse())
    rng = np.random.default_rng(0)
    faster = simulate_trial(observer, ScheduledTrial(1, 3.0, 2.0, True), rng)
    slower = simulate_trial(observer, ScheduledTrial(2, 1.0, 2.0, False), rng)
    assert faster.response_comparison_colder
    assert not slower.response_comparison_colder


def test_simulate_session_is_deterministic():
    observer = ObserverModel(noise_sd=0.8)
    _, trials = build_schedule(StimulusSchedule(rng_seed=42))
    assert simulate_session(observer, trials, 42) == simulate_session(observer, trials, 42)
    assert simulate_session(observer, trials, 42) != simulate_session(observer, trials, 43)


def test_observer_rejects_velocity_outside_domain():
    observer = ObserverModel(noise_sd=1.0, domain=(0.0, 3.0))
    with pytest.raises(InvalidInputError, match="domain"):
        simulate_trial(observer, ScheduledTrial(1, 3.5, 2.0, True), np.random.default_rng(0))


def test_observer_validation():
    with pytest.raises(InvalidInputError, match="noise_sd"):
        ObserverModel(noise_sd=0.0)
    with pytest.raises(InvalidInputError):
        LinearResponse(slope=-1.0)


def test_observer_round_trips_through_dict():
    observer = ObserverModel(noise_sd=0.84, response_map=SkinCoolingResponse(duration=2.0))
    assert ObserverModel.from_dict(observer.to_dict()) == observer
    linear = ObserverModel(noise_sd=1.0, response_map=LinearResponse(2.0, 0.5), domain=WIDE)
    assert ObserverModel.from_dict(linear.to_dict()) == linear


def test_skin_response_derivative():
    response = SkinCoolingResponse(duration=2.0)
    h = 1e-6
    numeric = (response(2.0 + h) - response(2.0 - h)) / (2 * h)
    assert float(response.derivative(2.0)) == pytest.approx(float(numeric), rel=1e-6)


# --- fitting -------------------------------------------------------------------


def test_level_table():
    table = level_table(_records([(1.0, 10, 2), (3.0, 10, 8)]))
    assert list(table.columns) == ["velocity", "n", "k_colder", "proportion"]
    assert list(table["k_colder"]) == [2, 8]
    assert list(table["proportion"]) == [0.2, 0.8]


def test_fit_symmetric_data_centres_on_standard():
    fit = fit_psychometric(_records([(1.0, 10, 2), (2.0, 10, 5), (3.0, 10, 8)]))
    assert fit.mu == pytest.approx(2.0, abs=1e-4)
    assert fit.jnd == pytest.approx(Z75 * fit.sigma, abs=1e-12)


def test_fit_step_data_centres_on_middle_level():
    v = np.array(DEFAULT_COMPARISONS)
    fit = fit_levels(v, np.full(v.size, 10), [0, 0, 0, 5, 10, 10, 10])
    assert fit.mu == pytest.approx(2.0, abs=1e-6)


def test_fit_ignores_trial_order():
    records = _records([(0.5, 10, 1), (1.5, 10, 3), (2.0, 10, 5), (3.0, 10, 8), (3.5, 10, 9)])
    shuffled = list(records)
    np.random.default_rng(3).shuffle(shuffled)
    a, b = fit_psychometric(records), fit_psychometric(shuffled)
    assert abs(a.mu - b.mu) <= 1e-10
    assert abs(a.sigma - b.sigma) <= 1e-10


def test_fit_recovers_expected_counts():
    v = np.array(DEFAULT_COMPARISONS)
    n = np.full(v.size, 10_000)
    k = np.round(n * norm.cdf((v - 2.0) / 1.0))
    fit = fit_levels(v, n, k)
    assert fit.mu == pytest.approx(2.0, abs=1e-3)
    assert fit.sigma == pytest.approx(1.0, abs=1e-3)


def test_fit_recovers_sampled_responses():
    rng = np.random.default_rng(2024)
    v = np.array(DEFAULT_COMPARISONS)
    n = np.full(v.size, 10_000)
    k = rng.binomial(n, norm.cdf((v - 2.0) / 1.0))
    fit = fit_levels(v, n, k)
    assert fit.mu == pytest.approx(2.0, abs=0.02)
    assert fit.sigma == pytest.approx(1.0, abs=0.02)
    assert abs(fit.jnd - 0.67449 * fit.sigma) < 1e-5 * fit.sigma
    assert jnd(fit) == pytest.approx(Z75 * fit.sigma, abs=1e-9)


def test_fit_probability_and_dict():
    fit = fit_psychometric(_records([(1.0, 10, 1), (2.0, 10, 4), (3.0, 10, 9)]))
    assert float(fit.probability(fit.mu)) == pytest.approx(0.5)
    payload = fit.to_dict()
    assert set(payload) == {"mu", "sigma", "jnd", "log_likelihood", "levels"}
    assert payload["levels"][0] == {"v": 1.0, "n": 10, "k": 1}
    assert payload["log_likelihood"] < 0


@pytest.mark.parametrize(
    "levels",
    [
        [(2.0, 10, 5)],
        [(1.0, 10, 10), (3.0, 10, 10)],
        [(1.0, 10, 0), (3.0, 10, 0)],
        [],
    ],
)
def test_fit_degenerate_data(levels):
    with pytest.raises(DegenerateDataError):
        fit_psychometric(_records(levels))


def test_jnd_matches_closed_form_on_every_fit():
    rng = np.random.default_rng(11)
    v = np.array(DEFAULT_COMPARISONS)
    for _ in range(20):
        k = rng.binomial(10, norm.cdf((v - 2.0) / 1.3))
        if k.min() == k.max() or (k == 0).all() or (k == 10).all():
            continue
        fit = fit_levels(v, np.full(v.size, 10), k)
        assert abs(fit.jnd - Z75 * fit.sigma) <= 1e-9
        assert jnd(fit) == pytest.approx(fit.jnd, abs=1e-8)


# --- calibration ---------------------------------------------------------------


def test_calibrate_linear_matches_closed_form():
    cal = calibrate_observer(1.2818, response_map=LinearResponse(), domain=WIDE)
    expected = 1.2818 / (Z75 * math.sqrt(2))
    assert cal.observer.noise_sd == pytest.approx(expected, rel=1e-6)
    assert cal.closed_form_noise_sd == pytest.approx(expected, rel=1e-12)
    assert cal.asymptotic_jnd == pytest.approx(1.2818, rel=1e-6)


def test_calibration_scales_with_slope():
    shallow = calibrate_observer(1.0, response_map=LinearResponse(1.0), domain=WIDE)
    steep = calibrate_observer(1.0, response_map=LinearResponse(3.0), domain=WIDE)
    assert steep.observer.noise_sd == pytest.approx(3 * shallow.observer.noise_sd, rel=1e-6)


def test_calibrate_skin_observer():
    cal = calibrate_observer(1.2818)
    assert cal.observer.noise_sd == pytest.approx(0.837, abs=0.02)
    assert cal.asymptotic_jnd == pytest.approx(1.2818, rel=0.01)
    assert "bisection" in cal.derivation
    payload = cal.to_dict()
    assert payload["response_map"]["kind"] == "skin"
    assert ObserverModel.from_dict(payload) == cal.observer


def test_calibrate_unreachable_target():
    with pytest.raises(CalibrationError, match="unreachable"):
        calibrate_observer(5.0)


def test_calibrate_rejects_bad_target():
    with pytest.raises(InvalidInputError):
        calibrate_observer(0.0)


def test_asymptotic_jnd_outside_domain_is_nan():
    assert math.isnan(asymptotic_jnd(100.0, LinearResponse(), 2.0, (0.0, 10.0)))


# --- replication ---------------------------------------------------------------


@pytest.fixture(scope="module")
def observer():
    return calibrate_observer(1.2818).observer


def test_run_session(observer):
    records, fit = run_session(observer, StimulusSchedule(), 42)
    assert len(records) == 70
    assert fit is not None
    assert fit.jnd > 0


def test_replicate_sessions(observer):
    fits = replicate_sessions(observer, StimulusSchedule(), 6, base_seed=100)
    assert list(fits.columns) == ["replicate", "seed", "mu", "sigma", "jnd"]
    assert list(fits["seed"]) == list(range(100, 106))
    threaded = replicate_sessions(observer, StimulusSchedule(), 6, base_seed=100, workers=3)
    pd.testing.assert_frame_equal(fits, threaded)


def test_replicate_sessions_requires_sessions(observer):
    with pytest.raises(InvalidInputError):
        replicate_sessions(observer, StimulusSchedule(), 0)


def test_summarize_jnds():
    summary = summarize_jnds([1.0, 2.0, 3.0, 4.0, float("nan")])
    assert summary["n"] == 4
    assert summary["mean"] == 2.5
    assert summary["sd"] == pytest.approx(np.std([1, 2, 3, 4], ddof=1))
    assert summary["median"] == 2.5
    assert (summary["min"], summary["max"]) == (1.0, 4.0)
    with pytest.raises(DegenerateDataError):
        summarize_jnds([float("nan")])


def test_simulate_cohort(observer):
    noisier = ObserverModel(noise_sd=1.0)
    frame, summary = simulate_cohort([observer, noisier, observer], StimulusSchedule(), seed=5)
    assert list(frame["participant"]) == [1, 2, 3]
    assert summary["n"] == frame["jnd"].notna().sum()


def _repeated_trials(levels, n):
    return [
        ScheduledTrial(i * len(levels) + j + 1, v, 2.0, i % 2 == 0)
        for i in range(n)
        for j, v in enumerate(levels)
    ]


def test_equal_stimuli_are_a_coin_flip(observer):
    records = simulate_session(observer, _repeated_trials([2.0], 1000), 0)
    colder = np.mean([r.response_comparison_colder for r in records])
    assert colder == pytest.approx(0.5, abs=0.05)


def test_colder_answers_grow_with_velocity(observer):
    records = simulate_session(observer, _repeated_trials(DEFAULT_COMPARISONS, 10_000), 1)
    table = level_table(records)
    assert list(table["n"]) == [10_000] * len(DEFAULT_COMPARISONS)
    assert np.all(np.diff(table["proportion"]) >= 0)


@pytest.mark.slow
def test_calibrated_observer_reproduces_target_jnd(observer):
    records = simulate_session(observer, _repeated_trials(DEFAULT_COMPARISONS, 100_000), 2)
    assert fit_psychometric(records).jnd == pytest.approx(1.2818, rel=0.05)


@pytest.mark.slow
def test_mean_jnd_over_many_sessions(observer):
    fits = replicate_sessions(observer, StimulusSchedule(), 1000, base_seed=0, workers=4)
    assert fits["jnd"].mean() == pytest.approx(1.2818, abs=0.15)


# --- trial tables --------------------------------------------------------------


def test_trials_csv_round_trip():
    records = _records([(1.0, 3, 1), (3.0, 3, 2)])
    frame = trials_to_frame(records)
    assert list(frame.columns) == TRIAL_COLUMNS
    text = frame.to_csv(index=False)
    assert read_trials_csv(io.StringIO(text)) == records


def test_read_hand_made_trials():
    text = (
        "trial,comparison_mps,standard_mps,comparison_first,response_comparison_colder\n"
        "1,1.0,2.0,true,false\n"
        "2,3.0,2.0,FALSE,1\n"
    )
    records = read_trials_csv(io.StringIO(text))
    assert records[1].comparison == 3.0
    assert records[1].response_comparison_colder is True
    assert records[1].comparison_first is False


@pytest.mark.parametrize(
    "bad_row, message",
    [
        ("2,fast,2.0,true,false", "comparison_mps"),
        ("2,3.0,2.0,maybe,false", "comparison_first"),
        ("x,3.0,2.0,true,false", "trial"),
        ("2,-1.0,2.0,true,false", "non-negative"),
    ],
)
def test_read_trials_reports_line_number(bad_row, message):
    text = (
        "trial,comparison_mps,standard_mps,comparison_first,response_comparison_colder\n"
        "1,1.0,2.0,true,false\n" + bad_row + "\n"
    )
    with pytest.raises(TrialFormatError, match=message) as info:
        read_trials_csv(io.StringIO(text))
    assert info.value.line_number == 3
    assert str(info.value).startswith("line 3:")


def test_read_trials_counts_blank_lines():
    text = (
        "trial,comparison_mps,standard_mps,comparison_first,response_comparison_colder\n"
        "1,1.0,2.0,true,false\n"
        "\n"
        "\n"
        "2,oops,2.0,true,false\n"
    )
    with pytest.raises(TrialFormatError, match="comparison_mps") as info:
        read_trials_csv(io.StringIO(text))
    assert info.value.line_number == 5


def test_read_trials_skips_blank_lines():
    text = (
        "trial,comparison_mps,standard_mps,comparison_first,response_comparison_colder\n"
        "1,1.0,2.0,true,false\n"
        "\n"
        "2,3.0,2.0,false,true\n"
        "\n"
    )
    records = read_trials_csv(io.StringIO(text))
    assert [r.trial_index for r in records] == [1, 2]


def test_read_trials_short_row():
    text = (
        "trial,comparison_mps,standard_mps,comparison_first,response_comparison_colder\n"
        "1,1.0,2.0\n"
    )
    with pytest.raises(TrialFormatError, match="comparison_first") as info:
        read_trials_csv(io.StringIO(text))
    assert info.value.line_number == 2


def test_read_trials_missing_column():
    with pytest.raises(TrialFormatError, match="missing columns"):
        read_trials_csv(io.StringIO("trial,comparison_mps\n1,2.0\n"))
