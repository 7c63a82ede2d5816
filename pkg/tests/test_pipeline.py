"""Tests for the end-to-end runs and their output files."""

import json

import pytest

from coolsim.config import ScenarioConfig, with_overrides
from coolsim.errors import DegenerateDataError, InvalidInputError
from coolsim.pipeline import (
    atomic_write_text,
    calibrate_pipeline,
    exp1_pipeline,
    exp2_pipeline,
    format_comparison_csv,
    model_summary,
    psy_fit_pipeline,
    psy_run_pipeline,
    resolve_observer,
    write_outputs,
)

EXP2_CSV = (
    "velocity,theoretical_K,measured_K,abs_error_K\n"
    "1.0,0.551,0.41,0.141\n"
    "2.0,1.086,0.79,0.296\n"
    "3.0,1.606,1.15,0.456\n"
)


def _cfg(**overrides):
    return with_overrides(ScenarioConfig(), overrides)


def test_atomic_write_replaces_file(tmp_path):
    target = tmp_path / "out.txt"
    target.write_text("old")
    atomic_write_text(target, "new\n")
    assert target.read_text() == "new\n"
    assert sorted(p.name for p in tmp_path.iterdir()) == ["out.txt"]


def test_atomic_write_missing_directory(tmp_path):
    with pytest.raises(OSError):
        atomic_write_text(tmp_path / "missing" / "out.txt", "x")


def test_write_outputs_is_all_or_nothing(tmp_path):
    good = tmp_path / "a.csv"
    with pytest.raises(OSError):
        write_outputs({good: "a\n", tmp_path / "missing" / "b.svg": "<svg/>"})
    assert list(tmp_path.iterdir()) == []


def test_exp2_unwritable_svg_leaves_no_csv(tmp_path):
    csv = tmp_path / "exp2.csv"
    cfg = _cfg(**{"output.csv": str(csv), "output.svg": str(tmp_path / "no" / "exp2.svg")})
    with pytest.raises(OSError):
        exp2_pipeline(cfg)
    assert list(tmp_path.iterdir()) == []


def test_model_summary_skin():
    summary = model_summary(_cfg(**{"body.preset": "skin"}), 3.0, 3.0)
    assert summary["delta_T_K"] == pytest.approx(2.88, abs=0.01)
    assert summary["k_published"] == 0.007
    assert summary["final_temperature_K"] == pytest.approx(303.27, abs=0.01)


def test_model_summary_full_precision():
    summary = model_summary(ScenarioConfig(), 2.0, 3.0, "full")
    assert summary["delta_T_K"] == pytest.approx(1.180, abs=1e-3)
    assert summary["final_temperature_K"] + summary["delta_T_K"] == pytest.approx(294.45)


def test_exp2_default_csv(tmp_path):
    out = tmp_path / "exp2.csv"
    report = exp2_pipeline(_cfg(**{"output.csv": str(out)}))
    assert len(report) == 3
    assert out.read_text() == EXP2_CSV


def test_exp2_is_byte_identical(tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    svg_a, svg_b = tmp_path / "a.svg", tmp_path / "b.svg"
    exp2_pipeline(_cfg(**{"output.csv": str(first), "output.svg": str(svg_a)}))
    exp2_pipeline(_cfg(**{"output.csv": str(second), "output.svg": str(svg_b)}))
    assert first.read_bytes() == second.read_bytes()
    assert svg_a.read_bytes() == svg_b.read_bytes()
    assert b"<svg" in svg_a.read_bytes()


def test_exp2_extra_velocity_has_empty_measurement(tmp_path):
    out = tmp_path / "exp2.csv"
    exp2_pipeline(_cfg(**{"output.csv": str(out), "phantom.velocities": [1.0, 1.5]}))
    lines = out.read_text().splitlines()
    assert lines[2].startswith("1.5,")
    assert lines[2].endswith(",,")


def test_exp2_invalid_velocity_writes_nothing(tmp_path):
    out = tmp_path / "exp2.csv"
    with pytest.raises(InvalidInputError):
        exp2_pipeline(_cfg(**{"output.csv": str(out), "phantom.velocities": [5.0]}))
    assert not out.exists()


def test_exp2_html_report(tmp_path):
    out = tmp_path / "exp2.html"
    exp2_pipeline(_cfg(**{"output.html": str(out)}))
    html = out.read_text(encoding="utf-8")
    assert "<!DOCTYPE html>" in html
    assert "Phantom comparison" in html


def test_exp2_html_includes_valve_calibration(tmp_path):
    out = tmp_path / "exp2.html"
    exp2_pipeline(_cfg(**{"output.html": str(out)}))
    html = out.read_text(encoding="utf-8")
    assert 'id="section-valve_calibration"' in html
    assert "duty_ratio" in html


def test_psy_run_replications_html(tmp_path):
    out = tmp_path / "sessions.html"
    psy_run_pipeline(_cfg(sessions=3, **{"output.html": str(out), "observer.noise_sd": 0.5}), seed=3)
    html = out.read_text(encoding="utf-8")
    assert "Session JNDs" in html
    assert "failed_sessions" in html
    assert "JND over" in html


def test_format_comparison_csv_default():
    from coolsim.experiment_processers import run_phantom_experiment

    assert format_comparison_csv(run_phantom_experiment()) == EXP2_CSV


def test_exp1_csv(tmp_path):
    out = tmp_path / "exp1.csv"
    series = exp1_pipeline(
        _cfg(**{"output.csv": str(out), "transient.velocities": [0.0, 3.5]})
    )
    lines = out.read_text().splitlines()
    assert lines[0] == "velocity,t,temperature_K"
    assert lines[1] == "0.000000,0.000000,295.150000"
    assert len(lines) == len(series) + 1 == 2 * 301 + 1


def test_psy_run_writes_seventy_trials(tmp_path):
    out = tmp_path / "trials.csv"
    records = psy_run_pipeline(_cfg(**{"output.csv": str(out)}), seed=42)
    lines = out.read_text().splitlines()
    assert len(records) == 70
    assert len(lines) == 71
    assert lines[0] == "trial,comparison_mps,standard_mps,comparison_first,response_comparison_colder"
    assert lines[1].split(",")[3] in {"true", "false"}


def test_psy_run_is_byte_identical(tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    psy_run_pipeline(_cfg(**{"output.csv": str(first)}), seed=42)
    psy_run_pipeline(_cfg(**{"output.csv": str(second)}), seed=42)
    assert first.read_bytes() == second.read_bytes()


def test_psy_run_replications(tmp_path):
    table, summary = tmp_path / "fits.csv", tmp_path / "summary.json"
    fits = psy_run_pipeline(
        _cfg(sessions=4, **{"output.csv": str(table), "output.json_path": str(summary)}), seed=1
    )
    assert list(fits["seed"]) == [1, 2, 3, 4]
    payload = json.loads(summary.read_text())
    assert payload["n"] + payload["failed_sessions"] == 4
    assert payload["mean"] > 0


def test_psy_fit_round_trip(tmp_path):
    trials, fit_json = tmp_path / "trials.csv", tmp_path / "fit.json"
    psy_run_pipeline(_cfg(**{"output.csv": str(trials)}), seed=42)
    fit = psy_fit_pipeline(_cfg(**{"output.json_path": str(fit_json)}), trials)
    payload = json.loads(fit_json.read_text())
    assert payload["jnd"] == pytest.approx(fit.jnd)
    assert sum(level["n"] for level in payload["levels"]) == 70
    assert fit_json.read_text().endswith("}\n")


def test_psy_fit_degenerate(tmp_path):
    trials = tmp_path / "trials.csv"
    trials.write_text(
        "trial,comparison_mps,standard_mps,comparison_first,response_comparison_colder\n"
        "1,1.0,2.0,true,true\n"
        "2,3.0,2.0,false,true\n"
    )
    out = tmp_path / "fit.json"
    with pytest.raises(DegenerateDataError):
        psy_fit_pipeline(_cfg(**{"output.json_path": str(out)}), trials)
    assert not out.exists()


def test_calibrate_and_reuse_observer(tmp_path):
    out = tmp_path / "observer.json"
    calibration = calibrate_pipeline(_cfg(**{"output.json_path": str(out)}))
    payload = json.loads(out.read_text())
    assert payload["noise_sd"] == pytest.approx(calibration.observer.noise_sd)
    assert payload["target_jnd"] == 1.2818
    observer = resolve_observer(_cfg(**{"observer.observer_path": str(out)}))
    assert observer == calibration.observer


def test_resolve_observer_with_explicit_noise():
    observer = resolve_observer(_cfg(**{"observer.noise_sd": 0.5, "observer.response": "linear"}))
    assert observer.noise_sd == 0.5
    assert observer.response_map.to_dict()["kind"] == "linear"
