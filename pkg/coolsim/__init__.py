from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("coolsim")
except PackageNotFoundError:  # pragma: no cover - fallback for dev environments
    try:
        from setuptools_scm import get_version
        from pathlib import Path

        _root = Path(__file__).resolve().parent.parent
        __version__ = get_version(root=_root)
    except Exception:
        __version__ = "0.0.0.dev0"

try:
    from .errors import (
        CoolsimError,
        InvalidInputError,
        CalibrationError,
        DegenerateDataError,
        TrialFormatError,
    )

    from .cooling_model import (
        AirState,
        BodyPatch,
        NozzleGeometry,
        CoolingCoefficient,
        cooling_coefficient,
        equilibrium_temperature,
        temperature_drop,
        published_coefficient,
        published_temperature_drop,
        predict_drop,
        preset,
    )

    from .device_model import (
        VortexTubeSpec,
        ValveCommand,
        ValveCalibration,
        load_calibration,
        cold_air_temperature,
        duty_to_velocity,
        velocity_to_duty,
        flow_velocity_from_supply,
    )

    from .experiment_processers import (
        SensorTransientScenario,
        simulate_sensor_transient,
        transient_summary,
        reference_measurements,
        run_phantom_experiment,
        skin_prediction,
    )

    from .psychophys_processers import (
        StimulusSchedule,
        ObserverModel,
        PsychometricFit,
        build_schedule,
        session_timeline,
        simulate_trial,
        simulate_session,
        fit_psychometric,
        jnd,
        calibrate_observer,
        replicate_sessions,
        summarize_jnds,
        simulate_cohort,
        read_trials_csv,
    )

    from .viewers import (
        plot_transient,
        plot_calibration,
        plot_comparison,
        plot_jnd_box,
        plot_psychometric,
        gen_html_report,
    )
except ModuleNotFoundError:  # pragma: no cover - allow __version__ without deps
    pass

__all__ = [
    # Errors
    "CoolsimError",
    "InvalidInputError",
    "CalibrationError",
    "DegenerateDataError",
    "TrialFormatError",
    # Thermal model
    "AirState",
    "BodyPatch",
    "NozzleGeometry",
    "CoolingCoefficient",
    "cooling_coefficient",
    "equilibrium_temperature",
    "temperature_drop",
    "published_coefficient",
    "published_temperature_drop",
    "predict_drop",
    "preset",
    # Device
    "VortexTubeSpec",
    "ValveCommand",
    "ValveCalibration",
    "load_calibration",
    "cold_air_temperature",
    "duty_to_velocity",
    "velocity_to_duty",
    "flow_velocity_from_supply",
    # Experiments
    "SensorTransientScenario",
    "simulate_sensor_transient",
    "transient_summary",
    "reference_measurements",
    "run_phantom_experiment",
    "skin_prediction",
    # Psychophysics
    "StimulusSchedule",
    "ObserverModel",
    "PsychometricFit",
    "build_schedule",
    "session_timeline",
    "simulate_trial",
    "simulate_session",
    "fit_psychometric",
    "jnd",
    "calibrate_observer",
    "replicate_sessions",
    "summarize_jnds",
    "simulate_cohort",
    "read_trials_csv",
    # Reports
    "plot_transient",
    "plot_calibration",
    "plot_comparison",
    "plot_jnd_box",
    "plot_psychometric",
    "gen_html_report",
]
