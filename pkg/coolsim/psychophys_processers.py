"""Method of constant stimuli for cold-air velocity discrimination.

A session pairs a fixed standard velocity with each comparison velocity a
fixed number of times, in random order and with random presentation order
inside each pair. The observer answers which interval felt colder.
Responses are summarised as the proportion of "comparison colder" answers
per comparison level and fitted with a cumulative Gaussian

    P(colder | v) = Phi((v - mu) / sigma)

by maximum likelihood over individual trials. The JND is half the distance
between the 25 % and 75 % points, i.e. ``Phi^-1(0.75) * sigma``.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import IO, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import optimize
from scipy.stats import norm

from .cooling_model import cooling_coefficient, preset
from .errors import (
    CalibrationError,
    DegenerateDataError,
    InvalidInputError,
    TrialFormatError,
)

logger = logging.getLogger(__name__)

Z75 = float(norm.ppf(0.75))

SIGMA_BOUNDS = (0.05, 5.0)
MU_GRID_POINTS = 61
SIGMA_GRID_POINTS = 60

ORDER_STREAM = 0
NOISE_STREAM = 1

TRIAL_COLUMNS = [
    "trial",
    "comparison_mps",
    "standard_mps",
    "comparison_first",
    "response_comparison_colder",
]

DEFAULT_COMPARISONS: Tuple[float, ...] = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5)


# --- schedule ----------------------------------------------------------------


@dataclass(frozen=True)
class StimulusSchedule:
    """Constant-stimuli session layout.

    Durations are in seconds: each trial presents the first stimulus for
    ``stimulus_duration``, closes the valve for ``gap_duration``, presents
    the second stimulus and then waits ``response_duration`` for the
    answer. A break of ``break_duration`` follows every ``break_every``
    trials.
    """

    standard: float = 2.0
    comparisons: Tuple[float, ...] = DEFAULT_COMPARISONS
    trials_per_comparison: int = 10
    stimulus_duration: float = 2.0
    gap_duration: float = 1.0
    break_every: int = 10
    rng_seed: int = 0
    response_duration: float = 2.0
    break_duration: float = 60.0
    max_velocity: float = 3.7

    def __post_init__(self) -> None:
        object.__setattr__(self, "comparisons", tuple(float(c) for c in self.comparisons))
        if not self.comparisons:
            raise InvalidInputError("comparison list is empty")
        if self.trials_per_comparison <= 0:
            raise InvalidInputError("trials_per_comparison must be > 0")
        for name in ("stimulus_duration", "gap_duration", "response_duration"):
            if getattr(self, name) <= 0:
                raise InvalidInputError(f"{name} must be > 0")
        if self.break_duration < 0:
            raise InvalidInputError("break_duration must be >= 0")
        if self.break_every <= 0:
            raise InvalidInputError("break_every must be > 0")
        for v in (self.standard, *self.comparisons):
            if not 0 <= v <= self.max_velocity:
                raise InvalidInputError(
                    f"velocity {v} m/s outside calibrated range 0-{self.max_velocity} m/s"
                )

    @property
    def n_trials(self) -> int:
        return len(self.comparisons) * self.trials_per_comparison


@dataclass(frozen=True)
class ScheduledTrial:
    trial_index: int
    comparison: float
    standard: float
    comparison_first: bool


@dataclass(frozen=True)
class TrialRecord:
    """One answered trial."""

    trial_index: int
    comparison: float
    standard: float
    comparison_first: bool
    response_comparison_colder: bool


def _stream(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), stream])


def build_schedule(
    cfg: StimulusSchedule,
) -> Tuple[StimulusSchedule, List[ScheduledTrial]]:
    """Randomise the trial order for a schedule.

    Each comparison appears exactly ``trials_per_comparison`` times and the
    presentation order inside each trial is drawn per trial. The result
    depends only on ``cfg.rng_seed``.
    """
    rng = _stream(cfg.rng_seed, ORDER_STREAM)
    levels = np.repeat(np.array(cfg.comparisons), cfg.trials_per_comparison)
    order = rng.permutation(levels)
    comparison_first = rng.random(order.size) < 0.5
    trials = [
        ScheduledTrial(i + 1, float(v), cfg.standard, bool(first))
        for i, (v, first) in enumerate(zip(order, comparison_first))
    ]
    return cfg, trials


def session_timeline(
    schedule: StimulusSchedule, trials: Sequence[ScheduledTrial]
) -> pd.DataFrame:
    """Onset and offset times (s) of every phase of every trial."""
    rows = []
    clock = 0.0
    for position, trial in enumerate(trials, start=1):
        first_on = clock
        first_off = first_on + schedule.stimulus_duration
        second_on = first_off + schedule.gap_duration
        second_off = second_on + schedule.stimulus_duration
        response_end = second_off + schedule.response_duration
        rest = position % schedule.break_every == 0 and position < len(trials)
        rows.append(
            {
                "trial": trial.trial_index,
                "first_on_s": first_on,
                "first_off_s": first_off,
                "second_on_s": second_on,
                "second_off_s": second_off,
                "response_end_s": response_end,
                "break_after": rest,
            }
        )
        clock = response_end + (schedule.break_duration if rest else 0.0)
    return pd.DataFrame(rows)


# --- observer ----------------------------------------------------------------


@dataclass(frozen=True)
class LinearResponse:
    """Internal coldness ``slope * v + intercept``."""

    slope: float = 1.0
    intercept: float = 0.0

    def __post_init__(self) -> None:
        if self.slope <= 0:
            raise InvalidInputError("slope must be > 0")

    def __call__(self, v):
        return self.slope * np.asarray(v, dtype=float) + self.intercept

    def derivative(self, v):
        return np.full_like(np.asarray(v, dtype=float), self.slope)

    def to_dict(self) -> Dict[str, float]:
        return {"kind": "linear", "slope": self.slope, "intercept": self.intercept}


@dataclass(frozen=True)
class SkinCoolingResponse:
    """Internal coldness equal to the predicted skin drop after ``duration`` s."""

    duration: float = 2.0
    k: Optional[float] = None
    body_temperature: Optional[float] = None
    air_temperature: Optional[float] = None

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise InvalidInputError("duration must be > 0")
        if self.k is None or self.body_temperature is None or self.air_temperature is None:
            air, body, geom = preset("skin")
            if self.k is None:
                object.__setattr__(self, "k", cooling_coefficient(air, geom, body).k)
            if self.body_temperature is None:
                object.__setattr__(self, "body_temperature", body.temperature)
            if self.air_temperature is None:
                object.__setattr__(self, "air_temperature", air.temperature)
        if self.body_temperature <= self.air_temperature:
            raise InvalidInputError("skin must be warmer than the air for a cooling response")

    def __call__(self, v):
        kvt = self.k * np.asarray(v, dtype=float) * self.duration
        return kvt * (self.body_temperature - self.air_temperature) / (kvt + 1)

    def derivative(self, v):
        kvt = self.k * np.asarray(v, dtype=float) * self.duration
        gain = self.k * self.duration * (self.body_temperature - self.air_temperature)
        return gain / (kvt + 1) ** 2

    def to_dict(self) -> Dict[str, float]:
        return {
            "kind": "skin",
            "duration": self.duration,
            "k": self.k,
            "body_temperature": self.body_temperature,
            "air_temperature": self.air_temperature,
        }


ResponseMap = Union[LinearResponse, SkinCoolingResponse]


def response_map_from_dict(data: Dict) -> ResponseMap:
    kind = data.get("kind")
    params = {key: value for key, value in data.items() if key != "kind"}
    if kind == "linear":
        return LinearResponse(**params)
    if kind == "skin":
        return SkinCoolingResponse(**params)
    raise InvalidInputError(f"unknown response map kind {kind!r}")


@dataclass(frozen=True)
class ObserverModel:
    """Simulated participant: noisy internal coldness per interval."""

    noise_sd: float
    response_map: ResponseMap = field(default_factory=SkinCoolingResponse)
    domain: Tuple[float, float] = (0.0, 10.0)

    def __post_init__(self) -> None:
        if not self.noise_sd > 0:
            raise InvalidInputError(f"noise_sd must be > 0, got {self.noise_sd}")
        lo, hi = self.domain
        grid = np.linspace(lo, hi, 201)
        if np.any(np.diff(self.response_map(grid)) <= 0):
            raise InvalidInputError("response_map must be strictly increasing over its domain")

    def to_dict(self) -> Dict:
        return {
            "noise_sd": self.noise_sd,
            "response_map": self.response_map.to_dict(),
            "domain": list(self.domain),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "ObserverModel":
        return cls(
            noise_sd=float(data["noise_sd"]),
            response_map=response_map_from_dict(data["response_map"]),
            domain=tuple(data.get("domain", (0.0, 10.0))),
        )


def _check_domain(observer: ObserverModel, *velocities: float) -> None:
    lo, hi = observer.domain
    for v in velocities:
        if not lo <= v <= hi:
            raise InvalidInputError(f"velocity {v} outside observer domain {observer.domain}")


def simulate_trial(
    observer: ObserverModel, trial: ScheduledTrial, rng: np.random.Generator
) -> TrialRecord:
    """Answer one trial.

    Two noisy internal responses are drawn in presentation order; the
    comparison is called colder when its response is larger.
    """
    _check_domain(observer, trial.comparison, trial.standard)
    first_noise, second_noise = rng.normal(0.0, observer.noise_sd, size=2)
    comparison_noise, standard_noise = (
        (first_noise, second_noise) if trial.comparison_first else (second_noise, first_noise)
    )
    r_comparison = float(observer.response_map(trial.comparison)) + comparison_noise
    r_standard = float(observer.response_map(trial.standard)) + standard_noise
    return TrialRecord(
        trial_index=trial.trial_index,
        comparison=trial.comparison,
        standard=trial.standard,
        comparison_first=trial.comparison_first,
        response_comparison_colder=bool(r_comparison > r_standard),
    )


def simulate_session(
    observer: ObserverModel, trials: Sequence[ScheduledTrial], seed: int
) -> List[TrialRecord]:
    """Answer every trial with a noise stream seeded independently of the order."""
    rng = _stream(seed, NOISE_STREAM)
    return [simulate_trial(observer, trial, rng) for trial in trials]


# --- fitting -----------------------------------------------------------------


@dataclass(frozen=True)
class PsychometricFit:
    """Maximum-likelihood cumulative-Gaussian fit.

    ``levels`` holds ``(velocity, n, k_colder)`` per comparison level.
    """

    mu: float
    sigma: float
    jnd: float
    log_likelihood: float
    levels: Tuple[Tuple[float, int, int], ...]
    converged: bool = True

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise InvalidInputError("sigma must be > 0")
        if abs(self.jnd - Z75 * self.sigma) > 1e-9 * max(1.0, self.sigma):
            raise InvalidInputError("jnd must equal Phi^-1(0.75) * sigma")

    def probability(self, v):
        return norm.cdf((np.asarray(v, dtype=float) - self.mu) / self.sigma)

    def to_dict(self) -> Dict:
        return {
            "mu": self.mu,
            "sigma": self.sigma,
            "jnd": self.jnd,
            "log_likelihood": self.log_likelihood,
            "levels": [{"v": v, "n": n, "k": k} for v, n, k in self.levels],
        }


def level_table(records: Iterable[TrialRecord]) -> pd.DataFrame:
    """Count trials and "comparison colder" answers per comparison level."""
    frame = pd.DataFrame(
        [(r.comparison, int(r.response_comparison_colder)) for r in records],
        columns=["velocity", "colder"],
    )
    if frame.empty:
        return pd.DataFrame(columns=["velocity", "n", "k_colder", "proportion"])
    table = (
        frame.groupby("velocity", sort=True)["colder"]
        .agg(n="count", k_colder="sum")
        .reset_index()
    )
    table["proportion"] = table["k_colder"] / table["n"]
    return table


def _negative_log_likelihood(params, v, n, k):
    mu, sigma = params
    z = (v - mu) / sigma
    return -float(np.sum(k * norm.logcdf(z) + (n - k) * norm.logcdf(-z)))


def _negative_log_likelihood_grad(params, v, n, k):
    mu, sigma = params
    z = (v - mu) / sigma
    log_pdf = norm.logpdf(z)
    dl_dz = k * np.exp(log_pdf - norm.logcdf(z)) - (n - k) * np.exp(log_pdf - norm.logcdf(-z))
    return np.array([np.sum(dl_dz) / sigma, np.sum(dl_dz * z) / sigma])


def fit_levels(velocities, n, k) -> PsychometricFit:
    """Fit ``Phi((v - mu)/sigma)`` to per-level counts.

    A coarse grid over ``mu`` (tested range) and ``sigma`` (0.05-5,
    log-spaced) seeds a bounded L-BFGS-B refinement with an analytic
    gradient.

    Raises
    ------
    DegenerateDataError
        With fewer than two tested levels or when every answer is the same.
    """
    v = np.asarray(velocities, dtype=float)
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    keep = n > 0
    v, n, k = v[keep], n[keep], k[keep]
    if np.unique(v).size < 2:
        raise DegenerateDataError("need at least two comparison levels with responses")
    if np.all(k == 0) or np.all(k == n):
        raise DegenerateDataError(
            "all responses identical; the psychometric fit cannot converge"
        )

    lo, hi = float(v.min()), float(v.max())
    mu_grid = np.linspace(lo, hi, MU_GRID_POINTS)
    sigma_grid = np.geomspace(*SIGMA_BOUNDS, SIGMA_GRID_POINTS)
    z = (v[None, None, :] - mu_grid[:, None, None]) / sigma_grid[None, :, None]
    surface = -np.sum(k * norm.logcdf(z) + (n - k) * norm.logcdf(-z), axis=2)
    i, j = np.unravel_index(np.argmin(surface), surface.shape)
    start = np.array([mu_grid[i], sigma_grid[j]])

    span = hi - lo
    result = optimize.minimize(
        _negative_log_likelihood,
        start,
        args=(v, n, k),
        jac=_negative_log_likelihood_grad,
        method="L-BFGS-B",
        bounds=[(lo - span, hi + span), SIGMA_BOUNDS],
        options={"gtol": 1e-8, "ftol": 1e-15, "maxiter": 1000},
    )
    mu, sigma = (float(x) for x in result.x)
    if result.fun > surface[i, j]:
        mu, sigma = float(start[0]), float(start[1])
    if math.isclose(sigma, SIGMA_BOUNDS[0]) or math.isclose(sigma, SIGMA_BOUNDS[1]):
        logger.warning("Fitted sigma %.4g sits on its bound %s", sigma, SIGMA_BOUNDS)
    logger.debug("Psychometric fit mu=%.6g sigma=%.6g (%s)", mu, sigma, result.message)

    levels = tuple((float(a), int(b), int(c)) for a, b, c in zip(v, n, k))
    return PsychometricFit(
        mu=mu,
        sigma=sigma,
        jnd=Z75 * sigma,
        log_likelihood=-_negative_log_likelihood((mu, sigma), v, n, k),
        levels=levels,
        converged=bool(result.success),
    )


def fit_psychometric(records: Iterable[TrialRecord]) -> PsychometricFit:
    """Maximum-likelihood psychometric fit over individual trials."""
    table = level_table(records)
    if table.empty:
        raise DegenerateDataError("no trials to fit")
    return fit_levels(table["velocity"], table["n"], table["k_colder"])


def _inverse_cdf(fit: PsychometricFit, q: float) -> float:
    lo, hi = fit.mu - 40 * fit.sigma, fit.mu + 40 * fit.sigma
    return optimize.bisect(
        lambda v: float(fit.probability(v)) - q, lo, hi, xtol=1e-10 * max(1.0, fit.sigma)
    )


def jnd(fit: PsychometricFit) -> float:
    """Half the distance between the fitted 75 % and 25 % points.

    The quantiles are found by bisection on the fitted curve and checked
    against ``Phi^-1(0.75) * sigma``.
    """
    value = (_inverse_cdf(fit, 0.75) - _inverse_cdf(fit, 0.25)) / 2
    if abs(value - Z75 * fit.sigma) > 1e-8 * max(1.0, fit.sigma):
        raise CalibrationError(
            f"numeric JND {value} disagrees with closed form {Z75 * fit.sigma}"
        )
    return value


# --- observer calibration ----------------------------------------------------


@dataclass(frozen=True)
class ObserverCalibration:
    observer: ObserverModel
    target_jnd: float
    standard: float
    asymptotic_jnd: float
    closed_form_noise_sd: float
    derivation: str

    def to_dict(self) -> Dict:
        return {
            **self.observer.to_dict(),
            "target_jnd": self.target_jnd,
            "standard": self.standard,
            "asymptotic_jnd": self.asymptotic_jnd,
            "closed_form_noise_sd": self.closed_form_noise_sd,
            "derivation": self.derivation,
        }


def _solve_level(response_map: ResponseMap, level: float, lo: float, hi: float) -> float:
    return optimize.bisect(lambda v: float(response_map(v)) - level, lo, hi, xtol=1e-12)


def asymptotic_jnd(
    noise_sd: float,
    response_map: ResponseMap,
    standard: float = 2.0,
    domain: Tuple[float, float] = (0.0, 10.0),
) -> float:
    """JND of the ideal psychometric curve for a given internal noise.

    With Gaussian noise in both intervals the response difference has
    standard deviation ``sqrt(2) * noise_sd``, so the quartile points are
    where ``f(v) - f(standard) = +/- Phi^-1(0.75) * sqrt(2) * noise_sd``.
    Returns NaN when a quartile point falls outside ``domain``.
    """
    lo, hi = domain
    f_standard = float(response_map(standard))
    delta = Z75 * math.sqrt(2) * noise_sd
    upper_level, lower_level = f_standard + delta, f_standard - delta
    if upper_level > float(response_map(hi)) or lower_level < float(response_map(lo)):
        return float("nan")
    upper = _solve_level(response_map, upper_level, standard, hi)
    lower = _solve_level(response_map, lower_level, lo, standard)
    return (upper - lower) / 2


def calibrate_observer(
    target_jnd: float,
    *,
    standard: float = 2.0,
    response_map: Optional[ResponseMap] = None,
    domain: Tuple[float, float] = (0.0, 10.0),
    tolerance: float = 0.01,
) -> ObserverCalibration:
    """Find the observer noise whose ideal curve has the requested JND.

    The closed form ``noise_sd = slope * JND / (Phi^-1(0.75) * sqrt(2))``
    holds for a linear response; bisection on :func:`asymptotic_jnd` handles
    curved responses.

    Raises
    ------
    CalibrationError
        When no noise level inside the response domain reaches the target.
    """
    if not target_jnd > 0:
        raise InvalidInputError(f"target_jnd must be > 0, got {target_jnd}")
    response_map = response_map if response_map is not None else SkinCoolingResponse()
    lo, hi = domain
    if not lo < standard < hi:
        raise InvalidInputError(f"standard {standard} outside domain {domain}")

    slope = float(response_map.derivative(standard))
    closed_form = slope * target_jnd / (Z75 * math.sqrt(2))

    f_standard = float(response_map(standard))
    headroom = min(float(response_map(hi)) - f_standard, f_standard - float(response_map(lo)))
    sd_max = headroom / (Z75 * math.sqrt(2))
    sd_min = sd_max * 1e-9
    reachable = asymptotic_jnd(sd_max * (1 - 1e-12), response_map, standard, domain)
    if not target_jnd <= reachable:
        raise CalibrationError(
            f"target JND {target_jnd} m/s unreachable; largest attainable is {reachable:.4g} m/s"
        )

    noise_sd = optimize.bisect(
        lambda sd: asymptotic_jnd(sd, response_map, standard, domain) - target_jnd,
        sd_min,
        sd_max * (1 - 1e-12),
        xtol=1e-14,
        rtol=1e-12,
    )
    achieved = asymptotic_jnd(noise_sd, response_map, standard, domain)
    if abs(achieved - target_jnd) > tolerance * target_jnd:
        raise CalibrationError(f"calibration missed target: {achieved} vs {target_jnd}")

    derivation = (
        "2AFC with Gaussian noise N(0, s^2) in each interval: "
        "P(colder) = Phi((f(v) - f(v_s)) / (sqrt(2) s)). "
        f"Linearised at v_s={standard}: slope f'={slope:.6g}, "
        f"s = f' * JND / (z75 * sqrt(2)) = {closed_form:.6g}. "
        f"Exact quartile inversion by bisection: s = {noise_sd:.6g}, "
        f"ideal JND = {achieved:.6g} m/s."
    )
    logger.info("Calibrated observer: noise_sd=%.6g for JND %.4g m/s", noise_sd, target_jnd)
    observer = ObserverModel(noise_sd=noise_sd, response_map=response_map, domain=domain)
    return ObserverCalibration(
        observer=observer,
        target_jnd=target_jnd,
        standard=standard,
        asymptotic_jnd=achieved,
        closed_form_noise_sd=closed_form,
        derivation=derivation,
    )


# --- replication and summaries ----------------------------------------------


def run_session(
    observer: ObserverModel, schedule: StimulusSchedule, seed: int
) -> Tuple[List[TrialRecord], Optional[PsychometricFit]]:
    """Build, answer and fit one session seeded with ``seed``."""
    _, trials = build_schedule(replace(schedule, rng_seed=seed))
    records = simulate_session(observer, trials, seed)
    try:
        fit = fit_psychometric(records)
    except DegenerateDataError as exc:
        logger.warning("Session seed %d not fitted: %s", seed, exc)
        fit = None
    return records, fit


def replicate_sessions(
    observer: ObserverModel,
    schedule: StimulusSchedule,
    n_sessions: int,
    base_seed: int = 0,
    workers: int = 1,
) -> pd.DataFrame:
    """Run ``n_sessions`` independent sessions with seeds ``base_seed + i``.

    Returns one row per session (``replicate``, ``seed``, ``mu``, ``sigma``,
    ``jnd``); unfittable sessions keep NaN parameters.
    """
    if n_sessions <= 0:
        raise InvalidInputError("n_sessions must be > 0")

    def one(index: int) -> Dict:
        seed = base_seed + index
        _, fit = run_session(observer, schedule, seed)
        return {
            "replicate": index,
            "seed": seed,
            "mu": fit.mu if fit else np.nan,
            "sigma": fit.sigma if fit else np.nan,
            "jnd": fit.jnd if fit else np.nan,
        }

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, range(n_sessions)))
    else:
        rows = [one(i) for i in range(n_sessions)]
    return pd.DataFrame(rows, columns=["replicate", "seed", "mu", "sigma", "jnd"])


def summarize_jnds(values: Iterable[float]) -> Dict[str, float]:
    """Mean, sample SD and box-plot statistics of a set of JNDs (NaN ignored)."""
    arr = np.asarray(list(values), dtype=float)
    arr = arr[np.isfinite(arr)]
    if arr.size == 0:
        raise DegenerateDataError("no JND values to summarise")
    q1, median, q3 = np.percentile(arr, [25, 50, 75])
    return {
        "n": int(arr.size),
        "mean": float(arr.mean()),
        "sd": float(arr.std(ddof=1)) if arr.size > 1 else float("nan"),
        "median": float(median),
        "q1": float(q1),
        "q3": float(q3),
        "min": float(arr.min()),
        "max": float(arr.max()),
    }


def simulate_cohort(
    observers: Sequence[ObserverModel], schedule: StimulusSchedule, seed: int = 0
) -> Tuple[pd.DataFrame, Dict[str, float]]:
    """One session per simulated participant plus the cohort JND summary."""
    rows = []
    for index, observer in enumerate(observers):
        _, fit = run_session(observer, schedule, seed + index)
        rows.append(
            {
                "participant": index + 1,
                "mu": fit.mu if fit else np.nan,
                "sigma": fit.sigma if fit else np.nan,
                "jnd": fit.jnd if fit else np.nan,
            }
        )
    frame = pd.DataFrame(rows, columns=["participant", "mu", "sigma", "jnd"])
    return frame, summarize_jnds(frame["jnd"])


# --- trial tables ------------------------------------------------------------


def trials_to_frame(records: Iterable[TrialRecord]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            (
                r.trial_index,
                r.comparison,
                r.standard,
                r.comparison_first,
                r.response_comparison_colder,
            )
            for r in records
        ],
        columns=TRIAL_COLUMNS,
    )


_TRUE = {"true", "1", "yes"}
_FALSE = {"false", "0", "no"}


def _parse_bool(text: str, column: str, line: int) -> bool:
    value = text.strip().lower()
    if value in _TRUE:
        return True
    if value in _FALSE:
        return False
    raise TrialFormatError(f"{column} must be true/false, got {text!r}", line)


def _parse_float(text: str, column: str, line: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise TrialFormatError(f"{column} must be a number, got {text!r}", line) from None
    if not math.isfinite(value) or value < 0:
        raise TrialFormatError(f"{column} must be a non-negative number", line)
    return value


def read_trials_csv(source: Union[str, Path, IO]) -> List[TrialRecord]:
    """Parse a trial CSV into records.

    Blank lines are skipped but still counted, so error positions match the
    file as shown in an editor.

    Raises
    ------
    TrialFormatError
        Naming the 1-based file line of the first malformed row.
    """
    frame = pd.read_csv(source, dtype=str, keep_default_na=False, skip_blank_lines=False)
    frame.columns = frame.columns.str.strip()
    missing = [c for c in TRIAL_COLUMNS if c not in frame.columns]
    if missing:
        raise TrialFormatError(f"missing columns: {', '.join(missing)}", 1)
    records = []
    for position, row in enumerate(frame.to_dict("records"), start=2):
        # short rows come back as NaN
        row = {key: value.strip() if isinstance(value, str) else "" for key, value in row.items()}
        if not any(row.values()):
            continue
        try:
            trial_index = int(row["trial"])
        except ValueError:
            raise TrialFormatError(f"trial must be an integer, got {row['trial']!r}", position) from None
        records.append(
            TrialRecord(
                trial_index=trial_index,
                comparison=_parse_float(row["comparison_mps"], "comparison_mps", position),
                standard=_parse_float(row["standard_mps"], "standard_mps", position),
                comparison_first=_parse_bool(row["comparison_first"], "comparison_first", position),
                response_comparison_colder=_parse_bool(
                    row["response_comparison_colder"], "response_comparison_colder", position
                ),
            )
        )
    return records
