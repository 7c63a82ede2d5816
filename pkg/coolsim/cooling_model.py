"""Lumped cooling model for a cold air jet striking a skin patch.

The jet delivers air of temperature ``T_a`` through an outlet of area ``A``
at velocity ``u``. The air is assumed to reach the patch temperature
immediately, so after ``t`` seconds the patch and the delivered air share an
equilibrium temperature ``T_f``. Everything reduces to a single coefficient

    k = (C_a * rho_a * A) / (C_s * rho_s * A_s * h_s)        [1/m]

and the temperature drop

    dT_s = k*u*(T_s - T_a)*t / (k*u*t + 1)

Units are SI throughout (J, kg, m, s, K). Presets convert the published
kJ and mm values when they are built.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Literal, Optional, Tuple

import numpy as np

from .errors import InvalidInputError

logger = logging.getLogger(__name__)

ZERO_CELSIUS = 273.15

Precision = Literal["full", "published"]
PRECISIONS: Tuple[str, ...] = ("full", "published")


def celsius_to_kelvin(celsius: float) -> float:
    return celsius + ZERO_CELSIUS


def kelvin_to_celsius(kelvin: float) -> float:
    return kelvin - ZERO_CELSIUS


def _require_positive(name: str, value: float) -> None:
    if not np.isfinite(value) or value <= 0:
        raise InvalidInputError(f"{name} must be > 0, got {value!r}")


def _require_non_negative(name: str, value) -> None:
    arr = np.asarray(value, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0):
        raise InvalidInputError(f"{name} must be >= 0, got {value!r}")


@dataclass(frozen=True)
class AirState:
    """Cold air delivered by the nozzle.

    Attributes
    ----------
    specific_heat : float
        ``C_a`` in J/(kg*K).
    density : float
        ``rho_a`` in kg/m^3.
    temperature : float
        ``T_a`` in K.
    """

    specific_heat: float
    density: float
    temperature: float

    def __post_init__(self) -> None:
        _require_positive("specific_heat", self.specific_heat)
        _require_positive("density", self.density)
        _require_positive("temperature", self.temperature)


@dataclass(frozen=True)
class BodyPatch:
    """The cooled slab, either skin or a silicon phantom.

    Attributes
    ----------
    specific_heat : float
        ``C_s`` in J/(kg*K).
    density : float
        ``rho_s`` in kg/m^3.
    area : float
        ``A_s`` in m^2.
    thickness : float
        ``h_s`` in m.
    temperature : float
        Initial temperature ``T_s`` in K.
    """

    specific_heat: float
    density: float
    area: float
    thickness: float
    temperature: float

    def __post_init__(self) -> None:
        for name in ("specific_heat", "density", "area", "thickness", "temperature"):
            _require_positive(name, getattr(self, name))


@dataclass(frozen=True)
class NozzleGeometry:
    """Outlet cross-section ``A`` (m^2) and standoff to the surface (m)."""

    outlet_area: float
    standoff: float = 0.0

    def __post_init__(self) -> None:
        _require_positive("outlet_area", self.outlet_area)
        _require_non_negative("standoff", self.standoff)


@dataclass(frozen=True)
class CoolingCoefficient:
    """The coefficient ``k`` in 1/m."""

    k: float

    def __post_init__(self) -> None:
        _require_positive("k", self.k)

    def __float__(self) -> float:
        return float(self.k)


def _k_value(k):
    if isinstance(k, CoolingCoefficient):
        return float(k.k)
    return float(k) if np.ndim(k) == 0 else np.asarray(k, dtype=float)


def flow_rate(u, geom: NozzleGeometry):
    """Volumetric flow rate ``K = u * A`` in m^3/s."""
    _require_non_negative("u", u)
    return u * geom.outlet_area


def air_mass(u, geom: NozzleGeometry, air: AirState, t):
    """Mass of cold air delivered in ``t`` seconds, ``rho_a * u * A * t``."""
    _require_non_negative("u", u)
    _require_non_negative("t", t)
    return air.density * flow_rate(u, geom) * t


def heat_absorbed(u, geom: NozzleGeometry, air: AirState, t, final_temperature):
    """Heat taken from the patch while the delivered air warms to ``T_f``.

    Positive when ``final_temperature`` is above the air temperature.
    """
    return air.specific_heat * air_mass(u, geom, air, t) * (
        final_temperature - air.temperature
    )


def body_mass(body: BodyPatch) -> float:
    """Mass of the cooled slab, ``rho_s * A_s * h_s``."""
    return body.density * body.area * body.thickness


def cooling_coefficient(
    air: AirState, geom: NozzleGeometry, body: BodyPatch
) -> CoolingCoefficient:
    """Compute ``k`` for the given air, nozzle and patch.

    Both specific heats must be in the same energy unit; they cancel.
    """
    numerator = air.specific_heat * air.density * geom.outlet_area
    denominator = body.specific_heat * body_mass(body)
    return CoolingCoefficient(numerator / denominator)


def equilibrium_temperature(k, u, t, body_temperature, air_temperature):
    """Common temperature ``T_f`` of patch and delivered air after ``t`` seconds.

    Parameters
    ----------
    k : CoolingCoefficient or float
        Cooling coefficient in 1/m.
    u : float or array-like
        Flow velocity in m/s.
    t : float or array-like
        Exposure time in s.
    body_temperature, air_temperature : float
        ``T_s`` and ``T_a`` in K.
    """
    _require_non_negative("u", u)
    _require_non_negative("t", t)
    kut = _k_value(k) * u * t
    return (body_temperature + kut * air_temperature) / (kut + 1)


def temperature_drop(k, u, t, body_temperature, air_temperature):
    """Temperature drop ``T_s - T_f`` of the patch after ``t`` seconds.

    Negative when the air is warmer than the patch. Depends on ``u`` and
    ``t`` only through their product.
    """
    _require_non_negative("u", u)
    _require_non_negative("t", t)
    kut = _k_value(k) * u * t
    return kut * (body_temperature - air_temperature) / (kut + 1)


def _round_half_up(value: float, decimals: int) -> float:
    quantum = Decimal(1).scaleb(-decimals)
    return float(Decimal(repr(float(value))).quantize(quantum, rounding=ROUND_HALF_UP))


def published_coefficient(k, decimals: int = 3) -> CoolingCoefficient:
    """Round ``k`` the way it is quoted in print (0.005 for silicon, 0.007 for skin)."""
    return CoolingCoefficient(_round_half_up(_k_value(k), decimals))


def published_temperature_drop(
    k,
    u,
    t,
    body_temperature,
    air_temperature,
    gain_decimals: Optional[int] = None,
):
    """Temperature drop evaluated with rounded, as-published coefficients.

    ``k`` is rounded to three decimals. The gain ``k*(T_s - T_a)`` is also
    rounded when ``gain_decimals`` is given, which is how the skin formula
    collapses to ``0.34*u*t / (0.007*u*t + 1)``.
    """
    _require_non_negative("u", u)
    _require_non_negative("t", t)
    k_r = published_coefficient(k).k
    gain = k_r * (body_temperature - air_temperature)
    if gain_decimals is not None:
        gain = _round_half_up(gain, gain_decimals)
    return gain * u * t / (k_r * u * t + 1)


# --- presets ---------------------------------------------------------------

_MM2 = 1e-6
_MM = 1e-3
_KJ = 1e3

_COLD_AIR = dict(specific_heat=1.005 * _KJ, density=1.37, temperature=257.15)
_NOZZLE = dict(outlet_area=19.64 * _MM2, standoff=5 * _MM)

_BODIES = {
    # silicon phantom sheet, 40 mm x 40 mm x 2 mm, spatial mean 21.30 C
    "silicon": dict(
        specific_heat=1.6 * _KJ,
        density=970.0,
        area=1600 * _MM2,
        thickness=2 * _MM,
        temperature=294.45,
    ),
    # epidermis above the cold receptors, skin at about 33 C
    "skin": dict(
        specific_heat=10.514 * _KJ,
        density=1200.0,
        area=1600 * _MM2,
        thickness=0.2 * _MM,
        temperature=306.15,
    ),
}

# Decimal places of k*(T_s - T_a) in the published closed forms.
PUBLISHED_GAIN_DECIMALS = {"silicon": None, "skin": 2}

PRESET_NAMES: Tuple[str, ...] = tuple(_BODIES)


def preset(name: str) -> Tuple[AirState, BodyPatch, NozzleGeometry]:
    """Return the ``(air, body, nozzle)`` parameter set for ``silicon`` or ``skin``."""
    key = name.strip().lower()
    if key not in _BODIES:
        raise InvalidInputError(
            f"Unknown preset {name!r}; expected one of {', '.join(PRESET_NAMES)}"
        )
    return AirState(**_COLD_AIR), BodyPatch(**_BODIES[key]), NozzleGeometry(**_NOZZLE)


def predict_drop(
    k,
    u,
    t,
    body_temperature,
    air_temperature,
    precision: Precision = "full",
    gain_decimals: Optional[int] = None,
):
    """Dispatch to :func:`temperature_drop` or :func:`published_temperature_drop`."""
    if precision == "full":
        return temperature_drop(k, u, t, body_temperature, air_temperature)
    if precision == "published":
        return published_temperature_drop(
            k, u, t, body_temperature, air_temperature, gain_decimals=gain_decimals
        )
    raise InvalidInputError(
        f"precision must be one of {', '.join(PRECISIONS)}, got {precision!r}"
    )
