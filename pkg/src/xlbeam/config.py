"""System parameters, subcarrier grid, antenna index sets and polar coordinates."""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Mapping

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

# Fraction of 2D^2/lambda used for the effective Rayleigh distance.
EFFECTIVE_RAYLEIGH_FACTOR = 0.367
FRESNEL_APERTURE_FACTOR = 1.2


class ConfigError(ValueError):
    """A violated configuration invariant.

    ``code`` names the rule that failed and ``parameter`` the offending field,
    so callers can react to a specific violation without parsing the message.
    When several rules fail together, ``violations`` lists every
    ``(code, parameter, message)`` triple and ``code`` is the first one.
    """

    def __init__(self, code: str, parameter: str, message: str, violations=None):
        self.violations = list(violations or [(code, parameter, message)])
        super().__init__("; ".join(f"{p}: {m}" for _, p, m in self.violations))
        self.code = code
        self.parameter = parameter

    @classmethod
    def combine(cls, violations) -> "ConfigError":
        code, parameter, message = violations[0]
        return cls(code, parameter, message, violations)


class SubarraySizeWarning(UserWarning):
    """Central subarray larger than the near-range far-field sizing rule allows."""


class GeometryError(ValueError):
    pass


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts) + 30.0


@dataclass(frozen=True)
class SystemConfig:
    """Physical and algorithmic parameters of the XL-array link.

    Frequencies are in Hz, powers in watts and ranges in meters. The defaults
    are the 513-antenna, 60 GHz / 3 GHz setup used throughout the simulations.
    """

    num_antennas_total: int = 513
    subarray_antennas: int = 129
    activation_interval: int = 8
    carrier_freq: float = 60e9
    bandwidth: float = 3e9
    num_subcarriers: int = 1024
    transmit_power: float = 1.0
    noise_power: float = 1e-11
    range_bounds: tuple[float, float] = (10.0, 50.0)

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq

    @property
    def antenna_spacing(self) -> float:
        return self.wavelength / 2.0

    @property
    def sparse_antennas(self) -> int:
        """Number of active elements in the sparse central subarray."""
        return (self.subarray_antennas - 1) // self.activation_interval + 1

    @property
    def aperture(self) -> float:
        return (self.num_antennas_total - 1) * self.antenna_spacing

    @property
    def fresnel_distance(self) -> float:
        return FRESNEL_APERTURE_FACTOR * self.aperture

    @property
    def rayleigh_distance(self) -> float:
        return EFFECTIVE_RAYLEIGH_FACTOR * 2.0 * self.aperture**2 / self.wavelength

    @property
    def subarray_rayleigh_distance(self) -> float:
        sub_aperture = (self.subarray_antennas - 1) * self.antenna_spacing
        return EFFECTIVE_RAYLEIGH_FACTOR * 2.0 * sub_aperture**2 / self.wavelength

    @property
    def max_subarray_antennas(self) -> float:
        r_min = self.range_bounds[0]
        return math.sqrt(r_min / (EFFECTIVE_RAYLEIGH_FACTOR * self.antenna_spacing))

    @property
    def r_min(self) -> float:
        return float(self.range_bounds[0])

    @property
    def r_max(self) -> float:
        return float(self.range_bounds[1])

    def replace(self, **changes: Any) -> "SystemConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["range_bounds"] = [float(v) for v in self.range_bounds]
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SystemConfig":
        """Build a config from a flat mapping, parsing unit suffixes.

        Unknown keys raise :class:`ConfigError`. Quantities may be plain
        numbers in SI units or strings such as ``"60 GHz"``, ``"30 dBm"`` and
        ``"10 m"``.
        """
        known = {f.name for f in fields(cls)}
        kwargs: dict[str, Any] = {}
        for key, value in data.items():
            if key not in known:
                raise ConfigError("unknown_key", key, "unknown configuration key")
            kwargs[key] = _PARSERS[key](key, value)
        return cls(**kwargs)


def _parse_int(key: str, value: Any) -> int:
    if isinstance(value, bool):
        raise ConfigError("not_integer", key, f"expected an integer, got {value!r}")
    if isinstance(value, str):
        value = value.strip()
        if not re.fullmatch(r"[+-]?\d+", value):
            raise ConfigError("not_integer", key, f"expected an integer, got {value!r}")
        return int(value)
    if isinstance(value, float):
        if not value.is_integer():
            raise ConfigError("not_integer", key, f"expected an integer, got {value!r}")
        return int(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    raise ConfigError("not_integer", key, f"expected an integer, got {value!r}")


_QUANTITY = re.compile(r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*([A-Za-z]*)\s*$")

_FREQ_UNITS = {"": 1.0, "hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9, "thz": 1e12}
_LENGTH_UNITS = {"": 1.0, "m": 1.0, "cm": 1e-2, "mm": 1e-3, "km": 1e3}


def parse_quantity(key: str, value: Any, kind: str) -> float:
    """Convert ``value`` to SI units; ``kind`` is ``freq``, ``power`` or ``length``."""
    if isinstance(value, (int, float, np.integer, np.floating)) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, str):
        raise ConfigError("bad_quantity", key, f"cannot parse {value!r}")
    m = _QUANTITY.match(value)
    if m is None:
        raise ConfigError("bad_quantity", key, f"cannot parse {value!r}")
    number, unit = float(m.group(1)), m.group(2).lower()
    if kind == "freq" and unit in _FREQ_UNITS:
        return number * _FREQ_UNITS[unit]
    if kind == "length" and unit in _LENGTH_UNITS:
        return number * _LENGTH_UNITS[unit]
    if kind == "power":
        if unit in ("", "w"):
            return number
        if unit == "mw":
            return number * 1e-3
        if unit == "dbm":
            return dbm_to_watts(number)
        if unit == "dbw":
            return 10.0 ** (number / 10.0)
    raise ConfigError("bad_unit", key, f"unit {m.group(2)!r} not valid for a {kind}")


def _parse_bounds(key: str, value: Any) -> tuple[float, float]:
    if isinstance(value, str):
        value = [v for v in re.split(r"[,\s]+(?=[+\-\d.])", value.strip("[]() ")) if v]
    try:
        lo, hi = value
    except (TypeError, ValueError):
        raise ConfigError("bad_quantity", key, "expected [r_min, r_max]") from None
    return (parse_quantity(key, lo, "length"), parse_quantity(key, hi, "length"))


_PARSERS = {
    "num_antennas_total": _parse_int,
    "subarray_antennas": _parse_int,
    "activation_interval": _parse_int,
    "num_subcarriers": _parse_int,
    "carrier_freq": lambda k, v: parse_quantity(k, v, "freq"),
    "bandwidth": lambda k, v: parse_quantity(k, v, "freq"),
    "transmit_power": lambda k, v: parse_quantity(k, v, "power"),
    "noise_power": lambda k, v: parse_quantity(k, v, "power"),
    "range_bounds": _parse_bounds,
}


def validate_config(cfg: SystemConfig) -> SystemConfig:
    """Check every invariant of ``cfg`` and return it unchanged.

    Raises:
        ConfigError: ``code`` identifies the violated rule. The array
            structure rules (parity, divisibility, sizes) are checked together
            and all failures are listed in ``violations``; the remaining
            rules stop at the first failure.

    A central subarray that exceeds the near-range sizing rule
    ``Q <= sqrt(r_min / (0.367 d_c))`` only emits :class:`SubarraySizeWarning`,
    since the reference 129-antenna setup itself exceeds it at r_min = 10 m.
    """
    N, Q, U, M = (
        cfg.num_antennas_total,
        cfg.subarray_antennas,
        cfg.activation_interval,
        cfg.num_subcarriers,
    )
    for name, value in (
        ("num_antennas_total", N),
        ("subarray_antennas", Q),
        ("activation_interval", U),
        ("num_subcarriers", M),
    ):
        if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
            raise ConfigError("not_integer", name, f"must be an integer, got {value!r}")
        if value < 1:
            raise ConfigError("not_positive", name, f"must be positive, got {value}")
    # the array-structure rules are reported together
    found = []
    if N % 2 == 0:
        found.append(("not_odd", "num_antennas_total", f"N must be odd, got {N}"))
    if Q % 2 == 0:
        found.append(("not_odd", "subarray_antennas", f"Q must be odd, got {Q}"))
    if Q > N:
        found.append(("subarray_too_large", "subarray_antennas", f"Q={Q} exceeds N={N}"))
    if (Q - 1) % U != 0:
        found.append(("not_divisible", "subarray_antennas", f"(Q-1) not divisible by U (Q={Q}, U={U})"))
    if U > Q:
        found.append(("interval_too_large", "activation_interval", f"U={U} exceeds Q={Q}"))
    if found:
        raise ConfigError.combine(found)

    if not math.isfinite(cfg.carrier_freq) or cfg.carrier_freq <= 0:
        raise ConfigError("not_positive", "carrier_freq", "carrier frequency must be positive")
    if not math.isfinite(cfg.bandwidth) or cfg.bandwidth <= 0:
        raise ConfigError("not_positive", "bandwidth", "bandwidth must be positive")
    if cfg.bandwidth >= cfg.carrier_freq:
        raise ConfigError("bandwidth_too_wide", "bandwidth", "bandwidth must be below the carrier")
    if not cfg.transmit_power > 0:
        raise ConfigError("not_positive", "transmit_power", "transmit power must be positive")
    if not cfg.noise_power >= 0:
        raise ConfigError("negative", "noise_power", "noise power must be non-negative")

    r_min, r_max = cfg.range_bounds
    if not (0 < r_min <= r_max) or not math.isfinite(r_max):
        raise ConfigError("bad_bounds", "range_bounds", f"need 0 < r_min <= r_max, got {cfg.range_bounds}")
    if r_min <= cfg.fresnel_distance:
        raise ConfigError(
            "inside_fresnel",
            "range_bounds",
            f"r_min={r_min} m not beyond the Fresnel distance {cfg.fresnel_distance:.4g} m",
        )
    if r_max >= cfg.rayleigh_distance:
        raise ConfigError(
            "beyond_rayleigh",
            "range_bounds",
            f"r_max={r_max} m not inside the effective Rayleigh distance {cfg.rayleigh_distance:.4g} m",
        )
    if r_max <= cfg.subarray_rayleigh_distance:
        raise ConfigError(
            "subarray_near_field",
            "subarray_antennas",
            f"r_max={r_max} m inside the subarray Rayleigh distance "
            f"{cfg.subarray_rayleigh_distance:.4g} m",
        )
    if Q > cfg.max_subarray_antennas:
        warnings.warn(
            f"Q={Q} exceeds sqrt(r_min/(0.367 d_c)) = {cfg.max_subarray_antennas:.1f}; "
            "users near r_min sit inside the subarray's near field",
            SubarraySizeWarning,
            stacklevel=2,
        )
    return cfg


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Subcarrier frequencies ``f_1 < ... < f_M`` around the carrier."""

    freqs: np.ndarray
    carrier: float
    bandwidth: float

    @property
    def num_subcarriers(self) -> int:
        return len(self.freqs)

    @property
    def ratios(self) -> np.ndarray:
        return self.freqs / self.carrier

    @property
    def f_low(self) -> float:
        return float(self.freqs[0])

    @property
    def f_high(self) -> float:
        return float(self.freqs[-1])

    @property
    def rho_low(self) -> float:
        return self.f_low / self.carrier

    @property
    def rho_high(self) -> float:
        return self.f_high / self.carrier

    @property
    def spacing(self) -> float:
        return self.bandwidth / self.num_subcarriers

    @property
    def wavelengths(self) -> np.ndarray:
        return SPEED_OF_LIGHT / self.freqs

    def freq(self, m: int) -> float:
        """Frequency of subcarrier ``m`` (1-based)."""
        if not 1 <= m <= self.num_subcarriers:
            raise IndexError(f"subcarrier index {m} outside 1..{self.num_subcarriers}")
        return float(self.freqs[m - 1])

    def nearest_index(self, freq: float) -> int:
        """1-based index of the subcarrier closest to ``freq`` (ties go low)."""
        return int(np.argmin(np.abs(self.freqs - freq))) + 1

    @property
    def central_index(self) -> int:
        return self.nearest_index(self.carrier)


def make_frequency_grid(cfg: SystemConfig) -> FrequencyGrid:
    M = cfg.num_subcarriers
    m = np.arange(1, M + 1)
    freqs = cfg.carrier_freq + (m - 1 - (M - 1) / 2) * cfg.bandwidth / M
    freqs.setflags(write=False)
    return FrequencyGrid(freqs=freqs, carrier=cfg.carrier_freq, bandwidth=cfg.bandwidth)


@dataclass(frozen=True, eq=False)
class AntennaIndexSet:
    """Symmetric antenna indices and the physical spacing between them.

    For the sparse subarray the indices are the active-element indices
    ``q~`` and ``spacing`` is ``U * d_c``.
    """

    kind: str
    indices: np.ndarray
    spacing: float

    @property
    def count(self) -> int:
        return len(self.indices)

    @property
    def positions(self) -> np.ndarray:
        return self.indices * self.spacing


def _symmetric(count: int) -> np.ndarray:
    half = (count - 1) // 2
    idx = np.arange(-half, half + 1)
    idx.setflags(write=False)
    return idx


def full_array(cfg: SystemConfig) -> AntennaIndexSet:
    return AntennaIndexSet("full", _symmetric(cfg.num_antennas_total), cfg.antenna_spacing)


def dense_subarray(cfg: SystemConfig, size: int | None = None) -> AntennaIndexSet:
    return AntennaIndexSet(
        "dense_subarray", _symmetric(size or cfg.subarray_antennas), cfg.antenna_spacing
    )


def sparse_subarray(cfg: SystemConfig) -> AntennaIndexSet:
    return AntennaIndexSet(
        "sparse_subarray",
        _symmetric(cfg.sparse_antennas),
        cfg.activation_interval * cfg.antenna_spacing,
    )


def make_geometry(cfg: SystemConfig, kind: str) -> AntennaIndexSet:
    builders = {"full": full_array, "dense_subarray": dense_subarray, "sparse_subarray": sparse_subarray}
    try:
        return builders[kind](cfg)
    except KeyError:
        raise GeometryError(f"unknown geometry {kind!r}; expected one of {sorted(builders)}") from None


def curvature(r, theta):
    """``mu = (1 - theta^2) / (2 r)``; works elementwise on arrays."""
    return (1.0 - np.square(theta)) / (2.0 * np.asarray(r, dtype=float))


def range_from_curvature(mu, theta):
    return (1.0 - np.square(theta)) / (2.0 * np.asarray(mu, dtype=float))


@dataclass(frozen=True)
class PolarPoint:
    """User location by range (m) and spatial angle ``theta = sin(phi)``."""

    range: float
    angle: float
    mu: float = field(init=False, repr=False)

    def __post_init__(self):
        if not (math.isfinite(self.range) and self.range > 0):
            raise ValueError(f"range must be positive, got {self.range}")
        if not -1.0 <= self.angle < 1.0:
            raise ValueError(f"angle must lie in [-1, 1), got {self.angle}")
        object.__setattr__(self, "mu", (1.0 - self.angle**2) / (2.0 * self.range))

    @property
    def cartesian(self) -> tuple[float, float]:
        """(x, y) with the array along the y axis."""
        return (self.range * math.sqrt(1.0 - self.angle**2), self.range * self.angle)


def polar_from_range_angle(r: float, theta: float) -> PolarPoint:
    return PolarPoint(float(r), float(theta))


def polar_from_mu_angle(mu: float, theta: float) -> PolarPoint:
    if not (math.isfinite(mu) and mu > 0):
        raise ValueError(f"curvature must be positive, got {mu}")
    if not -1.0 < theta < 1.0:
        # theta = -1 maps every mu to r = 0
        raise ValueError(f"angle must lie in (-1, 1) to invert the curvature, got {theta}")
    return PolarPoint((1.0 - theta**2) / (2.0 * mu), float(theta))
