"""Monte Carlo comparison of the training schemes over a transmit-power or range axis."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .benchmarks import (
    DEFAULT_RINGS,
    build_polar_codebook,
    dft_weights,
    exhaustive_polar_search,
    nearfield_rainbow_training,
    perfect_csi_beamformer,
    two_phase_training,
)
from .channel import LosChannel, los_channel, path_gain
from .config import (
    ConfigError,
    FrequencyGrid,
    PolarPoint,
    SystemConfig,
    dbm_to_watts,
    full_array,
    make_frequency_grid,
)
from .training import TrainingError, run_full_training

SCHEMES = ("proposed", "exhaustive", "rainbow", "two_phase", "perfect_csi")
AXES = ("transmit_power_dbm", "range")
COLUMNS = ("scheme", "axis", "snr_db", "nmse_angle", "nmse_range", "rate", "trials", "overhead")

_USER_STREAM = 0
_NOISE_STREAM = 1


def nmse(estimates, truths) -> float:
    """``E|x - x*|^2 / E|x|^2`` over paired samples."""
    est = np.asarray(estimates, dtype=float)
    tru = np.asarray(truths, dtype=float)
    if est.shape != tru.shape:
        raise ValueError(f"paired lists differ in shape: {est.shape} vs {tru.shape}")
    if est.size == 0:
        raise ValueError("need at least one pair")
    denom = np.mean(tru**2)
    if denom == 0:
        raise ValueError("NMSE undefined when every truth is zero")
    return float(np.mean((tru - est) ** 2) / denom)


def reference_snr(cfg: SystemConfig, user: PolarPoint, freq: float) -> float:
    """Literal reference SNR ``Q~ P_t beta_m / (r_0^2 sigma^2)`` (linear).

    This is an axis label only; no decision depends on it.
    """
    if cfg.noise_power == 0:
        return math.inf
    beta = float(path_gain(freq, user.range))
    return cfg.sparse_antennas * cfg.transmit_power * beta / (user.range**2 * cfg.noise_power)


def reference_snr_db(cfg: SystemConfig, user: PolarPoint, freq: float | None = None) -> float:
    freq = cfg.carrier_freq if freq is None else freq
    return 10.0 * math.log10(reference_snr(cfg, user, freq))


def achievable_rate(channel: LosChannel, weights: np.ndarray, cfg: SystemConfig) -> float:
    """Average spectral efficiency ``mean_m log2(1 + P_t |h_m^H w_m|^2 / sigma^2)``.

    ``weights`` is a single beamformer for all subcarriers or one row each.
    """
    g = np.abs(np.sum(channel.rows * np.asarray(weights), axis=-1)) ** 2
    if cfg.noise_power == 0:
        return math.inf if np.any(g > 0) else 0.0
    return float(np.mean(np.log2(1.0 + cfg.transmit_power * g / cfg.noise_power)))


@dataclass(frozen=True)
class UserDistribution:
    """Either a fixed location or uniform angle and range within bounds.

    ``range_bounds=None`` uses the configuration's validated range bounds.
    """

    kind: str = "uniform"
    angle: float = 0.0
    range: float = 30.0
    angle_bounds: tuple[float, float] = (-0.5, 0.5)
    range_bounds: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind not in ("fixed", "uniform"):
            raise ConfigError("bad_kind", "users", f"must be 'fixed' or 'uniform', got {self.kind!r}")
        lo, hi = self.angle_bounds
        if not -1.0 <= lo <= hi < 1.0:
            raise ConfigError("bad_bounds", "angle_bounds", f"need -1 <= a <= b < 1, got {self.angle_bounds}")

    def sample(self, rng: np.random.Generator, cfg: SystemConfig, fixed_range: float | None = None) -> PolarPoint:
        # always draw both numbers so the stream does not depend on the kind
        u_angle, u_range = rng.random(2)
        if self.kind == "fixed":
            theta, r = self.angle, self.range
        else:
            a, b = self.angle_bounds
            lo, hi = self.range_bounds or cfg.range_bounds
            theta = a + (b - a) * u_angle
            r = lo + (hi - lo) * u_range
        if fixed_range is not None:
            r = fixed_range
        return PolarPoint(float(r), float(theta))

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind}
        if self.kind == "fixed":
            d.update(angle=self.angle, range=self.range)
        else:
            d["angle_bounds"] = list(self.angle_bounds)
            if self.range_bounds is not None:
                d["range_bounds"] = list(self.range_bounds)
        return d

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "UserDistribution":
        known = {"kind", "angle", "range", "angle_bounds", "range_bounds"}
        extra = set(data) - known
        if extra:
            raise ConfigError("unknown_key", sorted(extra)[0], "unknown user-distribution key")
        kw = dict(data)
        for key in ("angle_bounds", "range_bounds"):
            if kw.get(key) is not None:
                kw[key] = tuple(float(v) for v in kw[key])
        for key in ("angle", "range"):
            if key in kw:
                kw[key] = float(kw[key])
        return cls(**kw)


@dataclass(frozen=True)
class ExperimentSpec:
    """A sweep over ``axis`` with ``trials`` user draws per point.

    ``axis="transmit_power_dbm"`` moves the transmit power with the noise
    power fixed; ``axis="range"`` fixes the user range to each value and
    draws only the angle.
    """

    config: SystemConfig
    axis: str
    values: tuple[float, ...]
    users: UserDistribution = field(default_factory=UserDistribution)
    trials: int = 200
    seed: int = 0
    schemes: tuple[str, ...] = SCHEMES
    rings: int = DEFAULT_RINGS
    alpha: float | None = None
    middle: int = 1
    n_jobs: int = 1

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError("bad_axis", "axis", f"must be one of {AXES}, got {self.axis!r}")
        if len(self.values) == 0:
            raise ConfigError("empty_axis", "values", "axis needs at least one value")
        if self.trials < 1:
            raise ConfigError("not_positive", "trials", "need at least one trial")
        unknown = [s for s in self.schemes if s not in SCHEMES]
        if unknown or not self.schemes:
            raise ConfigError("unknown_scheme", "schemes", f"choose from {SCHEMES}, got {list(self.schemes)}")
        if self.rings < 1 or self.middle < 1:
            raise ConfigError("not_positive", "rings", "rings and middle must be >= 1")

    def point_config(self, i: int) -> SystemConfig:
        if self.axis == "transmit_power_dbm":
            return self.config.replace(transmit_power=dbm_to_watts(self.values[i]))
        return self.config

    def point_range(self, i: int) -> float | None:
        return float(self.values[i]) if self.axis == "range" else None

    def to_dict(self) -> dict[str, Any]:
        return {
            "config": self.config.to_dict(),
            "axis": self.axis,
            "values": [float(v) for v in self.values],
            "users": self.users.to_dict(),
            "trials": self.trials,
            "seed": self.seed,
            "schemes": list(self.schemes),
            "rings": self.rings,
            "alpha": self.alpha,
            "middle": self.middle,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], base: SystemConfig | None = None) -> "ExperimentSpec":
        known = {"config", "axis", "values", "users", "trials", "seed", "schemes", "rings", "alpha", "middle", "n_jobs"}
        extra = set(data) - known
        if extra:
            raise ConfigError("unknown_key", sorted(extra)[0], "unknown experiment key")
        cfg = base or SystemConfig()
        if data.get("config"):
            cfg = SystemConfig.from_dict({**cfg.to_dict(), **data["config"]})
        kw: dict[str, Any] = {
            "config": cfg,
            "axis": data.get("axis", "transmit_power_dbm"),
            "values": tuple(float(v) for v in data.get("values", ())),
        }
        if "users" in data:
            kw["users"] = UserDistribution.from_dict(data["users"])
        for key in ("trials", "seed", "rings", "middle", "n_jobs"):
            if key in data:
                kw[key] = int(data[key])
        if data.get("alpha") is not None:
            kw["alpha"] = float(data["alpha"])
        if "schemes" in data:
            kw["schemes"] = tuple(data["schemes"])
        return cls(**kw)


@dataclass(frozen=True)
class TrialResult:
    """One scheme on one draw; ``error`` is set instead of the estimates on failure."""

    angle: float = math.nan
    range: float = math.nan
    rate: float = math.nan
    overhead: int = 0
    error: str | None = None


@dataclass(frozen=True)
class MetricRow:
    scheme: str
    axis: float
    snr_db: float
    nmse_angle: float
    nmse_range: float
    rate: float
    trials: int
    overhead: int

    def cells(self) -> tuple:
        return tuple(getattr(self, c) for c in COLUMNS)


@dataclass(frozen=True)
class MetricTable:
    rows: tuple[MetricRow, ...]
    failures: dict = field(default_factory=dict)

    def row(self, scheme: str, axis: float) -> MetricRow:
        for r in self.rows:
            if r.scheme == scheme and r.axis == axis:
                return r
        raise KeyError((scheme, axis))

    def column(self, scheme: str, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows if r.scheme == scheme])


def trial_seed(master: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master, spawn_key=tuple(key)))


@dataclass(frozen=True, eq=False)
class _Shared:
    grid: FrequencyGrid
    codebook: Any
    codewords: np.ndarray | None
    dft: np.ndarray | None


def _prepare(spec: ExperimentSpec) -> _Shared:
    cfg = spec.config
    grid = make_frequency_grid(cfg)
    codebook = codewords = dft = None
    if {"exhaustive", "two_phase"} & set(spec.schemes):
        alpha = cfg.r_max if spec.alpha is None else spec.alpha
        codebook = build_polar_codebook(cfg.num_antennas_total, spec.rings, alpha)
        geometry = full_array(cfg)
        codewords = codebook.weights(geometry, grid.carrier)
        dft = dft_weights(codebook.angles, geometry, grid.carrier)
    return _Shared(grid, codebook, codewords, dft)


def _run_scheme(name, cfg, user, spec, shared, channel, rng):
    grid = shared.grid
    if name == "proposed":
        out = run_full_training(cfg, user, rng, grid, {"full": channel})
        weights = out.data_weights(cfg, grid)
    elif name == "exhaustive":
        out = exhaustive_polar_search(cfg, user, shared.codebook, rng, grid, channel, shared.codewords)
        weights = out.weights
    elif name == "rainbow":
        out = nearfield_rainbow_training(cfg, user, spec.rings, spec.alpha, rng, grid, channel)
        weights = out.weights
    elif name == "two_phase":
        out = two_phase_training(
            cfg, user, spec.middle, shared.codebook, rng, grid, channel, shared.dft, shared.codewords
        )
        weights = out.weights
    else:
        out = perfect_csi_beamformer(user, cfg, grid)
        weights = out.weights
    return TrialResult(out.angle, out.range, achievable_rate(channel, weights, cfg), out.pilot_count)


def run_trial(spec: ExperimentSpec, shared: _Shared, point: int, trial: int) -> tuple[float, PolarPoint, dict]:
    """All schemes on one draw; returns the reference SNR, the user and per-scheme results.

    The user depends only on ``(seed, trial)`` so every axis point sees the
    same draws; noise streams depend on ``(seed, point, trial, scheme)``.
    """
    cfg = spec.point_config(point)
    user = spec.users.sample(trial_seed(spec.seed, _USER_STREAM, trial), cfg, spec.point_range(point))
    channel = los_channel(user, full_array(cfg), shared.grid, range_bounds=cfg.range_bounds)
    results = {}
    for s_idx, name in enumerate(SCHEMES):
        if name not in spec.schemes:
            continue
        rng = trial_seed(spec.seed, _NOISE_STREAM, point, trial, s_idx)
        try:
            results[name] = _run_scheme(name, cfg, user, spec, shared, channel, rng)
        except (TrainingError, ValueError, FloatingPointError) as exc:
            results[name] = TrialResult(error=f"{type(exc).__name__}: {exc}")
    snr = reference_snr(cfg, user, shared.grid.freq(shared.grid.central_index))
    return snr, user, results


def _aggregate(spec: ExperimentSpec, outputs) -> MetricTable:
    rows, failures = [], {}
    by_point: dict[int, list] = {}
    for (point, _trial), out in outputs:
        by_point.setdefault(point, []).append(out)
    for name in spec.schemes:
        for point, value in enumerate(spec.values):
            trials = by_point.get(point, [])
            snr = 10.0 * math.log10(np.mean([t[0] for t in trials])) if trials else math.nan
            ok = [(user, res[name]) for _snr, user, res in trials if res[name].error is None]
            n_fail = len(trials) - len(ok)
            if n_fail:
                failures[(name, float(value))] = n_fail
            if ok:
                users = [u for u, _ in ok]
                res = [r for _, r in ok]
                row = MetricRow(
                    scheme=name,
                    axis=float(value),
                    snr_db=snr,
                    nmse_angle=nmse([r.angle for r in res], [u.angle for u in users]),
                    nmse_range=nmse([r.range for r in res], [u.range for u in users]),
                    rate=float(np.mean([r.rate for r in res])),
                    trials=len(ok),
                    overhead=int(res[0].overhead),
                )
            else:
                row = MetricRow(name, float(value), snr, math.nan, math.nan, math.nan, 0, 0)
            rows.append(row)
    return MetricTable(tuple(rows), failures)


def run_experiment(spec: ExperimentSpec) -> MetricTable:
    """Run every (point, trial) pair and aggregate in index order.

    With ``n_jobs != 1`` the pairs run through joblib; results are merged in
    the same fixed order, so the table does not depend on the schedule.
    """
    shared = _prepare(spec)
    tasks = [(p, t) for p in range(len(spec.values)) for t in range(spec.trials)]
    if spec.n_jobs == 1:
        results = [run_trial(spec, shared, p, t) for p, t in tasks]
    else:
        from joblib import Parallel, delayed

        results = Parallel(n_jobs=spec.n_jobs)(delayed(run_trial)(spec, shared, p, t) for p, t in tasks)
    return _aggregate(spec, list(zip(tasks, results)))
