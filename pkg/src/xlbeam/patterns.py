"""Gain-versus-angle and gain-versus-range tables for plotting beam patterns."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from .beamforming import TdPsParams, td_weights
from .config import (
    SPEED_OF_LIGHT,
    ConfigError,
    FrequencyGrid,
    SystemConfig,
    make_frequency_grid,
    make_geometry,
)
from .training import (
    stage1_report_for_subcarrier,
    stage2_select_subcarriers,
    stage2_td_parameter,
    stage3_td_ps_parameters,
)

PATTERN_COLUMNS = ("pattern", "m", "freq", "theta", "range", "gain")

_PATTERN_KEYS = {
    "name", "geometry", "td_angle", "td_curvature", "ps_angle", "ps_curvature", "range_grating",
    "stage2_subcarrier", "stage3_angle", "subcarriers", "freqs", "sweep", "points",
    "angle_span", "range_span", "angle", "range", "model",
}


@dataclass(frozen=True)
class PatternRequest:
    """One beamformer evaluated at a set of subcarriers over an angle or range sweep.

    ``subcarriers`` are 1-based grid indices; ``freqs`` lists extra arbitrary
    frequencies (reported with ``m = 0``). An angle sweep on the full array
    uses the near-field response at ``range``; a range sweep holds ``angle``.
    """

    name: str
    geometry: str
    params: TdPsParams
    subcarriers: tuple[int, ...]
    freqs: tuple[float, ...] = ()
    sweep: str = "angle"
    points: int = 2001
    angle_span: tuple[float, float] = (-1.0, 1.0)
    range_span: tuple[float, float] = (5.0, 100.0)
    angle: float = 0.0
    range: float = 30.0
    model: str = "exact"

    def to_dict(self) -> dict[str, Any]:
        p = self.params
        return {
            "name": self.name,
            "geometry": self.geometry,
            "td_angle": p.td_angle,
            "td_curvature": p.td_curvature,
            "ps_angle": p.ps_angle,
            "ps_curvature": p.ps_curvature,
            "subcarriers": list(self.subcarriers),
            "freqs": list(self.freqs),
            "sweep": self.sweep,
            "points": self.points,
            "angle_span": list(self.angle_span),
            "range_span": list(self.range_span),
            "angle": self.angle,
            "range": self.range,
            "model": self.model,
        }


def _subcarrier_list(value, grid: FrequencyGrid) -> tuple[int, ...]:
    if value is None:
        return (grid.central_index,)
    if value == "all":
        return tuple(range(1, grid.num_subcarriers + 1))
    if isinstance(value, Mapping):
        start = int(value.get("start", 1))
        stop = int(value.get("stop", grid.num_subcarriers))
        step = int(value.get("step", 1))
        return tuple(range(start, stop + 1, step))
    return tuple(int(m) for m in value)


def resolve_pattern(data: Mapping[str, Any], cfg: SystemConfig, index: int = 0) -> PatternRequest:
    """Turn a recipe entry into a concrete request.

    Besides explicit TD and PS parameters, an entry may derive them from the
    training stages: ``stage2_subcarrier: m`` uses the dense-subarray design
    for a stage-1 winner ``m`` and its selected subcarriers, ``stage3_angle``
    uses the range-sweep design at that angle, and ``range_grating: s`` sets
    ``td_curvature = 2 s / d_c``.
    """
    extra = set(data) - _PATTERN_KEYS
    if extra:
        raise ConfigError("unknown_key", sorted(extra)[0], "unknown pattern key")
    grid = make_frequency_grid(cfg)
    geometry = data.get("geometry", "full")
    make_geometry(cfg, geometry)
    td_angle = float(data.get("td_angle", 0.0))
    td_curv = float(data.get("td_curvature", 0.0))
    ps_angle = float(data.get("ps_angle", 0.0))
    ps_curv = float(data.get("ps_curvature", 0.0))
    subcarriers = None if data.get("subcarriers") is None else _subcarrier_list(data["subcarriers"], grid)
    if "range_grating" in data:
        td_curv = 2.0 * int(data["range_grating"]) / cfg.antenna_spacing
    if "stage2_subcarrier" in data:
        r1 = stage1_report_for_subcarrier(cfg, int(data["stage2_subcarrier"]), grid)
        td_angle, p = stage2_td_parameter(float(r1.candidate_angles[0]), r1.best_freq, grid)
        sel = stage2_select_subcarriers(r1.candidate_angles, td_angle, p, grid, cfg.subarray_antennas)
        td_curv = ps_angle = ps_curv = 0.0
        if subcarriers is None:
            subcarriers = tuple(int(m) for m in sel.indices)
    if "stage3_angle" in data:
        design = stage3_td_ps_parameters(float(data["stage3_angle"]), cfg, grid)
        p = design.params
        td_angle, td_curv, ps_angle, ps_curv = p.td_angle, p.td_curvature, p.ps_angle, p.ps_curvature
    freqs = tuple(float(f) for f in data.get("freqs", ()))
    if subcarriers is None:
        subcarriers = () if freqs else (grid.central_index,)
    bad = [m for m in subcarriers if not 1 <= m <= grid.num_subcarriers]
    if bad:
        raise ConfigError("bad_subcarrier", "subcarriers", f"index {bad[0]} outside 1..{grid.num_subcarriers}")
    sweep = data.get("sweep", "angle")
    if sweep not in ("angle", "range"):
        raise ConfigError("bad_sweep", "sweep", f"must be 'angle' or 'range', got {sweep!r}")
    if sweep == "range" and geometry != "full":
        raise ConfigError("bad_sweep", "sweep", "range sweeps need the full array")
    points = int(data.get("points", 2001))
    if points < 1:
        raise ConfigError("not_positive", "points", "need at least one sample")
    return PatternRequest(
        name=str(data.get("name", f"pattern{index + 1}")),
        geometry=geometry,
        params=TdPsParams(td_angle, td_curv, ps_angle, ps_curv),
        subcarriers=subcarriers,
        freqs=freqs,
        sweep=sweep,
        points=points,
        angle_span=tuple(float(v) for v in data.get("angle_span", (-1.0, 1.0))),
        range_span=tuple(float(v) for v in data.get("range_span", (5.0, 100.0))),
        angle=float(data.get("angle", 0.0)),
        range=float(data.get("range", 30.0)),
        model=str(data.get("model", "exact")),
    )


def _samples(req: PatternRequest) -> tuple[np.ndarray, np.ndarray]:
    if req.sweep == "angle":
        lo, hi = req.angle_span
        # half-open grid so that theta = 1 is never sampled
        theta = lo + (hi - lo) * np.arange(req.points) / req.points
        return theta, np.full(req.points, req.range)
    lo, hi = req.range_span
    return np.full(req.points, req.angle), np.linspace(lo, hi, req.points)


def _near_field_matrix(theta, r, x, freq: float, model: str) -> np.ndarray:
    theta, r = theta[:, None], r[:, None]
    if model == "exact":
        offset = (x * x - 2.0 * r * theta * x) / (np.sqrt(r * r + x * x - 2.0 * r * theta * x) + r)
    elif model == "fresnel":
        offset = -x * theta + x * x * (1.0 - theta * theta) / (2.0 * r)
    else:
        raise ConfigError("bad_model", "model", f"must be 'exact' or 'fresnel', got {model!r}")
    return np.exp(-2j * np.pi * freq / SPEED_OF_LIGHT * offset) / math.sqrt(x.size)


def pattern_gains(req: PatternRequest, cfg: SystemConfig) -> list[tuple]:
    """Rows ``(pattern, m, f, theta, r, gain)`` in subcarrier-major order."""
    grid = make_frequency_grid(cfg)
    geometry = make_geometry(cfg, req.geometry)
    theta, r = _samples(req)
    x = geometry.positions
    entries = [(m, grid.freq(m)) for m in req.subcarriers] + [(0, f) for f in req.freqs]
    rows = []
    for m, f in entries:
        w = td_weights(req.params, geometry, [f], grid.carrier)[0]
        if req.geometry == "full":
            steer = _near_field_matrix(theta, r, x, f, req.model)
        else:
            steer = np.exp(2j * np.pi * f / SPEED_OF_LIGHT * np.outer(theta, x)) / math.sqrt(x.size)
        gains = np.abs(steer @ w)
        for t, rr, g in zip(theta, r, gains):
            rows.append((req.name, m, f, float(t), float(rr), float(g)))
    return rows


def count_peaks(gains, threshold: float = 0.99) -> int:
    """Number of separate runs with gain at or above ``threshold``."""
    above = np.asarray(gains) >= threshold
    return int(np.count_nonzero(above[1:] & ~above[:-1]) + int(above[0]))
