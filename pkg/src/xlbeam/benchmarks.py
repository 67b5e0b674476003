"""Comparison schemes: perfect CSI, exhaustive polar search, near-field rainbow
training and two-phase (angle then range) training.

The grid schemes use narrowband codewords designed at the carrier and take
their decisions on the central subcarrier; the rainbow scheme sweeps range
rings with full-array TD-PS beamformers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .beamforming import TdPsParams, td_weights
from .channel import LosChannel, _exact_range_offset, los_channel
from .config import (
    SPEED_OF_LIGHT,
    AntennaIndexSet,
    FrequencyGrid,
    PolarPoint,
    SystemConfig,
    full_array,
    make_frequency_grid,
)
from .training import as_generator, calibrated_power, simulate_pilot

DEFAULT_RINGS = 6


def dft_angles(num_antennas: int) -> np.ndarray:
    """Symmetric angle grid ``(2n - N - 1) / N`` for ``n = 1..N``."""
    n = np.arange(1, num_antennas + 1)
    return (2.0 * n - num_antennas - 1) / num_antennas


@dataclass(frozen=True, eq=False)
class PolarCodebook:
    """Polar-domain grid: ``N`` angles with ``V`` ranges ``alpha (1 - theta^2) / v`` each.

    Codewords are ordered angle-major; codeword ``i`` is angle ``i // V`` and
    ring ``i % V``.
    """

    angles: np.ndarray
    ranges: np.ndarray
    alpha: float

    @property
    def num_angles(self) -> int:
        return len(self.angles)

    @property
    def num_rings(self) -> int:
        return self.ranges.shape[1]

    @property
    def size(self) -> int:
        return self.ranges.size

    def point(self, angle_index: int, ring_index: int) -> tuple[float, float]:
        return float(self.angles[angle_index]), float(self.ranges[angle_index, ring_index])

    def weights(self, geometry: AntennaIndexSet, freq: float, angle_index=None) -> np.ndarray:
        """Matched near-field weights at ``freq``, one row per codeword.

        ``angle_index`` restricts the rows to the rings of those angles.
        """
        if angle_index is None:
            angle_index = np.arange(self.num_angles)
        angle_index = np.atleast_1d(angle_index)
        theta = np.repeat(self.angles[angle_index], self.num_rings)
        r = self.ranges[angle_index].ravel()
        return near_field_weights(theta, r, geometry, freq)


def near_field_weights(theta, r, geometry: AntennaIndexSet, freq: float) -> np.ndarray:
    """``conj(b(r, theta))`` rows for paired arrays of angles and ranges."""
    theta = np.asarray(theta, dtype=float)[:, None]
    r = np.asarray(r, dtype=float)[:, None]
    x = geometry.positions[None, :]
    rn = np.sqrt(r * r + x * x - 2.0 * r * theta * x)
    offset = (x * x - 2.0 * r * theta * x) / (rn + r)
    k = 2.0 * np.pi * freq / SPEED_OF_LIGHT
    return np.exp(1j * k * offset) / math.sqrt(geometry.count)


def build_polar_codebook(num_antennas: int, rings: int = DEFAULT_RINGS, alpha: float = 50.0) -> PolarCodebook:
    if rings < 1:
        raise ValueError("need at least one range ring")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    angles = dft_angles(num_antennas)
    v = np.arange(1, rings + 1)
    ranges = alpha * (1.0 - angles[:, None] ** 2) / v[None, :]
    angles.setflags(write=False)
    ranges.setflags(write=False)
    return PolarCodebook(angles=angles, ranges=ranges, alpha=float(alpha))


@dataclass(frozen=True, eq=False)
class BenchmarkOutcome:
    """Estimate of a comparison scheme.

    ``weights`` holds the data beamformer: one row shared by all subcarriers
    for the narrowband schemes, or one row per subcarrier.
    """

    scheme: str
    angle: float
    range: float
    pilot_count: int
    weights: np.ndarray
    metadata: dict = field(default_factory=dict)

    def data_weights(self, cfg: SystemConfig, grid: FrequencyGrid) -> np.ndarray:
        return self.weights

    def to_dict(self) -> dict[str, Any]:
        return {
            "scheme": self.scheme,
            "angle": self.angle,
            "range": self.range,
            "pilot_count": self.pilot_count,
            "metadata": dict(self.metadata),
        }


def _tone(cfg: SystemConfig, user: PolarPoint, grid: FrequencyGrid, channel: LosChannel | None):
    """Central-subcarrier channel used by the narrowband decisions."""
    m_c = grid.central_index
    if channel is None:
        return los_channel(user, full_array(cfg), grid.freqs[m_c - 1 : m_c]), m_c
    return channel.subset(m_c - 1), m_c


def _sweep(tone: LosChannel, codewords: np.ndarray, cfg: SystemConfig, rng) -> np.ndarray:
    """Received power of each codeword sent on its own pilot slot."""
    y = math.sqrt(cfg.transmit_power) * (codewords @ tone.rows[0])
    if cfg.noise_power > 0:
        scale = math.sqrt(cfg.noise_power / 2.0)
        y = y + scale * (rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape))
    return np.abs(y) ** 2


def perfect_csi_beamformer(user: PolarPoint, cfg: SystemConfig, grid: FrequencyGrid | None = None) -> BenchmarkOutcome:
    """Exact near-field matched filter at every subcarrier."""
    grid = grid or make_frequency_grid(cfg)
    geometry = full_array(cfg)
    k = 2.0 * np.pi * grid.freqs / SPEED_OF_LIGHT
    offset = _exact_range_offset(user, geometry.positions)
    w = np.exp(1j * np.outer(k, offset)) / math.sqrt(geometry.count)
    return BenchmarkOutcome("perfect_csi", user.angle, user.range, 0, w)


def exhaustive_polar_search(
    cfg: SystemConfig,
    user: PolarPoint,
    codebook: PolarCodebook,
    rng=None,
    grid: FrequencyGrid | None = None,
    channel: LosChannel | None = None,
    codewords: np.ndarray | None = None,
) -> BenchmarkOutcome:
    """One pilot per codeword; the strongest codeword is the estimate.

    ``codewords`` may pass in ``codebook.weights(full_array(cfg), f_c)`` to
    avoid rebuilding it on every call.
    """
    grid = grid or make_frequency_grid(cfg)
    rng = as_generator(rng)
    geometry = full_array(cfg)
    if codewords is None:
        codewords = codebook.weights(geometry, grid.carrier)
    tone, m_c = _tone(cfg, user, grid, channel)
    power = _sweep(tone, codewords, cfg, rng)
    i = int(np.argmax(power))
    n, v = divmod(i, codebook.num_rings)
    theta, r = codebook.point(n, v)
    return BenchmarkOutcome(
        "exhaustive",
        theta,
        r,
        codebook.size,
        codewords[i],
        {"angle_index": n + 1, "ring_index": v + 1, "decision_subcarrier": m_c},
    )


def rainbow_fan(grid: FrequencyGrid) -> tuple[float, float]:
    """TD and PS angles whose per-subcarrier beams fan from ``-1`` at ``f_H`` to ``1`` at ``f_L``.

    Beam angle at ``f`` is ``theta' + theta'_p f_c / f``.
    """
    inv_l, inv_h = 1.0 / grid.rho_low, 1.0 / grid.rho_high
    ps_angle = 2.0 / (inv_l - inv_h)
    td_angle = -1.0 - ps_angle * inv_h
    return td_angle, ps_angle


def nearfield_rainbow_training(
    cfg: SystemConfig,
    user: PolarPoint,
    rings: int = DEFAULT_RINGS,
    alpha: float | None = None,
    rng=None,
    grid: FrequencyGrid | None = None,
    channel: LosChannel | None = None,
) -> BenchmarkOutcome:
    """One pilot per curvature ring ``mu = v / (2 alpha)``.

    On each pilot all subcarriers focus on the same ring while their angles
    fan across ``[-1, 1]``. The strongest (ring, subcarrier) pair is the
    estimate. Subcarriers just above the carrier also form a grating beam
    near ``theta = 0.95``, so users beyond that angle are ambiguous.
    """
    grid = grid or make_frequency_grid(cfg)
    rng = as_generator(rng)
    alpha = cfg.r_max if alpha is None else alpha
    geometry = full_array(cfg)
    if channel is None:
        channel = los_channel(user, geometry, grid)
    td_angle, ps_angle = rainbow_fan(grid)
    fan = td_angle + ps_angle * grid.carrier / grid.freqs
    fan = np.clip(fan, -1.0, np.nextafter(1.0, 0.0))
    powers = np.empty((rings, grid.num_subcarriers))
    for v in range(1, rings + 1):
        params = TdPsParams(td_angle=td_angle, td_curvature=v / (2.0 * alpha), ps_angle=ps_angle)
        w = td_weights(params, geometry, grid.freqs, grid.carrier)
        y = simulate_pilot(channel, w, cfg.transmit_power, cfg.noise_power, rng)
        powers[v - 1] = calibrated_power(grid.freqs, y)
    v_idx, m_idx = np.unravel_index(int(np.argmax(powers)), powers.shape)
    theta = float(fan[m_idx])
    mu = (v_idx + 1) / (2.0 * alpha)
    r = (1.0 - theta * theta) / (2.0 * mu)
    w = near_field_weights([theta], [r], geometry, grid.carrier)[0]
    return BenchmarkOutcome(
        "rainbow",
        theta,
        float(r),
        rings,
        w,
        {"ring_index": int(v_idx) + 1, "subcarrier": int(m_idx) + 1, "curvature": mu},
    )


def three_db_support(power: np.ndarray) -> tuple[int, int]:
    """Inclusive 0-based bounds of the contiguous run at or above half the maximum."""
    peak = int(np.argmax(power))
    half = 0.5 * power[peak]
    lo = peak
    while lo > 0 and power[lo - 1] >= half:
        lo -= 1
    hi = peak
    while hi < len(power) - 1 and power[hi + 1] >= half:
        hi += 1
    return lo, hi


def middle_indices(lo: int, hi: int, count: int, size: int) -> np.ndarray:
    """``count`` consecutive indices centred on the middle of ``[lo, hi]``, kept inside ``[0, size)``."""
    count = min(count, size)
    start = (lo + hi) // 2 - (count - 1) // 2
    start = min(max(start, 0), size - count)
    return np.arange(start, start + count)


def two_phase_training(
    cfg: SystemConfig,
    user: PolarPoint,
    middle: int,
    codebook: PolarCodebook,
    rng=None,
    grid: FrequencyGrid | None = None,
    channel: LosChannel | None = None,
    dft_codewords: np.ndarray | None = None,
    codewords: np.ndarray | None = None,
) -> BenchmarkOutcome:
    """Far-field DFT sweep, then a range sweep at the ``middle`` central angles of the 3-dB support."""
    if middle < 1:
        raise ValueError("need at least one middle angle")
    grid = grid or make_frequency_grid(cfg)
    rng = as_generator(rng)
    geometry = full_array(cfg)
    tone, m_c = _tone(cfg, user, grid, channel)
    N = codebook.num_angles
    if dft_codewords is None:
        dft_codewords = dft_weights(codebook.angles, geometry, grid.carrier)
    p1 = _sweep(tone, dft_codewords, cfg, rng)
    lo, hi = three_db_support(p1)
    chosen = middle_indices(lo, hi, middle, N)
    V = codebook.num_rings
    if codewords is None:
        cw = codebook.weights(geometry, grid.carrier, chosen)
    else:
        cw = codewords.reshape(N, V, -1)[chosen].reshape(len(chosen) * V, -1)
    p2 = _sweep(tone, cw, cfg, rng)
    i = int(np.argmax(p2))
    j, v = divmod(i, V)
    n = int(chosen[j])
    theta, r = codebook.point(n, v)
    return BenchmarkOutcome(
        "two_phase",
        theta,
        r,
        N + len(chosen) * V,
        cw[i],
        {
            "support": [lo + 1, hi + 1],
            "middle_angles": [int(c) + 1 for c in chosen],
            "angle_index": n + 1,
            "ring_index": v + 1,
            "decision_subcarrier": m_c,
        },
    )


def dft_weights(angles, geometry: AntennaIndexSet, freq: float) -> np.ndarray:
    """Far-field beam-steering rows ``exp(-j k x theta) / sqrt(N)``, one per angle."""
    k = 2.0 * np.pi * freq / SPEED_OF_LIGHT
    phase = k * np.outer(np.asarray(angles, dtype=float), geometry.positions)
    return np.exp(-1j * phase) / math.sqrt(geometry.count)
