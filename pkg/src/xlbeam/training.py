"""Three-stage wideband beam training with one pilot per stage.

Stage 1 sweeps the angular domain with rainbow blocks of the sparse central
subarray and returns a set of candidate angles. Stage 2 uses the dense central
subarray with a TD beamformer whose single beam moves with frequency, picks one
subcarrier per candidate and keeps the candidate with the strongest response.
Stage 3 activates the full array with a TD-PS beamformer whose per-subcarrier
focus sweeps the admissible curvature interval at the estimated angle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .beamforming import TdPsParams, td_weights
from .channel import LosChannel, RangeBoundsError, los_channel
from .config import (
    FrequencyGrid,
    PolarPoint,
    SystemConfig,
    dense_subarray,
    full_array,
    make_frequency_grid,
    sparse_subarray,
)
from .rainbow import first_grating_index, multi_beam_angles, solve_sweep_td_parameter

PILOTS_PER_TRAINING = 3


class TrainingError(RuntimeError):
    """A stage produced an estimate that cannot be mapped back to a location."""


def as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def simulate_pilot(
    channel: LosChannel, weights: np.ndarray, transmit_power: float, noise_power: float, rng=None
) -> np.ndarray:
    """Received pilot samples ``y_m = sqrt(P_t) h_m^H w_m + n_m`` with ``x_m = 1``.

    ``weights`` is either one beamformer shared by all subcarriers or one row
    per subcarrier. Noise is circularly-symmetric complex Gaussian of variance
    ``noise_power``; no random numbers are drawn when it is zero.
    """
    weights = np.asarray(weights)
    count = channel.rows.shape[1]
    if weights.shape[-1] != count:
        raise ValueError(f"weights have {weights.shape[-1]} entries, channel has {count} antennas")
    if weights.ndim == 2 and weights.shape[0] != channel.rows.shape[0]:
        raise ValueError("need one weight row per subcarrier")
    y = math.sqrt(transmit_power) * np.sum(channel.rows * weights, axis=-1)
    if noise_power > 0:
        rng = as_generator(rng)
        scale = math.sqrt(noise_power / 2.0)
        y = y + scale * (rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape))
    return y


def calibrated_power(freqs, y) -> np.ndarray:
    """``|f_m y_m|^2``; removes the ``1/f`` trend of the path gain before argmax."""
    return np.abs(np.asarray(freqs) * np.asarray(y)) ** 2


@dataclass(frozen=True, eq=False)
class StageOneReport:
    td_angle: float
    calibrated_powers: np.ndarray
    best_subcarrier: int
    best_freq: float
    candidate_angles: np.ndarray
    candidate_ks: np.ndarray
    first_k: int

    @property
    def spacing(self) -> float:
        """Constant spacing ``2 / (U rho)`` between neighbouring candidates."""
        if len(self.candidate_angles) < 2:
            return float("nan")
        return float(self.candidate_angles[1] - self.candidate_angles[0])


def stage1_candidates(td_angle: float, interval: int, freq: float, carrier: float):
    """Candidate angles and grating indices seen by one subcarrier of the sweep."""
    return multi_beam_angles(td_angle, interval, freq, carrier)


def stage1_angle_sweep(
    cfg: SystemConfig,
    user: PolarPoint,
    rng=None,
    grid: FrequencyGrid | None = None,
    channel: LosChannel | None = None,
) -> StageOneReport:
    grid = grid or make_frequency_grid(cfg)
    geometry = sparse_subarray(cfg)
    td = solve_sweep_td_parameter(cfg.activation_interval, grid)
    if channel is None:
        channel = los_channel(user, geometry, grid)
    w = td_weights(TdPsParams(td_angle=td), geometry, grid.freqs)
    y = simulate_pilot(channel, w, cfg.transmit_power, cfg.noise_power, rng)
    powers = calibrated_power(grid.freqs, y)
    m_hat = int(np.argmax(powers)) + 1
    return _stage1_report(td, grid, cfg.activation_interval, powers, m_hat)


def _stage1_report(td, grid, interval, powers, m_hat) -> StageOneReport:
    f_hat = grid.freq(m_hat)
    angles, ks = stage1_candidates(td, interval, f_hat, grid.carrier)
    return StageOneReport(
        td_angle=td,
        calibrated_powers=powers,
        best_subcarrier=m_hat,
        best_freq=f_hat,
        candidate_angles=angles,
        candidate_ks=ks,
        first_k=first_grating_index(grid),
    )


def stage1_report_for_subcarrier(cfg: SystemConfig, m_hat: int, grid: FrequencyGrid | None = None):
    """Stage-1 report with the winning subcarrier forced to ``m_hat`` (1-based)."""
    grid = grid or make_frequency_grid(cfg)
    td = solve_sweep_td_parameter(cfg.activation_interval, grid)
    return _stage1_report(td, grid, cfg.activation_interval, np.zeros(grid.num_subcarriers), m_hat)


def stage2_td_parameter(first_angle: float, best_freq: float, grid: FrequencyGrid) -> tuple[float, int]:
    """``p = floor(2 f_c^2 / (B f) + 0.5)`` and ``theta'_CS = theta^(1) - 2p``."""
    p = math.floor(2.0 * grid.carrier**2 / (grid.bandwidth * best_freq) + 0.5)
    return first_angle - 2.0 * p, p


def single_beam_angle(td_angle: float, p: int, freq, carrier: float):
    """Beam angle ``theta'_CS + 2p f_c / f`` of the dense subarray at ``freq``."""
    return td_angle + 2.0 * p * carrier / np.asarray(freq, dtype=float)


@dataclass(frozen=True, eq=False)
class SubcarrierSelection:
    """One subcarrier per candidate; indices are 1-based.

    ``seed_indices`` is the uniformly spaced initial guess, ``errors`` the
    alignment error of each chosen subcarrier and ``misaligned`` flags errors
    larger than half the dense-subarray beamwidth.
    """

    indices: np.ndarray
    freqs: np.ndarray
    seed_indices: np.ndarray
    errors: np.ndarray
    misaligned: np.ndarray


def stage2_select_subcarriers(
    candidates, td_angle: float, p: int, grid: FrequencyGrid, subarray_antennas: int
) -> SubcarrierSelection:
    candidates = np.asarray(candidates, dtype=float)
    K = len(candidates)
    M = grid.num_subcarriers
    eta = (M - 1) // (2 * K) if K else 0
    # uniform guess: walk down from the carrier in steps of eta
    m_c = grid.central_index
    seed = np.clip(m_c - eta * np.arange(K), 1, M)
    allowed = np.flatnonzero(grid.freqs <= grid.carrier)
    beams = single_beam_angle(td_angle, p, grid.freqs[allowed], grid.carrier)
    # ascending frequency order, so argmin ties fall on the lower index
    err = np.abs(candidates[:, None] - beams[None, :])
    pick = np.argmin(err, axis=1)
    indices = allowed[pick] + 1
    errors = err[np.arange(K), pick]
    return SubcarrierSelection(
        indices=indices,
        freqs=grid.freqs[indices - 1],
        seed_indices=seed,
        errors=errors,
        misaligned=errors > 1.0 / subarray_antennas,
    )


@dataclass(frozen=True, eq=False)
class StageTwoReport:
    """``estimated_angle`` is the candidate on the strongest selected subcarrier.

    ``beam_angle`` is the dense-subarray beam angle at that subcarrier,
    ``theta'_CS + 2p f_c / f``; it differs from the candidate by the
    alignment error of the subcarrier grid.
    """

    td_angle: float
    p: int
    selection: SubcarrierSelection
    calibrated_powers: np.ndarray
    winner: int
    estimated_angle: float
    beam_angle: float

    @property
    def selected_freqs(self) -> np.ndarray:
        return self.selection.freqs


def stage2_disambiguate(
    cfg: SystemConfig,
    user: PolarPoint,
    report1: StageOneReport,
    rng=None,
    grid: FrequencyGrid | None = None,
    channel: LosChannel | None = None,
) -> StageTwoReport:
    """Pick the true angle among the stage-1 candidates.

    ``channel``, when given, must cover the full grid of the dense subarray;
    only the selected subcarriers are used.
    """
    grid = grid or make_frequency_grid(cfg)
    geometry = dense_subarray(cfg)
    cands = report1.candidate_angles
    td, p = stage2_td_parameter(float(cands[0]), report1.best_freq, grid)
    sel = stage2_select_subcarriers(cands, td, p, grid, cfg.subarray_antennas)
    if channel is None:
        channel = los_channel(user, geometry, sel.freqs)
    else:
        channel = channel.subset(sel.indices - 1)
    w = td_weights(TdPsParams(td_angle=td), geometry, sel.freqs)
    y = simulate_pilot(channel, w, cfg.transmit_power, cfg.noise_power, rng)
    powers = calibrated_power(sel.freqs, y)
    k_hat = int(np.argmax(powers))
    return StageTwoReport(
        td_angle=td,
        p=p,
        selection=sel,
        calibrated_powers=powers,
        winner=k_hat + 1,
        estimated_angle=float(cands[k_hat]),
        beam_angle=float(single_beam_angle(td, p, sel.freqs[k_hat], grid.carrier)),
    )


@dataclass(frozen=True)
class RangeSweepDesign:
    """TD-PS parameters whose per-subcarrier foci span ``[mu_min, mu_max]``."""

    angle: float
    mu_min: float
    mu_max: float
    mu_bar: float
    mu_th: float
    params: TdPsParams
    degenerate: bool

    def focus(self, freqs, carrier: float) -> np.ndarray:
        """Focus curvature ``mu' + mu'_p f_c / f`` at each frequency."""
        return self.params.td_curvature + self.params.ps_curvature * carrier / np.asarray(freqs, dtype=float)


def stage3_td_ps_parameters(angle: float, cfg: SystemConfig, grid: FrequencyGrid | None = None) -> RangeSweepDesign:
    grid = grid or make_frequency_grid(cfg)
    g = 1.0 - angle * angle
    mu_min = g / (2.0 * cfg.r_max)
    mu_max = g / (2.0 * cfg.r_min)
    mu_bar = 0.5 * (mu_min + mu_max)
    rho_l, rho_h = grid.rho_low, grid.rho_high
    mu_th = max(rho_l * (mu_max - mu_bar) / (1.0 - rho_l), rho_h * (mu_bar - mu_min) / (rho_h - 1.0))
    params = TdPsParams(td_angle=angle, td_curvature=mu_bar - mu_th, ps_angle=0.0, ps_curvature=mu_th)
    return RangeSweepDesign(
        angle=angle,
        mu_min=mu_min,
        mu_max=mu_max,
        mu_bar=mu_bar,
        mu_th=mu_th,
        params=params,
        degenerate=mu_max == mu_min,
    )


@dataclass(frozen=True, eq=False)
class StageThreeReport:
    design: RangeSweepDesign
    focus: np.ndarray
    calibrated_powers: np.ndarray
    best_subcarrier: int
    best_freq: float
    estimated_curvature: float
    estimated_range: float


def stage3_range_sweep(
    cfg: SystemConfig,
    user: PolarPoint,
    angle: float,
    rng=None,
    grid: FrequencyGrid | None = None,
    channel: LosChannel | None = None,
) -> StageThreeReport:
    grid = grid or make_frequency_grid(cfg)
    geometry = full_array(cfg)
    design = stage3_td_ps_parameters(angle, cfg, grid)
    if channel is None:
        channel = los_channel(user, geometry, grid)
    w = td_weights(design.params, geometry, grid.freqs, grid.carrier)
    y = simulate_pilot(channel, w, cfg.transmit_power, cfg.noise_power, rng)
    powers = calibrated_power(grid.freqs, y)
    m_star = int(np.argmax(powers)) + 1
    focus = design.focus(grid.freqs, grid.carrier)
    mu_star = float(focus[m_star - 1])
    if not mu_star > 0:
        raise TrainingError(f"non-positive focus curvature {mu_star} at subcarrier {m_star}")
    return StageThreeReport(
        design=design,
        focus=focus,
        calibrated_powers=powers,
        best_subcarrier=m_star,
        best_freq=grid.freq(m_star),
        estimated_curvature=mu_star,
        estimated_range=(1.0 - angle * angle) / (2.0 * mu_star),
    )


@dataclass(frozen=True, eq=False)
class TrainingOutcome:
    angle: float
    range: float
    stage1: StageOneReport
    stage2: StageTwoReport
    stage3: StageThreeReport
    pilot_count: int = PILOTS_PER_TRAINING
    extras: dict = field(default_factory=dict)

    @property
    def data_params(self) -> TdPsParams:
        """Full-array TD beamformer focused on the estimate at every subcarrier."""
        return TdPsParams(td_angle=self.angle, td_curvature=self.stage3.estimated_curvature)

    def data_weights(self, cfg: SystemConfig, grid: FrequencyGrid) -> np.ndarray:
        return td_weights(self.data_params, full_array(cfg), grid.freqs)

    def to_dict(self) -> dict[str, Any]:
        s1, s2, s3 = self.stage1, self.stage2, self.stage3
        d3 = s3.design
        return {
            "estimate": {"angle": self.angle, "range": self.range, "pilot_count": self.pilot_count},
            "stage1": {
                "td_angle": s1.td_angle,
                "best_subcarrier": s1.best_subcarrier,
                "best_freq": s1.best_freq,
                "first_k": s1.first_k,
                "candidate_ks": [int(k) for k in s1.candidate_ks],
                "candidate_angles": _floats(s1.candidate_angles),
                "calibrated_powers": _floats(s1.calibrated_powers),
            },
            "stage2": {
                "td_angle": s2.td_angle,
                "p": s2.p,
                "selected_subcarriers": [int(m) for m in s2.selection.indices],
                "selected_freqs": _floats(s2.selection.freqs),
                "alignment_errors": _floats(s2.selection.errors),
                "misaligned": [bool(b) for b in s2.selection.misaligned],
                "calibrated_powers": _floats(s2.calibrated_powers),
                "winner": s2.winner,
                "estimated_angle": s2.estimated_angle,
                "beam_angle": s2.beam_angle,
            },
            "stage3": {
                "mu_min": d3.mu_min,
                "mu_max": d3.mu_max,
                "mu_bar": d3.mu_bar,
                "mu_th": d3.mu_th,
                "td_angle": d3.params.td_angle,
                "td_curvature": d3.params.td_curvature,
                "ps_angle": d3.params.ps_angle,
                "ps_curvature": d3.params.ps_curvature,
                "degenerate": d3.degenerate,
                "best_subcarrier": s3.best_subcarrier,
                "best_freq": s3.best_freq,
                "estimated_curvature": s3.estimated_curvature,
                "estimated_range": s3.estimated_range,
                "focus": _floats(s3.focus),
                "calibrated_powers": _floats(s3.calibrated_powers),
            },
        }


def _floats(values) -> list[float]:
    return [float(v) for v in np.asarray(values).ravel()]


def check_user_in_bounds(cfg: SystemConfig, user: PolarPoint) -> None:
    lo, hi = cfg.range_bounds
    if not (lo * (1 - 1e-12) <= user.range <= hi * (1 + 1e-12)):
        raise RangeBoundsError(f"user range {user.range} m outside the validated bounds [{lo}, {hi}] m")


def run_full_training(
    cfg: SystemConfig,
    user: PolarPoint,
    seed=None,
    grid: FrequencyGrid | None = None,
    channels: dict | None = None,
) -> TrainingOutcome:
    """Chain the three stages for ``user``.

    ``seed`` may be an int, ``None`` or a Generator; all three pilots draw
    from the same stream in stage order. ``channels`` optionally maps
    ``"sparse_subarray"``, ``"dense_subarray"`` and ``"full"`` to precomputed
    full-grid channels.
    """
    check_user_in_bounds(cfg, user)
    grid = grid or make_frequency_grid(cfg)
    rng = as_generator(seed)
    channels = channels or {}
    r1 = stage1_angle_sweep(cfg, user, rng, grid, channels.get("sparse_subarray"))
    r2 = stage2_disambiguate(cfg, user, r1, rng, grid, channels.get("dense_subarray"))
    r3 = stage3_range_sweep(cfg, user, r2.estimated_angle, rng, grid, channels.get("full"))
    return TrainingOutcome(angle=r2.estimated_angle, range=r3.estimated_range, stage1=r1, stage2=r2, stage3=r3)
