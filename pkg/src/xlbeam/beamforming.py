"""True-time-delay (TD), phase-shifter (PS) and combined TD-PS beamformers.

Entries are the transmit weights ``w_n``; the TD weight at subcarrier ``m`` is
``exp(-j 2 pi / lambda_m (x_n theta' - x_n^2 mu')) / sqrt(count)`` with
``x_n`` the element position. The PS weight uses ``lambda_c`` instead, so it
is the same at every subcarrier.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import SteeringVector
from .config import SPEED_OF_LIGHT, AntennaIndexSet


@dataclass(frozen=True)
class TdPsParams:
    """TD and PS steering parameters.

    TD parameters may lie outside the physical angle range; that is how the
    sparse and dense subarrays spread beams over frequency.
    """

    td_angle: float = 0.0
    td_curvature: float = 0.0
    ps_angle: float = 0.0
    ps_curvature: float = 0.0

    def __post_init__(self):
        for name in ("td_angle", "td_curvature", "ps_angle", "ps_curvature"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def has_ps(self) -> bool:
        return self.ps_angle != 0.0 or self.ps_curvature != 0.0


@dataclass(frozen=True, eq=False)
class Beamformer:
    geometry: AntennaIndexSet
    freq: float
    entries: np.ndarray
    params: TdPsParams

    def __len__(self) -> int:
        return len(self.entries)


def _phase_path(geometry: AntennaIndexSet, angle: float, curv: float) -> np.ndarray:
    x = geometry.positions
    return x * angle - x * x * curv


def td_delays(params: TdPsParams, geometry: AntennaIndexSet) -> np.ndarray:
    """Physical delays ``tau_n = (x_n theta' - x_n^2 mu') / c`` in seconds."""
    return _phase_path(geometry, params.td_angle, params.td_curvature) / SPEED_OF_LIGHT


def td_beamformer(params: TdPsParams, geometry: AntennaIndexSet, freq: float) -> Beamformer:
    td_only = TdPsParams(params.td_angle, params.td_curvature)
    w = td_weights(td_only, geometry, np.array([freq]))[0]
    return Beamformer(geometry, float(freq), w, td_only)


def ps_beamformer(params: TdPsParams, geometry: AntennaIndexSet, carrier: float) -> Beamformer:
    ps_only = TdPsParams(ps_angle=params.ps_angle, ps_curvature=params.ps_curvature)
    k_c = 2.0 * np.pi * carrier / SPEED_OF_LIGHT
    phase = k_c * _phase_path(geometry, ps_only.ps_angle, ps_only.ps_curvature)
    w = np.exp(-1j * phase) / np.sqrt(geometry.count)
    return Beamformer(geometry, float(carrier), w, ps_only)


def combined_beamformer(
    params: TdPsParams, geometry: AntennaIndexSet, freq: float, carrier: float
) -> Beamformer:
    """Effective TD-PS beamformer at ``freq``.

    The TD and PS phases add; the result keeps a single ``1/sqrt(count)``
    amplitude so that it has unit norm like its two factors.
    """
    w = td_weights(params, geometry, np.array([freq]), carrier)[0]
    return Beamformer(geometry, float(freq), w, params)


def td_weights(
    params: TdPsParams, geometry: AntennaIndexSet, freqs, carrier: float | None = None
) -> np.ndarray:
    """Stacked weights, one row per frequency, shape ``(len(freqs), count)``.

    ``carrier`` is required when ``params`` carries a PS part.
    """
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    k = 2.0 * np.pi * freqs / SPEED_OF_LIGHT
    phase = np.outer(k, _phase_path(geometry, params.td_angle, params.td_curvature))
    if params.has_ps:
        if carrier is None:
            raise ValueError("carrier frequency needed for the phase-shifter part")
        k_c = 2.0 * np.pi * carrier / SPEED_OF_LIGHT
        phase = phase + k_c * _phase_path(geometry, params.ps_angle, params.ps_curvature)
    return np.exp(-1j * phase) / np.sqrt(geometry.count)


def array_gain(w: Beamformer, a: SteeringVector) -> float:
    """``|b^H w|`` for a beamformer and a steering vector on the same geometry."""
    if len(w) != len(a):
        raise ValueError(f"dimension mismatch: beamformer {len(w)} vs steering {len(a)}")
    if w.geometry.kind != a.geometry.kind:
        raise ValueError(f"geometry mismatch: {w.geometry.kind} vs {a.geometry.kind}")
    return float(np.abs(a.entries @ w.entries))


def sula_gain_closed_form(theta, td_angle: float, interval: int, active: int, rho):
    """Sparse-array gain as a ratio of sines, defined by continuity at the peaks.

    ``active`` is the number of active elements and ``rho = f / f_c``.
    """
    x = np.pi * np.asarray(rho, dtype=float) * interval * (np.asarray(theta, dtype=float) - td_angle) / 2.0
    # |sin(Q x) / (Q sin x)| has period pi; reducing first keeps Q x accurate near the peaks
    x = x - np.pi * np.round(x / np.pi)
    num = np.sin(active * x)
    den = active * np.sin(x)
    # The continuous limit at sin(x) = 0 has magnitude 1.
    singular = np.abs(den) < 1e-12
    safe = np.where(singular, 1.0, den)
    return np.where(singular, 1.0, np.abs(num / safe))
