"""Near-field and far-field LoS channel responses for the three array geometries.

Steering vectors store the entries of the Hermitian row ``b^H`` (or ``a^H``):
``[b^H]_n = exp(-j 2 pi / lambda (r_n - r_0)) / sqrt(N)`` and
``[a^H]_q = exp(+j 2 pi / lambda q s theta) / sqrt(Q)``. A beamformer ``w``
is matched to a steering vector ``s`` when ``w = conj(s)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import (
    SPEED_OF_LIGHT,
    AntennaIndexSet,
    FrequencyGrid,
    GeometryError,
    PolarPoint,
)

NEAR_FIELD_MODES = ("exact", "fresnel")


class RangeBoundsError(ValueError):
    pass


def exact_element_range(user: PolarPoint, position):
    """Distance from the element at ``(0, position)`` to the user."""
    position = np.asarray(position, dtype=float)
    r, t = user.range, user.angle
    return np.sqrt(r * r + position * position - 2.0 * r * t * position)


def _exact_range_offset(user: PolarPoint, position: np.ndarray) -> np.ndarray:
    # r_n - r_0 without cancellation: (x^2 - 2 r t x) / (r_n + r_0)
    r, t = user.range, user.angle
    return (position * position - 2.0 * r * t * position) / (
        exact_element_range(user, position) + r
    )


def fresnel_element_range(user: PolarPoint, n, spacing: float):
    x = np.asarray(n, dtype=float) * spacing
    return user.range - x * user.angle + x * x * user.mu


def path_gain(freq, r: float):
    """Free-space LoS amplitude ``lambda / (4 pi r)``."""
    return SPEED_OF_LIGHT / (4.0 * np.pi * np.asarray(freq, dtype=float) * r)


@dataclass(frozen=True, eq=False)
class SteeringVector:
    geometry: AntennaIndexSet
    freq: float
    entries: np.ndarray

    def __len__(self) -> int:
        return len(self.entries)


def _near_field_phase_rows(
    user: PolarPoint, geometry: AntennaIndexSet, freqs: np.ndarray, mode: str
) -> np.ndarray:
    if geometry.kind == "sparse_subarray":
        raise GeometryError("the sparse subarray link is modeled in the far field only")
    if mode not in NEAR_FIELD_MODES:
        raise ValueError(f"mode must be one of {NEAR_FIELD_MODES}, got {mode!r}")
    x = geometry.positions
    if mode == "exact":
        offset = _exact_range_offset(user, x)
    else:
        offset = fresnel_element_range(user, geometry.indices, geometry.spacing) - user.range
    k = 2.0 * np.pi * np.atleast_1d(freqs) / SPEED_OF_LIGHT
    return np.exp(-1j * np.outer(k, offset)) / np.sqrt(geometry.count)


def _far_field_rows(theta: float, geometry: AntennaIndexSet, freqs: np.ndarray) -> np.ndarray:
    k = 2.0 * np.pi * np.atleast_1d(freqs) / SPEED_OF_LIGHT
    return np.exp(1j * np.outer(k, geometry.positions * theta)) / np.sqrt(geometry.count)


def near_field_steering(
    user: PolarPoint, geometry: AntennaIndexSet, freq: float, mode: str = "exact"
) -> SteeringVector:
    row = _near_field_phase_rows(user, geometry, np.array([freq]), mode)[0]
    return SteeringVector(geometry, float(freq), row)


def far_field_steering(theta: float, geometry: AntennaIndexSet, freq: float) -> SteeringVector:
    if geometry.kind == "full":
        raise GeometryError("the full array is modeled in the near field; use near_field_steering")
    return SteeringVector(geometry, float(freq), _far_field_rows(theta, geometry, np.array([freq]))[0])


@dataclass(frozen=True, eq=False)
class LosChannel:
    """Per-subcarrier LoS channel rows ``h_m^H``.

    ``rows[m]`` holds the entries of ``h_m^H`` so the noise-free received
    sample for weights ``w`` is ``sqrt(P_t) * rows[m] @ w``.
    """

    geometry: AntennaIndexSet
    freqs: np.ndarray
    rows: np.ndarray
    path_gains: np.ndarray
    user: PolarPoint
    mode: str

    def subset(self, index) -> "LosChannel":
        """Channel restricted to the subcarriers selected by ``index`` (0-based)."""
        index = np.atleast_1d(index)
        return LosChannel(
            self.geometry, self.freqs[index], self.rows[index], self.path_gains[index], self.user, self.mode
        )


def _check_bounds(user: PolarPoint, range_bounds) -> None:
    if range_bounds is None:
        return
    lo, hi = range_bounds
    # small slack so grid endpoints computed in floating point stay admissible
    if not (lo * (1 - 1e-12) <= user.range <= hi * (1 + 1e-12)):
        raise RangeBoundsError(f"user range {user.range} m outside the validated bounds [{lo}, {hi}] m")


def los_channel(
    user: PolarPoint,
    geometry: AntennaIndexSet,
    freqs,
    mode: str | None = None,
    range_bounds=None,
) -> LosChannel:
    """LoS channel of ``geometry`` towards ``user`` over ``freqs``.

    ``freqs`` may be a :class:`FrequencyGrid` or an array of frequencies.
    The full array defaults to the exact spherical model (``mode="exact"``,
    ``"fresnel"`` also accepted) and includes the global phase
    ``exp(-j 2 pi r_0 / lambda_m)``. Subarrays default to ``mode="far"``,
    the planar-wavefront model without global phase.
    """
    if isinstance(freqs, FrequencyGrid):
        freqs = freqs.freqs
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    _check_bounds(user, range_bounds)
    if mode is None:
        mode = "exact" if geometry.kind == "full" else "far"
    beta = path_gain(freqs, user.range)
    scale = np.sqrt(geometry.count) * beta
    if mode == "far":
        if geometry.kind == "full":
            raise GeometryError("far-field mode is only defined for the central subarrays")
        rows = _far_field_rows(user.angle, geometry, freqs) * scale[:, None]
    else:
        rows = _near_field_phase_rows(user, geometry, freqs, mode)
        global_phase = np.exp(-2j * np.pi * freqs * user.range / SPEED_OF_LIGHT)
        rows = rows * (scale * global_phase)[:, None]
    return LosChannel(geometry, freqs, rows, beta, user, mode)


def planar_mismatch_gain(user: PolarPoint, geometry: AntennaIndexSet, freq: float) -> float:
    """``|a_planar^H b_spherical|`` for a subarray geometry.

    Quantifies how well the planar model used for the central subarrays
    matches the exact spherical wavefront at ``user``; 1 means identical.
    """
    planar = _far_field_rows(user.angle, geometry, np.array([freq]))[0]
    offset = _exact_range_offset(user, geometry.positions)
    k = 2.0 * np.pi * freq / SPEED_OF_LIGHT
    spherical = np.exp(-1j * k * offset) / np.sqrt(geometry.count)
    return float(np.abs(np.vdot(planar, spherical)))
