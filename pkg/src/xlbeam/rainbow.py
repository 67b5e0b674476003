"""Beam-pattern analytics of the sparse central subarray over the whole band.

A TD steering parameter ``theta'`` on a sparse array with activation interval
``U`` puts a beam at every ``theta' + 2 k / (U rho)`` inside ``[-1, 1)``. Taking
``theta' < -1`` and grouping beams by grating index ``k`` gives one "rainbow
block" per index of the carrier's beam set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import SPEED_OF_LIGHT, FrequencyGrid


def _k_range(td_angle: float, interval: int, rho: float) -> tuple[int, int]:
    period = 2.0 / (interval * rho)
    k_lo = math.ceil((-1.0 - td_angle) / period)
    k_hi = math.ceil((1.0 - td_angle) / period) - 1
    # ceil on floating point can be off by one right at a boundary
    while td_angle + k_lo * period < -1.0:
        k_lo += 1
    while td_angle + (k_lo - 1) * period >= -1.0:
        k_lo -= 1
    while td_angle + k_hi * period >= 1.0:
        k_hi -= 1
    while td_angle + (k_hi + 1) * period < 1.0:
        k_hi += 1
    return k_lo, k_hi


def multi_beam_angles(td_angle: float, interval: int, freq: float, carrier: float):
    """Physical beam angles of one subcarrier, ascending, with their grating indices.

    Returns:
        (angles, ks): float and int arrays of equal length.
    """
    if interval < 1:
        raise ValueError("activation interval must be >= 1")
    rho = freq / carrier
    k_lo, k_hi = _k_range(td_angle, interval, rho)
    ks = np.arange(k_lo, k_hi + 1)
    return td_angle + 2.0 * ks / (interval * rho), ks


def num_beams(td_angle: float, interval: int, freq: float, carrier: float) -> int:
    return len(multi_beam_angles(td_angle, interval, freq, carrier)[1])


def is_ineffective_td(td_angle: float) -> bool:
    """True when every subcarrier shares a beam at ``td_angle`` itself."""
    return -1.0 <= td_angle < 1.0


@dataclass(frozen=True, eq=False)
class RainbowBlock:
    """One grating index ``k_c`` followed across all subcarriers.

    ``angles`` has one entry per subcarrier (ascending frequency, so the
    angles descend). Entries outside ``[-1, 1)`` are kept and marked in
    ``physical``. ``high_edge`` is the angle at ``f_H`` and ``low_edge`` the
    angle at ``f_L``; ``gap_to_next`` is ``None`` for the last block.
    """

    index: int
    central_k: int
    td_angle: float
    interval: int
    angles: np.ndarray
    physical: np.ndarray
    high_edge: float
    low_edge: float
    gap_to_next: float | None

    @property
    def width(self) -> float:
        return self.low_edge - self.high_edge

    @property
    def center(self) -> float:
        """Beam angle at the carrier frequency."""
        return self.td_angle + 2.0 * self.central_k / self.interval


def nominal_block_width(central_k: int, interval: int, grid: FrequencyGrid) -> float:
    """Closed-form block width ``2 f_c B k / (U f_L f_H)``.

    Uses the full bandwidth ``B``; the exact edge difference uses
    ``f_H - f_L = B (M-1)/M`` instead.
    """
    return 2.0 * grid.carrier * grid.bandwidth * central_k / (interval * grid.f_low * grid.f_high)


def rainbow_blocks(td_angle: float, interval: int, grid: FrequencyGrid) -> list[RainbowBlock]:
    if td_angle >= -1.0:
        raise ValueError(f"rainbow blocks are defined for td_angle < -1, got {td_angle}")
    _, central_ks = multi_beam_angles(td_angle, interval, grid.carrier, grid.carrier)
    rho = grid.ratios
    angle_sets = []
    for k in central_ks:
        angles = td_angle + 2.0 * k / (interval * rho)
        angles.setflags(write=False)
        angle_sets.append(angles)
    blocks = []
    for u, (k, angles) in enumerate(zip(central_ks, angle_sets), start=1):
        gap = None
        if u < len(central_ks):
            gap = float(angle_sets[u][-1] - angles[0])
        blocks.append(
            RainbowBlock(
                index=u,
                central_k=int(k),
                td_angle=td_angle,
                interval=interval,
                angles=angles,
                physical=(angles >= -1.0) & (angles < 1.0),
                high_edge=float(angles[-1]),
                low_edge=float(angles[0]),
                gap_to_next=gap,
            )
        )
    return blocks


def solve_sweep_td_parameter(interval: int, grid: FrequencyGrid) -> float:
    """TD angle whose rainbow blocks tile ``[-1, 1]`` with the least overlap.

    ``theta' = -1 + (1 - 2 ceil(f_H / B)) / U``.
    """
    k_th = grid.f_high / grid.bandwidth
    return -1.0 + (1.0 - 2.0 * math.ceil(k_th)) / interval


def first_grating_index(grid: FrequencyGrid) -> int:
    """``ceil(f_H / B)``, the carrier's first grating index under the sweep parameter."""
    return math.ceil(grid.f_high / grid.bandwidth)


@dataclass(frozen=True)
class CoverageReport:
    covered: bool
    max_gap: float
    max_overlap: float
    low_edge_gap: float
    high_edge_gap: float
    overlap_estimate: float


def coverage_report(td_angle: float, interval: int, grid: FrequencyGrid) -> CoverageReport:
    """Check whether the rainbow blocks seamlessly cover ``[-1, 1]``.

    ``max_gap`` is the largest uncovered stretch between consecutive blocks
    or at either end of the domain (non-positive when covered);
    ``max_overlap`` the largest overlap between consecutive blocks.
    ``overlap_estimate`` is the small-bandwidth approximation ``2 B / f_c``.
    """
    blocks = rainbow_blocks(td_angle, interval, grid)
    gaps = [b.gap_to_next for b in blocks[:-1]]
    low_edge_gap = blocks[0].high_edge - (-1.0)
    high_edge_gap = 1.0 - blocks[-1].low_edge
    max_gap = max(gaps + [low_edge_gap, high_edge_gap])
    max_overlap = max([0.0] + [-g for g in gaps])
    return CoverageReport(
        covered=max_gap <= 0.0,
        max_gap=float(max_gap),
        max_overlap=float(max_overlap),
        low_edge_gap=float(low_edge_gap),
        high_edge_gap=float(high_edge_gap),
        overlap_estimate=2.0 * grid.bandwidth / grid.carrier,
    )


def beam_table(td_angle: float, interval: int, grid: FrequencyGrid) -> list[tuple]:
    """Rows ``(m, f_m, k, theta, block, physical)`` for every block angle.

    Physical beams of a subcarrier that belong to no block (grating indices
    outside the carrier's set) are listed with block 0.
    """
    blocks = rainbow_blocks(td_angle, interval, grid)
    rows = []
    for m, f in enumerate(grid.freqs, start=1):
        rho = f / grid.carrier
        seen = set()
        for b in blocks:
            theta = td_angle + 2.0 * b.central_k / (interval * rho)
            rows.append((m, float(f), b.central_k, float(theta), b.index, bool(-1.0 <= theta < 1.0)))
            seen.add(b.central_k)
        angles, ks = multi_beam_angles(td_angle, interval, f, grid.carrier)
        for theta, k in zip(angles, ks):
            if int(k) not in seen:
                rows.append((m, float(f), int(k), float(theta), 0, True))
    return rows


@dataclass(frozen=True, eq=False)
class RangeSpread:
    spread: float
    first_order: float
    focus: np.ndarray

    def beams_in_span(self, span: float) -> float:
        """How many adjacent foci fit in a curvature span of width ``span``."""
        return span / abs(self.first_order)


def td_only_range_spread(
    grating_index: int, grid: FrequencyGrid, td_curvature: float = 0.0
) -> RangeSpread:
    """Focus curvatures of a TD-only full-array beam on range grating lobe ``s``.

    ``focus[m] = mu' + (2 s / d_c)(f_c / f_m)``; ``first_order`` is the
    adjacent-subcarrier spread ``4 s B / (c M)`` and ``spread`` the mean exact
    difference between neighbouring foci.
    """
    if grating_index == 0:
        raise ValueError("grating index 0 gives every subcarrier the same focus; no spread")
    d_c = SPEED_OF_LIGHT / grid.carrier / 2.0
    focus = td_curvature + (2.0 * grating_index / d_c) * grid.carrier / grid.freqs
    first_order = 4.0 * grating_index * grid.bandwidth / (SPEED_OF_LIGHT * grid.num_subcarriers)
    spread = float(np.mean(np.abs(np.diff(focus))))
    return RangeSpread(spread=spread, first_order=first_order, focus=focus)
