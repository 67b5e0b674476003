import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from xlbeam.beamforming import (
    Beamformer,
    TdPsParams,
    array_gain,
    combined_beamformer,
    ps_beamformer,
    sula_gain_closed_form,
    td_beamformer,
    td_delays,
    td_weights,
)
from xlbeam.channel import far_field_steering, near_field_steering
from xlbeam.config import (
    SPEED_OF_LIGHT,
    PolarPoint,
    SystemConfig,
    dense_subarray,
    full_array,
    make_frequency_grid,
    sparse_subarray,
)

CFG = SystemConfig()
FULL, DENSE, SPARSE = full_array(CFG), dense_subarray(CFG), sparse_subarray(CFG)
GRID = make_frequency_grid(CFG)


def direct_sula_gain(theta, td_angle, f):
    # explicit sum over active elements, no shared code with the library
    lam = SPEED_OF_LIGHT / f
    d = SPEED_OF_LIGHT / 60e9 / 2
    total = 0j
    for q in range(-8, 9):
        total += np.exp(1j * 2 * np.pi / lam * q * 8 * d * (theta - td_angle))
    return abs(total) / 17


def test_params_must_be_finite():
    with pytest.raises(ValueError):
        TdPsParams(td_angle=math.nan)
    assert TdPsParams(td_angle=-80.8).td_angle == -80.8


def test_zero_td_parameters_give_equal_phase():
    w = td_beamformer(TdPsParams(), FULL, 60.3e9)
    assert np.allclose(w.entries, 1 / math.sqrt(513))


@pytest.mark.parametrize("geometry", [FULL, DENSE, SPARSE])
def test_unit_norm_and_flat_magnitude(geometry):
    p = TdPsParams(td_angle=-3.2, td_curvature=-0.4, ps_angle=0.3, ps_curvature=0.7)
    for w in (td_beamformer(p, geometry, 61e9), ps_beamformer(p, geometry, 60e9), combined_beamformer(p, geometry, 59e9, 60e9)):
        assert np.allclose(np.abs(w.entries), 1 / math.sqrt(geometry.count))
        assert abs(np.linalg.norm(w.entries) - 1) <= 1e-12


def test_td_matches_far_field_steering():
    for geometry in (DENSE, SPARSE):
        w = td_beamformer(TdPsParams(td_angle=0.31), geometry, 60.7e9)
        a = far_field_steering(0.31, geometry, 60.7e9)
        assert array_gain(w, a) == pytest.approx(1.0, abs=1e-12)


def test_td_matches_near_field_focus_in_fresnel_model():
    u = PolarPoint(20.0, 0.2)
    w = td_beamformer(TdPsParams(td_angle=u.angle, td_curvature=u.mu), FULL, 60.4e9)
    s = near_field_steering(u, FULL, 60.4e9, "fresnel")
    assert array_gain(w, s) == pytest.approx(1.0, abs=1e-12)


def test_delays_reproduce_phases():
    p = TdPsParams(td_angle=-6.125)
    tau = td_delays(p, SPARSE)
    q = SPARSE.indices
    assert np.allclose(tau, q * 8 * CFG.antenna_spacing * -6.125 / SPEED_OF_LIGHT, rtol=0, atol=1e-20)
    f = 59.7e9
    via_delay = np.exp(-2j * np.pi * f * tau) / math.sqrt(17)
    assert np.array_equal(np.round(via_delay, 12), np.round(td_beamformer(p, SPARSE, f).entries, 12))


def test_ps_is_frequency_independent_and_equals_td_at_carrier():
    p = TdPsParams(ps_angle=0.4, ps_curvature=0.05)
    w = ps_beamformer(p, FULL, 60e9)
    td = td_beamformer(TdPsParams(td_angle=0.4, td_curvature=0.05), FULL, 60e9)
    assert np.allclose(w.entries, td.entries)
    assert np.allclose(ps_beamformer(TdPsParams(), FULL, 60e9).entries, 1 / math.sqrt(513))


def test_ps_phase_additivity():
    a = TdPsParams(ps_angle=0.2, ps_curvature=0.01)
    b = TdPsParams(ps_angle=-0.5, ps_curvature=0.03)
    ab = TdPsParams(ps_angle=-0.3, ps_curvature=0.04)
    wa, wb, wab = (ps_beamformer(p, DENSE, 60e9).entries for p in (a, b, ab))
    assert np.allclose(wa * wb * math.sqrt(129), wab)


def test_combined_reduces_to_td_without_ps():
    p = TdPsParams(td_angle=0.1, td_curvature=0.02)
    assert np.allclose(combined_beamformer(p, FULL, 61e9, 60e9).entries, td_beamformer(p, FULL, 61e9).entries)


def test_combined_is_phase_sum():
    p = TdPsParams(td_angle=0.1, td_curvature=-0.3, ps_angle=-0.2, ps_curvature=0.35)
    c = combined_beamformer(p, DENSE, 59.1e9, 60e9).entries
    t = td_beamformer(p, DENSE, 59.1e9).entries
    s = ps_beamformer(p, DENSE, 60e9).entries
    assert np.allclose(c, t * s * math.sqrt(129))


def test_td_weights_require_carrier_for_ps_part():
    with pytest.raises(ValueError):
        td_weights(TdPsParams(ps_angle=0.1), FULL, [60e9])


def test_range_design_peaks_at_mean_curvature_at_carrier():
    mu_bar, mu_th = 0.03, 0.8208
    p = TdPsParams(td_angle=0.0, td_curvature=mu_bar - mu_th, ps_angle=0.0, ps_curvature=mu_th)
    w = combined_beamformer(p, FULL, 60e9, 60e9)
    mus = np.linspace(0.005, 0.08, 751)
    gains = [array_gain(w, near_field_steering(PolarPoint(1 / (2 * mu), 0.0), FULL, 60e9)) for mu in mus]
    assert mus[int(np.argmax(gains))] == pytest.approx(mu_bar, abs=2e-4)


def test_gain_examples():
    a = far_field_steering(0.2, DENSE, 60e9)
    w = Beamformer(DENSE, 60e9, np.conj(a.entries), TdPsParams())
    assert array_gain(w, a) == pytest.approx(1.0)
    # orthogonal DFT directions at the carrier
    w = td_beamformer(TdPsParams(td_angle=0.0), DENSE, 60e9)
    assert array_gain(w, far_field_steering(2 / 129, DENSE, 60e9)) == pytest.approx(0.0, abs=1e-12)


def test_gain_rejects_mismatched_dimensions():
    w = td_beamformer(TdPsParams(), DENSE, 60e9)
    with pytest.raises(ValueError):
        array_gain(w, far_field_steering(0.0, SPARSE, 60e9))


def test_closed_form_matches_inner_product_on_random_angles(rng):
    td = -6.125
    for theta in rng.uniform(-1, 1, 100):
        for f in (GRID.f_low, 60.2e9, GRID.f_high):
            w = td_beamformer(TdPsParams(td_angle=td), SPARSE, f)
            direct = array_gain(w, far_field_steering(theta, SPARSE, f))
            closed = sula_gain_closed_form(theta, td, 8, 17, f / 60e9)
            assert closed == pytest.approx(direct, abs=1e-10)
            assert direct == pytest.approx(direct_sula_gain(theta, td, f), abs=1e-10)


def test_closed_form_is_one_at_removable_singularity():
    assert sula_gain_closed_form(-6.125, -6.125, 8, 17, 1.0) == 1.0
    assert sula_gain_closed_form(-6.125 + 2 / 8, -6.125, 8, 17, 1.0) == pytest.approx(1.0)


@given(
    theta=st.floats(min_value=-1, max_value=0.999),
    td=st.floats(min_value=-10, max_value=10),
    phase=st.floats(min_value=0, max_value=2 * np.pi),
    f=st.floats(min_value=58.5e9, max_value=61.5e9),
)
def test_gain_properties(theta, td, phase, f):
    w = td_beamformer(TdPsParams(td_angle=td), SPARSE, f)
    a = far_field_steering(theta, SPARSE, f)
    g = array_gain(w, a)
    assert g <= 1 + 1e-12
    rotated = Beamformer(SPARSE, f, w.entries * np.exp(1j * phase), w.params)
    assert array_gain(rotated, a) == pytest.approx(g, abs=1e-12)
    # periodic in theta with period 2 / (U rho)
    period = 2 / (8 * f / 60e9)
    shifted = sula_gain_closed_form(theta + period, td, 8, 17, f / 60e9)
    assert shifted == pytest.approx(sula_gain_closed_form(theta, td, 8, 17, f / 60e9), abs=1e-9)
