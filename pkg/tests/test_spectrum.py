import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from optoscatter.core import (Fock, InvalidParameterError, OptoscatterError, PhotonPacket, Pure,
                              SystemParams, Thermal, Truncation)
from optoscatter.longtime import AmplitudeContext
from optoscatter.spectrum import (DegenerateGridError, GridSpec, SpectrumGrid, find_peaks,
                                  joint_spectrum, spectrum_stats)

SMALL = GridSpec(-0.8, 0.4, 49)


def context(g0=0.5, n_ph=5, order="exact", d1=None, d2=None, eps=0.01):
    par = SystemParams(g0, 0.1)
    d1 = -par.nu if d1 is None else d1
    d2 = d1 if d2 is None else d2
    return AmplitudeContext(par, PhotonPacket(d1, d2, eps), Truncation(n_ph=n_ph), 0, order)


@pytest.fixture(scope="module")
def base():
    return joint_spectrum(context(), Fock(0), SMALL)


def test_grid_spec():
    g = GridSpec(-1.0, 1.0, 5)
    np.testing.assert_array_equal(g.axis, [-1.0, -0.5, 0.0, 0.5, 1.0])
    assert g.step == 0.5
    for kw in ({"lo": 1.0, "hi": 0.0}, {"n": 1}, {"hi": float("inf")}):
        with pytest.raises(InvalidParameterError):
            GridSpec(**kw)


def test_spectrum_is_symmetric_and_nonnegative(base):
    assert np.all(base.values >= 0)
    np.testing.assert_array_equal(base.values, base.values.T)
    assert base.values.shape == (49, 49)
    assert base.metadata["mirror"] == {"kind": "fock", "n0": 0}


def test_rows_are_row_major(base):
    rows = list(base.rows())
    assert len(rows) == 49 * 49
    p, q, s = rows[1]
    assert p == base.p_axis[0] and q == base.q_axis[1] and s == base.values[0, 1]


def test_mirror_state_equivalences(base):
    ctx = context()
    for other in (Pure((1.0,)), Pure((1.0, 0.0)), Thermal(0.0)):
        np.testing.assert_array_equal(joint_spectrum(ctx, other, SMALL).values, base.values)


def test_pure_superposition_differs_from_mixture():
    ctx = context(n_ph=6)
    amp = (math.sqrt(0.5), math.sqrt(0.5))
    pure = joint_spectrum(ctx, Pure(amp), SMALL).values
    mix = 0.5 * (joint_spectrum(ctx, Fock(0), SMALL).values + joint_spectrum(ctx, Fock(1), SMALL).values)
    assert np.max(np.abs(pure - mix)) > 1e-3 * mix.max()


def test_workers_do_not_change_the_result(base):
    par = joint_spectrum(context(), Fock(0), SMALL, workers=2)
    np.testing.assert_array_equal(par.values, base.values)


def test_stats_are_invariant_under_axis_swap(base):
    a = spectrum_stats(base)
    b = spectrum_stats(SpectrumGrid(base.q_axis, base.p_axis, base.values.T.copy()))
    assert a.pearson_corr == pytest.approx(b.pearson_corr, rel=1e-12)
    assert a.mean_p == pytest.approx(b.mean_q, rel=1e-12)
    assert a.width_p == pytest.approx(b.width_q, rel=1e-12)


def test_stats_of_a_product_are_uncorrelated():
    ax = np.linspace(-1, 1, 41)
    f = np.exp(-((ax - 0.2) ** 2) / 0.05)
    stats = spectrum_stats(SpectrumGrid(ax, ax, np.outer(f, f)))
    assert abs(stats.pearson_corr) < 1e-12
    assert stats.mean_p == pytest.approx(0.2, abs=1e-6)
    assert stats.peak_locations == [pytest.approx((0.2, 0.2), abs=1e-12)]
    assert "n_peaks=1" in stats.as_text()


@given(st.floats(-0.99, 0.99))
def test_pearson_corr_of_a_gaussian_ridge(rho):
    ax = np.linspace(-6, 6, 121)
    p, q = np.meshgrid(ax, ax, indexing="ij")
    s = np.exp(-(p**2 - 2 * rho * p * q + q**2) / (2 * (1 - rho**2)))
    assert spectrum_stats(SpectrumGrid(ax, ax, s)).pearson_corr == pytest.approx(rho, abs=0.02)


def test_find_peaks():
    s = np.zeros((5, 5))
    s[1, 1], s[3, 3], s[3, 0] = 1.0, 0.5, 0.001
    assert find_peaks(s) == [(1, 1), (3, 3)]
    s[1, 2] = 1.0  # a flat top is not a strict maximum
    assert find_peaks(s) == [(3, 3)]


def test_degenerate_grid():
    ax = np.linspace(0, 1, 3)
    with pytest.raises(DegenerateGridError):
        spectrum_stats(SpectrumGrid(ax, ax, np.zeros((3, 3))))


def test_rejects_mirror_beyond_truncation():
    with pytest.raises(OptoscatterError):
        joint_spectrum(context(n_ph=2), Fock(3), SMALL)


def test_zeroth_order_panel_is_one_anticorrelated_ridge():
    """Without phonon exchange only the Kerr-type shift remains: all weight sits
    on the energy-conserving line dp + dq = 2 delta."""
    ctx = context(g0=math.sqrt(0.2), n_ph=6, order="zeroth")
    grid = joint_spectrum(ctx, Fock(0), GridSpec(-1.0, 0.6, 161))
    stats = spectrum_stats(grid)
    two_delta = 2 * ctx.packet.delta1
    assert stats.pearson_corr < -0.3
    assert stats.peak_locations
    for p, q in stats.peak_locations:
        assert abs(p + q - two_delta) <= 0.02 + 1e-12
    p, q = np.meshgrid(grid.p_axis, grid.q_axis, indexing="ij")
    near = np.abs(p + q - two_delta) < 0.1
    assert grid.values[near].sum() > 0.85 * grid.values.sum()
