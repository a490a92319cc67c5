import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optoscatter.core import InvalidParameterError, PhotonPacket, SystemParams
from optoscatter.oracle import (CoverageError, OracleGrid, _Rhs, build_initial, convergence_sweep,
                                integrate, single_photon_filter_occupation, window_loss)


def small_grid(g0=0.3, gamma=0.1, n_ph=2, n_k=61, w=1.5):
    return OracleGrid(SystemParams(g0, gamma), n_ph, n_k, w)


def weighted_norm_rate(rhs, y):
    """d/dt of |a|^2 + |b|^2 + |c|^2 / 2 along the flow."""
    dy = rhs(0.7, y)
    a, b, c = rhs.split(y)
    da, db, dc = rhs.split(dy)
    return 2 * np.real(np.vdot(a, da) + np.vdot(b, db) + 0.5 * np.vdot(c, dc))


def test_grid_geometry():
    g = small_grid(n_k=61, w=1.5)
    assert g.dk == pytest.approx(0.05)
    assert g.k[0] == -1.5 and g.k[-1] == 1.5
    assert g.xi_d == pytest.approx(math.sqrt(0.1 * 0.05 / (2 * math.pi)))
    assert g.revival_time == pytest.approx(2 * math.pi / 0.05)
    assert g.scaled(n_k_factor=2).n_k == 121
    assert g.scaled(n_k_factor=2, w_factor=2).dk == pytest.approx(g.dk)


@pytest.mark.parametrize("kw", [{"n_k": 2}, {"w": 0.0}, {"n_ph": -1}])
def test_grid_rejects(kw):
    with pytest.raises(InvalidParameterError):
        small_grid(**kw)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_generator_conserves_the_norm(seed):
    rhs = _Rhs(small_grid(g0=0.6, n_ph=2, n_k=21))
    rng = np.random.default_rng(seed)
    M, K = rhs.M, rhs.K
    a = rng.normal(size=M) + 1j * rng.normal(size=M)
    b = rng.normal(size=(M, K)) + 1j * rng.normal(size=(M, K))
    c = rng.normal(size=(M, K, K)) + 1j * rng.normal(size=(M, K, K))
    c = c + c.transpose(0, 2, 1)
    y = np.concatenate([a, b.ravel(), c.ravel()])
    assert abs(weighted_norm_rate(rhs, y)) < 1e-12 * np.vdot(y, y).real


def test_initial_state():
    g = small_grid(n_ph=2, n_k=121, w=1.5)
    sys = build_initial(PhotonPacket(-0.09, 0.1, 0.05), 1, g)
    assert sys.norm() == pytest.approx(1.0, abs=1e-14)
    assert np.all(sys.a == 0) and np.all(sys.b == 0)
    assert np.all(sys.c[0] == 0) and np.all(sys.c[2] == 0)
    np.testing.assert_allclose(sys.c[1], sys.c[1].T, atol=1e-15 * np.abs(sys.c[1]).max())
    assert np.sum(np.abs(sys.state) ** 2) == pytest.approx(1.0, abs=1e-14)
    assert sys.state.size == 3 + 3 * 121 + 3 * 121 * 122 // 2


def test_window_deficit_halves_with_the_window():
    pk = PhotonPacket(0.0, 0.0, 0.02)
    losses = [window_loss(pk, w) for w in (2.0, 4.0, 8.0)]
    assert losses[0] == pytest.approx(4 * 0.02 / (math.pi * 2.0), rel=0.02)
    assert losses[1] / losses[0] == pytest.approx(0.5, rel=0.01)
    assert losses[2] / losses[1] == pytest.approx(0.5, rel=0.01)


def test_coverage_error():
    with pytest.raises(CoverageError):
        build_initial(PhotonPacket(1.4, 0.0, 0.02), 0, small_grid(w=1.5))
    with pytest.raises(InvalidParameterError):
        build_initial(PhotonPacket(0.0, 0.0, 0.02), 3, small_grid(n_ph=2))


def test_short_run_conserves_norm():
    sys = build_initial(PhotonPacket(-0.09, -0.09, 0.05), 0, small_grid(n_k=61))
    tr = integrate(sys, 20.0, np.linspace(0, 20, 5), rtol=1e-10, atol=1e-13)
    assert tr.norm_drift < 1e-8
    assert tr.p1[0] == 0 and tr.p2[0] == 0
    assert np.all(tr.p1 + tr.p2 <= 1)
    assert sys.t == 20.0


def test_revival_warning():
    sys = build_initial(PhotonPacket(0.0, 0.0, 0.05), 0, small_grid(n_k=31, w=1.0))
    with pytest.warns(RuntimeWarning, match="revival"):
        integrate(sys, 100.0, [0.0, 100.0], rtol=1e-4, atol=1e-6)
    with pytest.raises(InvalidParameterError):
        integrate(sys, 50.0)


@pytest.fixture(scope="module")
def linear_runs():
    par = SystemParams(0.0, 0.2)
    pk = PhotonPacket(0.0, 0.0, 0.05)
    t = np.linspace(0, 60, 13)
    p = single_photon_filter_occupation(0.2, 0.05, 0.0, t)
    out = []
    for w in (2.0, 4.0):
        sys = build_initial(pk, 0, OracleGrid(par, 1, int(50 * w) + 1, w))
        tr = integrate(sys, 60.0, t, rtol=1e-8, atol=1e-10)
        out.append((sys.window_deficit, np.max(np.abs(tr.p2 - p**2)),
                    np.max(np.abs(tr.p1 - 2 * p * (1 - p)))))
    return out


def test_linear_cavity_limit_is_window_limited(linear_runs):
    """Without coupling the oracle converges to independent photons at the window rate."""
    for loss, e2, e1 in linear_runs:
        assert e2 < loss and e1 < loss
    (l0, a2, a1), (l1, b2, b1) = linear_runs
    assert b2 / a2 == pytest.approx(l1 / l0, rel=0.25)
    assert b1 < 0.5 * a1


def test_convergence_sweep_small():
    grid = OracleGrid(SystemParams(0.3, 0.1), 2, 161, 2.0)
    pk = PhotonPacket(-0.09, -0.09, 0.05)
    rep = convergence_sweep(grid, pk, 0, 30.0, factors=(0.5, 0.75, 1.0),
                            times=np.linspace(0, 30, 7), rtol=1e-7, atol=1e-9)
    assert len(rep.trajectories) == 3 and len(rep.labels) == 2
    assert rep.monotone
    assert max(rep.max_diff_p1[-1], rep.max_diff_p2[-1]) < 0.05
    assert "monotone=yes" in rep.as_text()
    with pytest.raises(InvalidParameterError):
        convergence_sweep(grid, pk, 0, 10.0, factors=(1.0,))
    with pytest.raises(InvalidParameterError):
        convergence_sweep(grid, pk, 0, 10.0, scale="dk")
