import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial.legendre import leggauss
from scipy.linalg import expm

from optoscatter.core import (Fock, InvalidParameterError, PhotonPacket, Pure, SystemParams,
                              Thermal, Truncation, TruncationError, initial_amplitude_c,
                              mirror_from_dict, n_ph_for_tail, packet_norm)

detuning = st.floats(-3, 3, allow_nan=False)
width = st.floats(1e-3, 0.5, allow_nan=False)


def test_system_params_derived_quantities():
    par = SystemParams(0.6, 0.1)
    assert par.beta0 == 0.6
    assert par.nu == pytest.approx(0.36, abs=1e-15)
    assert par.xi == pytest.approx(math.sqrt(0.1 / (2 * math.pi)))


@pytest.mark.parametrize("kw,name", [({"g0": -0.1, "gamma_c": 0.1}, "g0"),
                                     ({"g0": 0.1, "gamma_c": 0.0}, "gamma_c"),
                                     ({"g0": 0.1, "gamma_c": 0.1, "omega_m": 2.0}, "omega_m")])
def test_system_params_rejects(kw, name):
    with pytest.raises(InvalidParameterError) as err:
        SystemParams(**kw)
    assert err.value.name == name


def test_packet_rejects_negative_width():
    with pytest.raises(InvalidParameterError) as err:
        PhotonPacket(0.0, 0.0, -0.01)
    assert err.value.name == "epsilon"


@pytest.mark.parametrize("d1,d2,expected", [
    (0.0, 0.0, 0.01 / (math.pi * math.sqrt(2))),
    (0.0, 1e9, 0.01 / math.pi),
    (0.02, 0.0, 0.01 / math.pi * (1.5) ** -0.5),
])
def test_packet_norm_closed_forms(d1, d2, expected):
    assert packet_norm(PhotonPacket(d1, d2, 0.01)) == pytest.approx(expected, rel=1e-12)


@given(detuning, detuning, width)
def test_packet_norm_symmetric(d1, d2, eps):
    assert packet_norm(PhotonPacket(d1, d2, eps)) == packet_norm(PhotonPacket(d2, d1, eps))


@given(detuning, detuning, detuning, detuning, width)
def test_initial_amplitude_exchange_symmetric(p, q, d1, d2, eps):
    pk = PhotonPacket(d1, d2, eps)
    assert initial_amplitude_c(0, p, q, pk, 0) == initial_amplitude_c(0, q, p, pk, 0)


def test_initial_amplitude_kronecker_and_peak():
    pk = PhotonPacket(-50.0, 50.0, 0.01)
    assert initial_amplitude_c(1, -50.0, 50.0, pk, 0) == 0
    val = initial_amplitude_c(2, -50.0, 50.0, pk, 2)
    assert val == pytest.approx(packet_norm(pk) * (-1 / 0.01**2), rel=1e-6)


def _ordered_norm(pk, n_nodes=1200):
    """Half the full-plane integral of |C(0)|^2 with Lorentzian-adapted nodes."""
    x, w = leggauss(n_nodes)
    theta = 0.5 * math.pi * x
    centre = 0.5 * (pk.delta1 + pk.delta2)
    scale = pk.epsilon + 0.5 * abs(pk.delta1 - pk.delta2)
    k = centre + scale * np.tan(theta)
    wk = 0.5 * math.pi * w * scale / np.cos(theta) ** 2
    c = initial_amplitude_c(0, k[:, None], k[None, :], pk, 0)
    return 0.5 * float(wk @ np.abs(c) ** 2 @ wk)


@pytest.mark.parametrize("pk", [PhotonPacket(-0.09, -0.09, 0.01), PhotonPacket(0.0, 0.02, 0.01),
                                PhotonPacket(-0.36, -0.36, 0.01)])
def test_initial_state_normalized_on_ordered_region(pk):
    assert _ordered_norm(pk) == pytest.approx(1.0, abs=Truncation().quad_tol)


def test_thermal_weights_nbar_one():
    w = Thermal(1.0).amplitudes(40, 1e-8)
    n = np.arange(w.size)
    np.testing.assert_allclose(w, 2.0 ** -(n + 1), rtol=1e-14)
    assert 1 - w.sum() < 1e-8


def test_thermal_nbar_zero_is_ground_state():
    np.testing.assert_array_equal(Thermal(0.0).amplitudes(5), Fock(0).amplitudes(5).real)


def test_thermal_truncation_error_reports_deficit():
    with pytest.raises(TruncationError) as err:
        Thermal(1.0).amplitudes(8, 1e-8)
    assert err.value.deficit == pytest.approx(2.0**-9)


def test_pure_must_be_normalized():
    with pytest.raises(InvalidParameterError):
        Pure((1.0, 1.0))
    assert Pure((0.6, 0.8j)).amplitudes(3).tolist() == [0.6, 0.8j]


@given(st.one_of(
    st.builds(Fock, st.integers(0, 10)),
    st.builds(Thermal, st.floats(0, 5, allow_nan=False)),
    st.lists(st.complex_numbers(max_magnitude=1, allow_nan=False), min_size=1, max_size=5)
    .filter(lambda c: sum(abs(x) ** 2 for x in c) > 1e-3)
    .map(lambda c: Pure(tuple(np.asarray(c) / math.sqrt(sum(abs(x) ** 2 for x in c))))),
))
def test_mirror_dict_round_trip(mirror):
    assert mirror_from_dict(mirror.to_dict()) == mirror


@pytest.mark.parametrize("d", [{"kind": "coherent"}, {"kind": "fock", "n0": 1, "nbar": 2},
                               {"kind": "fock", "n0": 1.5}, {"kind": "thermal"}])
def test_mirror_from_dict_strict(d):
    with pytest.raises(InvalidParameterError):
        mirror_from_dict(d)


def test_truncation_checks():
    with pytest.raises(InvalidParameterError):
        Truncation(n_ph=-1)
    with pytest.raises(InvalidParameterError):
        Truncation(n_ph=2).check_labels(2)
    t = Truncation(n_ph=4, k_window=3.0)
    assert t.doubled() == Truncation(8, t.tol, 6.0, t.quad_tol)
    par = SystemParams(0.3, 0.1)
    assert Truncation(n_ph=3).window(par, PhotonPacket(0, 0, 0.01)) == pytest.approx(4.0 + 16)


def _tail_rule_oracle(beta0, tol, dim=120):
    """Smallest n_ph with sum_{n > n_ph} |<n|D(2 beta0)|0>|^2 < tol, from a dense exponential."""
    a = np.diag(np.sqrt(np.arange(1, dim)), 1)
    col = expm(2 * beta0 * (a.T - a))[:, 0]
    tail = np.cumsum((col**2)[::-1])[::-1]
    return int(np.argmax(tail[1:] < tol))


@pytest.mark.parametrize("g0", [0.3, 0.6, 1.0])
def test_n_ph_tail_rule_matches_dense_oracle(g0):
    assert n_ph_for_tail(SystemParams(g0, 0.1), 0, 1e-8) == _tail_rule_oracle(g0, 1e-8)


def test_n_ph_tail_rule_frozen_value():
    assert n_ph_for_tail(SystemParams(0.6, 0.1), 0, 1e-8) == 12


@settings(max_examples=25)
@given(st.floats(0, 1.2), st.integers(0, 3))
def test_n_ph_tail_rule_covers_labels(g0, n0):
    assert n_ph_for_tail(SystemParams(g0, 0.1), n0, 1e-8) >= n0 + 1
