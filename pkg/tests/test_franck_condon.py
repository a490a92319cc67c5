import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from optoscatter.core import InvalidParameterError
from optoscatter.franck_condon import fc_overlap, fc_table, overlap_combo, overlap_matrices

# frozen from the closed form exp(-beta^2 / 2) and beta exp(-beta^2 / 2) at beta = 0.6
E_018 = 0.835270211411272
BETA_E_018 = 0.5011621268467632

betas = st.floats(-2.5, 2.5, allow_nan=False)
labels = st.integers(0, 25)


def dense_displacement(beta, dim):
    """exp(beta (b^dag - b)) on a truncated Fock space; accurate well below the cut."""
    a = np.diag(np.sqrt(np.arange(1, dim)), 1)
    return expm(beta * (a.T - a))


def test_closed_form_values():
    assert fc_overlap(0, 0, 0.6) == pytest.approx(E_018, rel=1e-14)
    assert fc_overlap(1, 0, 0.6) == pytest.approx(BETA_E_018, rel=1e-14)
    assert fc_overlap(0, 1, 0.6) == pytest.approx(-BETA_E_018, rel=1e-14)


@given(labels, labels)
def test_zero_displacement_is_identity(m, n):
    assert fc_overlap(m, n, 0.0) == (1.0 if m == n else 0.0)


@pytest.mark.parametrize("beta", [0.3, 0.6, -1.2, 2.0])
def test_table_matches_dense_exponential(beta):
    ref = dense_displacement(beta, 120)[:30, :30]
    np.testing.assert_allclose(fc_table(beta, 30).values, ref, atol=1e-12)


def test_row_orthonormality_at_dim_40():
    d = fc_table(0.6, 40).values
    assert abs(d[3] @ d[5]) < 1e-10
    assert abs(sum(fc_overlap(3, k, 0.6) * fc_overlap(5, k, 0.6) for k in range(40))) < 1e-10


def test_exact_table_rows_orthonormal():
    d = fc_table(0.6, 30).values
    np.testing.assert_allclose((d @ d.T)[:12, :12], np.eye(12), atol=1e-10)


@settings(max_examples=60)
@given(betas, labels, labels)
def test_table_entry_equals_single_overlap(beta, m, n):
    assert fc_table(beta, 26).values[m, n] == pytest.approx(fc_overlap(m, n, beta), rel=1e-11, abs=1e-300)


@given(betas, labels, labels)
def test_adjoint_and_parity_relations(beta, m, n):
    assert fc_overlap(m, n, -beta) == fc_overlap(n, m, beta)
    assert fc_overlap(m, n, beta) == (-1) ** (m - n) * fc_overlap(n, m, beta)


@given(st.floats(0.0, 2.0))
def test_table_parity_exact(beta):
    d = fc_table(beta, 12).values
    sign = (-1.0) ** np.add.outer(np.arange(12), np.arange(12))
    np.testing.assert_array_equal(d, sign * d.T)
    np.testing.assert_array_equal(fc_table(-beta, 12).values, d.T)


def test_large_labels_stay_finite():
    d = fc_table(3.0, 400).values
    assert np.all(np.isfinite(d))
    assert abs(d[200] @ d[200] - 1) < 1e-8 and abs(d[200] @ d[201]) < 1e-8
    assert math.isfinite(fc_overlap(380, 395, 3.0))


def test_zeroth_and_first_order_tables():
    np.testing.assert_array_equal(fc_table(0.7, 5, "zeroth").values, np.eye(5))
    first = fc_table(0.4, 5, "first").values
    assert first[1, 0] == pytest.approx(0.4)
    assert first[0, 1] == pytest.approx(-0.4)
    assert first[3, 2] == pytest.approx(0.4 * math.sqrt(3))


def test_first_order_is_the_derivative_at_zero():
    h = 1e-7
    deriv = (fc_table(h, 6).values - fc_table(-h, 6).values) / (2 * h)
    np.testing.assert_allclose(deriv, fc_table(1.0, 6, "first").values - np.eye(6), atol=1e-6)


def test_combos():
    assert overlap_combo("m2_n1", 0, 0, 0.6) == pytest.approx(E_018)
    assert overlap_combo("m1_n2", 0, 1, 0.6) == pytest.approx(-BETA_E_018)
    for kind in ("m2_n1", "m1_n2", "m1_n", "m_n1"):
        assert overlap_combo(kind, 2, 2, 0.0) == 1.0
        assert overlap_combo(kind, 2, 3, 0.0) == 0.0
    mats = overlap_matrices(0.6, 4)
    np.testing.assert_array_equal(mats["m1_n2"], mats["m2_n1"].T)


def test_table_rejects_bad_input():
    with pytest.raises(InvalidParameterError):
        fc_table(0.5, 0)
    with pytest.raises(InvalidParameterError):
        fc_table(0.5, 3, "second")
    with pytest.raises(InvalidParameterError):
        fc_overlap(-1, 0, 0.5)


def test_tables_are_read_only():
    t = fc_table(0.5, 3)
    with pytest.raises(ValueError):
        t.values[0, 0] = 1.0
