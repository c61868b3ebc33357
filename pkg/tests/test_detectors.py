import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import poisson

from tightineq.detectors import (DetectorModel, DomainError, click_fock_closed_form,
                                 povm_fock_diagonal, q_symbol)

DETECTORS = [DetectorModel(k, n) for k in ("pnr", "click") for n in (1, 2, 3, 5, 7)]
unit_t = st.floats(0.0, 1.0)


def test_parse_and_label():
    d = DetectorModel.parse("click:5")
    assert (d.kind, d.N, d.outcomes, d.label) == ("click", 5, 6, "click:5")
    with pytest.raises(ValueError):
        DetectorModel.parse("pnr")
    with pytest.raises(ValueError):
        DetectorModel("pnr", 0)
    with pytest.raises(ValueError):
        DetectorModel("photodiode", 2)


def test_click_n2_half():
    d = DetectorModel("click", 2)
    np.testing.assert_allclose(d.q_symbols(0.5), [0.25, 0.5, 0.25], atol=1e-15)


def test_pnr_n2_unit_intensity():
    # PNR N=3 at |alpha|^2 = 1: Pi(2) = e^{-1}/2
    d = DetectorModel("pnr", 3)
    t = math.exp(-1.0 / 3)
    assert abs(q_symbol(d, 2, t) - math.exp(-1) / 2) < 1e-15
    assert abs(q_symbol(d, 2, t) - 0.1839397) < 1e-7


@pytest.mark.parametrize("d", DETECTORS, ids=lambda d: d.label)
def test_vacuum_endpoint(d):
    full = d.q_symbols(1.0)
    assert full[0] == 1.0
    assert np.all(full[1:] == 0.0)


def test_pnr_class_conditions():
    d = DetectorModel("pnr", 2)
    p0, p1 = d.q_symbols(0.0)[:2]
    assert p0 == 0.0 and p1 == 0.0
    p0, p1 = d.q_symbols(1.0)[:2]
    assert p0 == 1.0 and p1 == 0.0


@pytest.mark.parametrize("d", DETECTORS, ids=lambda d: d.label)
def test_domain_errors(d):
    with pytest.raises(DomainError):
        d.q_vector(1.5)
    with pytest.raises(DomainError):
        d.q_vector(-0.1)
    with pytest.raises(ValueError):
        d.q_vector_deriv(0.5, 3)


@settings(max_examples=200, deadline=None)
@given(unit_t, st.sampled_from(DETECTORS))
def test_normalization(t, d):
    p = d.q_symbols(t)
    assert np.all(p >= -1e-15) and np.all(p <= 1 + 1e-15)
    assert abs(p.sum() - 1.0) <= 1e-12


def test_click_n2_derivative():
    d = DetectorModel("click", 2)
    for t in np.linspace(0, 1, 11):
        np.testing.assert_allclose(d.q_vector_deriv(t, 1), [2 * t, 2 - 4 * t], atol=1e-14)


@pytest.mark.parametrize("d", DETECTORS, ids=lambda d: d.label)
@pytest.mark.parametrize("t", [0.3, 0.55, 0.8])
def test_derivatives_match_finite_differences(d, t):
    h = 1e-6
    fd1 = (d.q_vector(t + h) - d.q_vector(t - h)) / (2 * h)
    fd2 = (d.q_vector_deriv(t + h, 1) - d.q_vector_deriv(t - h, 1)) / (2 * h)
    scale1 = max(np.abs(fd1).max(), 1e-3)
    scale2 = max(np.abs(fd2).max(), 1e-3)
    assert np.abs(d.q_vector_deriv(t, 1) - fd1).max() <= 1e-8 * scale1
    assert np.abs(d.q_vector_deriv(t, 2) - fd2).max() <= 1e-8 * scale2


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 7), st.lists(unit_t, min_size=1))
def test_click_lambda_projection_is_polynomial(N, lam_seed):
    # Pi(t).lam has degree <= N: N+1 interpolation nodes predict any other point
    d = DetectorModel("click", N)
    lam = np.resize(np.asarray(lam_seed) - 0.5, N)
    nodes = np.linspace(0.05, 0.95, N + 1)
    coef = np.polyfit(nodes, d.q_vector(nodes) @ lam, N)
    for t in (0.0, 0.37, 1.0):
        assert abs(np.polyval(coef, t) - d.q_vector(t) @ lam) < 1e-9


@pytest.mark.parametrize("kind", ["pnr", "click"])
@pytest.mark.parametrize("N", [2, 3, 5])
@pytest.mark.parametrize("u", [0.1, 1.0, 5.0])
def test_fock_diagonal_poisson_oracle(kind, N, u):
    d = DetectorModel(kind, N)
    m_max = 120
    w = poisson.pmf(np.arange(m_max + 1), u)
    t = math.exp(-u / N)
    for n in range(N + 1):
        elem = povm_fock_diagonal(d, n, m_max)
        assert np.all(elem >= -1e-12) and np.all(elem <= 1 + 1e-12)
        assert abs(w @ elem - q_symbol(d, n, t)) <= 1e-10


@pytest.mark.parametrize("kind", ["pnr", "click"])
def test_fock_diagonal_sums_to_one(kind):
    d = DetectorModel(kind, 5)
    total = sum(povm_fock_diagonal(d, n, 40) for n in range(6))
    np.testing.assert_allclose(total, 1.0, atol=1e-12)


def test_fock_diagonal_special_entries():
    pnr = DetectorModel("pnr", 3)
    e = povm_fock_diagonal(pnr, 1, 10)
    assert e[1] == 1.0 and np.all(np.delete(e, 1) == 0.0)
    for N in (1, 2, 5):
        assert povm_fock_diagonal(DetectorModel("click", N), 0, 10)[0] == 1.0


def test_click_n2_no_click_poisson_average():
    # no-click projects on vacuum at unit efficiency; its Poisson average at u = 1 is e^{-1}
    d = DetectorModel("click", 2)
    w = poisson.pmf(np.arange(81), 1.0)
    elem = povm_fock_diagonal(d, 0, 80)
    assert elem[0] == 1.0 and np.all(elem[1:] == 0.0)
    assert abs(w @ elem - math.exp(-1.0)) < 1e-12
    # one fired detector out of two: 2 (1/2)^m - 2 (0)^m
    np.testing.assert_allclose(povm_fock_diagonal(d, 1, 6)[1:], 2 * 0.5 ** np.arange(1, 7), atol=1e-15)


def test_click_closed_form_matches_table():
    for N in (2, 3, 5):
        d = DetectorModel("click", N)
        m = np.arange(31)
        for n in range(N + 1):
            np.testing.assert_allclose(click_fock_closed_form(N, n, m), povm_fock_diagonal(d, n, 30),
                                       atol=1e-10)
