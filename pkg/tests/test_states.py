import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm
from scipy.stats import binom

from tightineq.detectors import DetectorModel
from tightineq.states import (TruncationError, binomial_loss, coherent, fock, gaussian_moments,
                              gaussian_photon_number_dist, phase_squeezed, photocount_dist,
                              photon_number_dist, squeezed_coherent, squeezed_coherent_amplitudes,
                              squeezed_vacuum_antisqueezed_real, uhd_click_prob, vacuum)

DIM = 80


def _ladder(dim=DIM):
    return np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)


def brute_force_state(alpha, r, phase, dim=DIM):
    """``D(alpha) S(r e^{i phase}) |0>`` by matrix exponentials in a truncated Fock space."""
    a = _ladder(dim)
    ad = a.conj().T
    zeta = r * np.exp(1j * phase)
    S = expm(0.5 * (np.conj(zeta) * a @ a - zeta * ad @ ad))
    D = expm(alpha * ad - np.conj(alpha) * a)
    vac = np.zeros(dim, dtype=complex)
    vac[0] = 1.0
    return D @ S @ vac


@pytest.mark.parametrize("alpha,r,phase", [(0.0, 0.34, 0.0), (0.8, 0.57, math.pi),
                                           (0.5 - 0.3j, 0.2, 1.1), (1.2, 0.0, 0.0)])
def test_squeezed_amplitudes_match_matrix_exponential(alpha, r, phase):
    ref = brute_force_state(alpha, r, phase)
    got = squeezed_coherent_amplitudes(alpha, r, phase, 30)
    # amplitudes agree up to a global phase
    k = int(np.argmax(np.abs(ref[:31])))
    ph = ref[k] / got[k]
    np.testing.assert_allclose(got * ph, ref[:31], atol=1e-10)


def test_fock_with_loss():
    d = photon_number_dist(fock(1, 0.7))
    np.testing.assert_allclose(d.probs[:2], [0.3, 0.7], atol=1e-15)


def test_coherent_poisson():
    d = photon_number_dist(coherent(1.0))
    assert abs(d.probs[0] - math.exp(-1)) < 1e-15
    assert d.tail_mass <= 1e-12


def test_squeezed_vacuum_closed_form():
    r = 0.34
    p = photon_number_dist(squeezed_coherent(0.0, r)).probs
    assert np.all(np.abs(p[1::2]) < 1e-15)
    # |<0|S(r)|0>|^2 = 1 / cosh r
    assert abs(p[0] - 1 / math.cosh(r)) < 1e-14
    m = np.arange(0, len(p), 2)
    closed = np.array([math.comb(int(k), int(k) // 2) for k in m]) * (math.tanh(r) / 2) ** m / math.cosh(r)
    np.testing.assert_allclose(p[::2], closed, atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 2.0), st.floats(0, 0.8), st.floats(0, 2 * math.pi), st.floats(0.05, 1.0))
def test_distribution_normalized(a, r, phase, eta):
    d = photon_number_dist(squeezed_coherent(a, r, phase, eta))
    assert np.all(d.probs >= -1e-15)
    assert abs(d.probs.sum() + d.tail_mass - 1) <= 1e-12
    assert d.tail_mass <= 1e-12


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 1.5), st.floats(0, 0.7), st.floats(0, 2 * math.pi), st.floats(0.05, 1.0))
def test_loss_commutes_with_gaussian_channel(a, r, phase, eta):
    lossy = squeezed_coherent(a, r, phase, eta)
    p = photon_number_dist(lossy).probs
    mean, cov = gaussian_moments(lossy)
    ref = gaussian_photon_number_dist(mean, cov, len(p) - 1)
    np.testing.assert_allclose(p, ref, atol=1e-9)


def test_binomial_loss_matches_pmf():
    p = np.zeros(6)
    p[5] = 1.0
    np.testing.assert_allclose(binomial_loss(p, 0.3), binom.pmf(np.arange(6), 5, 0.3), atol=1e-15)


def test_truncation_error():
    with pytest.raises(TruncationError):
        photon_number_dist(coherent(3.0), m_max=5)


def test_state_validation():
    with pytest.raises(ValueError):
        fock(1, 0.0)
    with pytest.raises(ValueError):
        squeezed_coherent(0.0, -0.1)
    with pytest.raises(ValueError):
        fock(-1)


@pytest.mark.parametrize("kind,N", [("pnr", 2), ("pnr", 5), ("click", 3), ("click", 7)])
def test_vacuum_counts(kind, N):
    P = photocount_dist(vacuum(), DetectorModel(kind, N))
    assert P[0] == 1.0 and np.all(P[1:] == 0.0)


@pytest.mark.parametrize("kind", ["pnr", "click"])
@pytest.mark.parametrize("N", [2, 3, 5])
@pytest.mark.parametrize("a", [0.3, 1.0, 2.2])
def test_coherent_counts_equal_q_symbols(kind, N, a):
    d = DetectorModel(kind, N)
    P = photocount_dist(coherent(a), d)
    np.testing.assert_allclose(P, d.q_symbols(d.t_of_intensity(a * a)), atol=1e-12)
    assert abs(P.sum() - 1) <= 1e-10


def test_uhd_vacuum_and_coherent():
    g = 1 / math.sqrt(2)
    assert uhd_click_prob(vacuum(), g) == pytest.approx(math.exp(-0.5), abs=1e-15)
    assert uhd_click_prob(vacuum(), g) == pytest.approx(0.60653, abs=1e-5)
    assert uhd_click_prob(coherent(0.4 + 0.2j), -0.3) == pytest.approx(math.exp(-abs(0.7 + 0.2j) ** 2))
    assert uhd_click_prob(coherent(0.4), 0.4) == pytest.approx(1.0, abs=1e-15)


def test_uhd_squeezed_against_fock_sum():
    g = 1 / math.sqrt(2)
    s = squeezed_vacuum_antisqueezed_real(0.34)
    ref = abs(np.vdot(brute_force_state(g, 0.0, 0.0, 60), brute_force_state(0.0, 0.34, math.pi, 60))) ** 2
    assert uhd_click_prob(s, g, "gaussian") == pytest.approx(ref, abs=1e-10)
    assert uhd_click_prob(s, g, "fock", m_max=60) == pytest.approx(ref, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.floats(-1, 1), st.floats(0, 0.6), st.floats(0, 2 * math.pi), st.floats(0.1, 1.0),
       st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_uhd_routes_agree(a, r, phase, eta, gx, gy):
    s = squeezed_coherent(a, r, phase, eta)
    g = complex(gx, gy)
    pg = uhd_click_prob(s, g, "gaussian")
    assert 0 < pg <= 1
    assert pg == pytest.approx(uhd_click_prob(s, g, "fock", m_max=80), abs=1e-10)


def test_uhd_fock_state():
    # <g|1><1|g> = |g|^2 e^{-|g|^2}
    g = 0.7
    assert uhd_click_prob(fock(1), g) == pytest.approx(g * g * math.exp(-g * g), abs=1e-14)


def test_phase_squeezed_is_antisqueezed_along_displacement():
    _, cov = gaussian_moments(phase_squeezed(1.0, 0.5))
    assert cov[0, 0] == pytest.approx(0.5 * math.exp(1.0))
    assert cov[1, 1] == pytest.approx(0.5 * math.exp(-1.0))
    # super-Poissonian counts
    p = photon_number_dist(phase_squeezed(1.0, 0.5)).probs
    m = np.arange(len(p))
    mean = p @ m
    assert p @ m**2 - mean**2 > mean
