"""Single-mode states under loss: photon-number statistics, photocounts and
coherent-state overlaps.

Quadrature convention: ``x = (a + a^dag)/sqrt(2)``, vacuum variance 1/2.
Squeezing ``S(zeta)``, ``zeta = r e^{i phase}``, squeezes the quadrature at
angle ``phase / 2``; ``phase = pi`` squeezes ``p`` and antisqueezes ``x``,
which for real displacement is the phase-squeezed coherent state.

Loss with efficiency ``eta`` is a beam splitter: Fock populations go
through a binomial convolution, Gaussian moments map as
``V -> eta V + (1 - eta) I / 2`` and ``mean -> sqrt(eta) mean``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom, poisson

from .detectors import DetectorModel, fock_diagonal_table

TAIL_TOL = 1e-12
M_CAP = 400

FOCK = "fock"
COHERENT = "coherent"
SQUEEZED = "squeezed"


class TruncationError(ValueError):
    """Photon-number truncation leaves too much probability in the tail."""


@dataclass(frozen=True)
class StateSpec:
    kind: str
    eta: float = 1.0
    n: int = 0
    alpha: complex = 0.0
    r: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in (FOCK, COHERENT, SQUEEZED):
            raise ValueError(f"unknown state kind {self.kind!r}")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"efficiency must lie in (0, 1], got {self.eta}")
        if self.r < 0:
            raise ValueError("squeezing r must be non-negative")
        if self.n < 0 or int(self.n) != self.n:
            raise ValueError("Fock number must be a non-negative integer")

    @property
    def is_gaussian(self) -> bool:
        return self.kind != FOCK or self.n == 0

    def with_eta(self, eta: float) -> "StateSpec":
        return StateSpec(self.kind, eta, self.n, self.alpha, self.r, self.phase)

    def with_alpha(self, alpha: complex) -> "StateSpec":
        return StateSpec(self.kind, self.eta, self.n, alpha, self.r, self.phase)


def fock(n: int, eta: float = 1.0) -> StateSpec:
    return StateSpec(FOCK, eta, n=n)


def vacuum() -> StateSpec:
    return StateSpec(FOCK, 1.0, n=0)


def coherent(alpha: complex, eta: float = 1.0) -> StateSpec:
    return StateSpec(COHERENT, eta, alpha=alpha)


def squeezed_coherent(alpha: complex, r: float, phase: float = 0.0, eta: float = 1.0) -> StateSpec:
    return StateSpec(SQUEEZED, eta, alpha=alpha, r=r, phase=phase)


def phase_squeezed(alpha0: float, r: float, eta: float = 1.0) -> StateSpec:
    """``D(alpha0) S(r)|0>`` with real ``alpha0`` and the phase quadrature squeezed."""
    return squeezed_coherent(alpha0, r, math.pi, eta)


def squeezed_vacuum_antisqueezed_real(r: float, eta: float = 1.0) -> StateSpec:
    """Squeezed vacuum whose antisqueezed quadrature lies along the real axis."""
    return squeezed_coherent(0.0, r, math.pi, eta)


@dataclass(frozen=True)
class PhotonNumberDist:
    probs: np.ndarray
    tail_mass: float

    @property
    def m_max(self) -> int:
        return len(self.probs) - 1


# --- Fock-space amplitudes --------------------------------------------------


def squeezed_coherent_amplitudes(alpha: complex, r: float, phase: float, m_max: int) -> np.ndarray:
    """``<m|D(alpha) S(r e^{i phase})|0>`` for ``m = 0 .. m_max``.

    From the annihilator identity
    ``[(a - alpha) cosh r + (a^dag - alpha*) e^{i phase} sinh r] |psi> = 0``
    one gets the three-term recurrence
    ``sqrt(m+1) c_{m+1} = (alpha + alpha* nu) c_m - nu sqrt(m) c_{m-1}``
    with ``nu = e^{i phase} tanh r``.
    """
    alpha = complex(alpha)
    nu = np.exp(1j * phase) * np.tanh(r)
    c = np.zeros(m_max + 1, dtype=complex)
    c[0] = np.exp(-0.5 * abs(alpha) ** 2 - 0.5 * np.conj(alpha) ** 2 * nu) / np.sqrt(np.cosh(r))
    beta = alpha + np.conj(alpha) * nu
    if m_max >= 1:
        c[1] = beta * c[0]
    for m in range(1, m_max):
        c[m + 1] = (beta * c[m] - nu * np.sqrt(m) * c[m - 1]) / np.sqrt(m + 1)
    return c


def binomial_loss(p: np.ndarray, eta: float) -> np.ndarray:
    """Photon-number distribution after a beam splitter of transmissivity ``eta``."""
    p = np.asarray(p, dtype=float)
    if eta == 1.0:
        return p.copy()
    m = np.arange(len(p))
    k = m[:, None]
    # B[k, m] = C(m, k) eta^k (1 - eta)^(m - k)
    B = binom.pmf(k, m[None, :], eta)
    return B @ p


def binomial_loss_rows(p: np.ndarray, eta: float, k_max: int) -> np.ndarray:
    """First ``k_max + 1`` entries of :func:`binomial_loss`."""
    p = np.asarray(p, dtype=float)
    m = np.arange(len(p))
    k = np.arange(k_max + 1)[:, None]
    return binom.pmf(k, m[None, :], eta) @ p


def _lossless_probs(state: StateSpec, m_max: int) -> np.ndarray:
    m = np.arange(m_max + 1)
    if state.kind == FOCK:
        p = np.zeros(m_max + 1)
        if state.n <= m_max:
            p[state.n] = 1.0
        return p
    if state.kind == COHERENT:
        return poisson.pmf(m, abs(complex(state.alpha)) ** 2)
    c = squeezed_coherent_amplitudes(state.alpha, state.r, state.phase, m_max)
    return np.abs(c) ** 2


def _dist(state: StateSpec, m_max: int) -> PhotonNumberDist:
    if state.kind == FOCK:
        p = np.zeros(m_max + 1)
        k = np.arange(min(state.n, m_max) + 1)
        p[k] = binom.pmf(k, state.n, state.eta)
    elif state.kind == COHERENT:
        p = poisson.pmf(np.arange(m_max + 1), state.eta * abs(complex(state.alpha)) ** 2)
    else:
        # lossless photons beyond m_max still feed the retained range through the loss
        lossless = _lossless_probs(state, 4 * M_CAP)
        upper = np.cumsum(lossless[::-1])[::-1]
        inner = max(m_max, int(np.argmax(upper < 1e-17)))
        p = binomial_loss_rows(lossless[: inner + 1], state.eta, m_max)
    tail = max(0.0, 1.0 - math.fsum(p))
    return PhotonNumberDist(p, tail)


def photon_number_dist(state: StateSpec, m_max: int | None = None) -> PhotonNumberDist:
    """Photon-number distribution of ``state`` after its loss.

    With ``m_max=None`` the smallest truncation whose tail is below
    ``1e-12`` is chosen (capped at 400). An explicit ``m_max`` that leaves
    more tail than that raises :class:`TruncationError`.
    """
    if m_max is not None:
        if m_max < 0:
            raise ValueError("m_max must be non-negative")
        d = _dist(state, int(m_max))
        if d.tail_mass > TAIL_TOL:
            raise TruncationError(
                f"tail mass {d.tail_mass:.3g} above {TAIL_TOL:g} at m_max={m_max}; increase m_max")
        return d
    d = _dist(state, M_CAP)
    if d.tail_mass > TAIL_TOL:
        raise TruncationError(f"tail mass {d.tail_mass:.3g} at the cap m_max={M_CAP}")
    csum = np.cumsum(d.probs[::-1])[::-1]  # csum[m] = sum_{k >= m} p_k
    tails = np.append(csum[1:], 0.0) + d.tail_mass
    m = int(np.argmax(tails <= TAIL_TOL))
    return _dist(state, max(m, 0))


def photocount_dist(state: StateSpec, detector: DetectorModel, m_max: int | None = None) -> np.ndarray:
    """Born-rule photocount distribution ``P(0..N)`` of ``state``."""
    d = photon_number_dist(state, m_max)
    p = d.probs
    if len(p) <= detector.N:
        p = np.pad(p, (0, detector.N + 1 - len(p)))
    E = fock_diagonal_table(detector, len(p) - 1)
    P = E @ p
    # tail photons all land in the saturating PNR outcome; for clicks the
    # (<= 1e-12) tail is dropped
    if detector.kind == "pnr":
        P[-1] += d.tail_mass
    return P


# --- Gaussian description ---------------------------------------------------


def gaussian_moments(state: StateSpec, lossless: bool = False):
    """Mean ``(x, p)`` and covariance of a Gaussian ``state`` after loss."""
    if not state.is_gaussian:
        raise ValueError("Fock states with n >= 1 are not Gaussian")
    alpha = complex(state.alpha) if state.kind != FOCK else 0j
    r = state.r if state.kind == SQUEEZED else 0.0
    half = 0.5 * state.phase if state.kind == SQUEEZED else 0.0
    u = np.array([np.cos(half), np.sin(half)])
    w = np.array([-np.sin(half), np.cos(half)])
    V = 0.5 * (np.exp(-2 * r) * np.outer(u, u) + np.exp(2 * r) * np.outer(w, w))
    mean = np.sqrt(2.0) * np.array([alpha.real, alpha.imag])
    if lossless:
        return mean, V
    eta = state.eta
    return np.sqrt(eta) * mean, eta * V + 0.5 * (1 - eta) * np.eye(2)


def gaussian_photon_number_dist(mean, cov, m_max: int, n_fft: int = 4097) -> np.ndarray:
    """Photon-number distribution of a Gaussian state from its moments.

    Uses the generating function ``G(z) = Tr[rho z^n]``, a Gaussian integral
    of the Wigner function against the Weyl symbol
    ``2/(1+z) exp(-(1-z)/(1+z) (x^2 + p^2))``, sampled on the unit circle
    at an odd number of points and inverted by FFT.
    """
    mean = np.asarray(mean, dtype=float)
    v, U = np.linalg.eigh(np.asarray(cov, dtype=float))
    mu = U.T @ mean
    if n_fft % 2 == 0:
        n_fft += 1
    z = np.exp(2j * np.pi * np.arange(n_fft) / n_fft)
    k = (1 - z) / (1 + z)
    G = 2.0 / (1 + z)
    for vi, mi in zip(v, mu):
        s = 1 + 2 * k * vi
        G = G / np.sqrt(s) * np.exp(-k * mi**2 / s)
    coeff = np.fft.fft(G) / n_fft
    return coeff.real[: m_max + 1]


def husimi_overlap(mean, cov, gamma: complex) -> float:
    """``<gamma|rho|gamma>`` for a Gaussian ``rho`` with the given moments."""
    mean = np.asarray(mean, dtype=float)
    A = np.asarray(cov, dtype=float) + 0.5 * np.eye(2)
    g = np.sqrt(2.0) * np.array([complex(gamma).real, complex(gamma).imag])
    d = mean - g
    return float(np.exp(-0.5 * d @ np.linalg.solve(A, d)) / np.sqrt(np.linalg.det(A)))


def _coherent_bra(gamma: complex, m_max: int) -> np.ndarray:
    """``<gamma|m>`` for ``m = 0 .. m_max``."""
    gc = np.conj(complex(gamma))
    out = np.empty(m_max + 1, dtype=complex)
    out[0] = np.exp(-0.5 * abs(gamma) ** 2)
    for m in range(1, m_max + 1):
        out[m] = out[m - 1] * gc / np.sqrt(m)
    return out


def _fock_overlap(state: StateSpec, gamma: complex, m_max: int) -> float:
    bra = _coherent_bra(gamma, m_max)
    if state.kind == FOCK:
        p = photon_number_dist(state, max(m_max, state.n)).probs[: m_max + 1]
        return float(np.sum(p * np.abs(bra[: len(p)]) ** 2))
    if state.kind == COHERENT:
        c = squeezed_coherent_amplitudes(state.alpha, 0.0, 0.0, m_max)
    else:
        c = squeezed_coherent_amplitudes(state.alpha, state.r, state.phase, m_max)
    eta = state.eta
    if eta == 1.0:
        return float(abs(bra @ c) ** 2)
    # loss Kraus operators A_k = sum_m sqrt(C(m,k) eta^(m-k) (1-eta)^k) |m-k><m|
    total = 0.0
    m = np.arange(m_max + 1)
    for k in range(m_max + 1):
        mm = m[k:]
        w = np.sqrt(binom.pmf(k, mm, 1 - eta))
        total += abs(np.sum(c[k:] * w * bra[: len(mm)])) ** 2
    return float(total)


def uhd_click_prob(state: StateSpec, gamma: complex, method: str = "auto", m_max: int = 120) -> float:
    """No-click probability ``<gamma|rho|gamma>`` behind a displacement by ``-gamma``.

    ``method="gaussian"`` uses the Husimi formula on the lossy moments,
    ``method="fock"`` sums in the Fock basis (loss via Kraus operators).
    ``"auto"`` picks the Gaussian route whenever the state is Gaussian.
    """
    if method == "auto":
        method = "gaussian" if state.is_gaussian else "fock"
    if method == "gaussian":
        mean, cov = gaussian_moments(state)
        return husimi_overlap(mean, cov, gamma)
    if method == "fock":
        return _fock_overlap(state, gamma, m_max)
    raise ValueError(f"unknown method {method!r}")
