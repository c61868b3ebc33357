"""Q symbols of photocounting POVMs on the curve parameter ``t = exp(-|alpha|^2 / N)``.

Two detector families are supported:

* ``pnr``   photon-number resolving detector truncated at ``N`` (outcome ``N``
  pools every event with ``N`` or more photons);
* ``click`` an array of ``N`` on-off detectors behind a balanced ``N``-port
  splitter; the outcome is the number of detectors that fired.

Both have unit efficiency and no dark counts. Losses belong to the state.
Only components ``n = 0 .. N-1`` enter the probability vector; the last
outcome is fixed by normalization.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial

import numpy as np
from numpy.polynomial import Polynomial

PNR = "pnr"
CLICK = "click"
KINDS = (PNR, CLICK)


class DomainError(ValueError):
    """Argument outside the domain of a Q symbol or POVM element."""


@dataclass(frozen=True)
class DetectorModel:
    kind: str
    N: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown detector kind {self.kind!r}; expected one of {KINDS}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")

    @classmethod
    def parse(cls, text: str) -> "DetectorModel":
        """Parse ``"pnr:5"`` or ``"click:3"``."""
        kind, _, n = text.partition(":")
        if not n:
            raise ValueError(f"detector must look like 'pnr:N' or 'click:N', got {text!r}")
        return cls(kind.strip().lower(), int(n))

    @property
    def outcomes(self) -> int:
        return self.N + 1

    @property
    def label(self) -> str:
        return f"{self.kind}:{self.N}"

    def t_of_intensity(self, intensity):
        """Curve parameter for ``|alpha|^2``."""
        return np.exp(-np.asarray(intensity, dtype=float) / self.N)

    def q_symbols(self, t) -> np.ndarray:
        """All ``N + 1`` outcome probabilities; last axis indexes the outcome."""
        t = _check_t(t)
        head = self.q_vector(t)
        last = 1.0 - head.sum(axis=-1, keepdims=True)
        if self.kind == CLICK:
            # direct evaluation avoids cancellation in 1 - sum near t = 0
            last = ((1.0 - t) ** self.N)[..., None]
        return np.concatenate([head, last], axis=-1)

    def q_vector(self, t) -> np.ndarray:
        return self.q_vector_deriv(t, 0)

    def q_vector_deriv(self, t, order: int = 1, check: bool = True) -> np.ndarray:
        """Closed-form ``d^order Pi(n|t) / dt^order`` for ``n = 0 .. N-1``.

        One-sided at the endpoints. For PNR with ``N <= order`` the derivative
        diverges at ``t = 0`` and is reported as ``nan`` there. ``check=False``
        skips argument validation in hot loops.
        """
        if order not in (0, 1, 2):
            raise ValueError(f"derivative order must be 0, 1 or 2, got {order!r}")
        t = _check_t(t) if check else np.asarray(t, dtype=float)
        if self.kind == CLICK:
            polys = _click_polys(self.N, order)
            return np.stack([p(t) for p in polys], axis=-1)
        return _pnr_deriv(self.N, t, order)


def q_symbol(detector: DetectorModel, n: int, t) -> np.ndarray:
    """Probability of outcome ``n`` for the coherent state at curve parameter ``t``."""
    if not 0 <= n <= detector.N:
        raise DomainError(f"outcome {n} outside 0..{detector.N}")
    return detector.q_symbols(t)[..., n]


def _check_t(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(t)) or np.any(t < 0.0) or np.any(t > 1.0):
        raise DomainError("curve parameter t must lie in [0, 1]")
    return t


@lru_cache(maxsize=None)
def _click_polys(N: int, order: int) -> tuple:
    polys = []
    one_minus = Polynomial([1.0, -1.0])
    t = Polynomial([0.0, 1.0])
    for n in range(N):
        p = comb(N, n) * t ** (N - n) * one_minus**n
        polys.append(p.deriv(order) if order else p)
    return tuple(polys)


def _poisson_terms(u: np.ndarray, kmax: int) -> np.ndarray:
    """``u^k / k!`` for ``k = -2 .. kmax`` (zero for negative k); last axis is k."""
    out = np.zeros(u.shape + (kmax + 3,))
    term = np.ones_like(u)
    for k in range(kmax + 1):
        if k:
            term = term * u / k
        out[..., k + 2] = term
    return out


def _pnr_deriv(N: int, t: np.ndarray, order: int) -> np.ndarray:
    zero = t == 0.0
    ts = np.where(zero, 0.5, t)
    u = -N * np.log(ts)
    f = _poisson_terms(u, N)
    n = np.arange(N)
    fk = lambda shift: f[..., n + 2 - shift]  # noqa: E731
    tn = ts[..., None]
    if order == 0:
        val = tn**N * fk(0)
    elif order == 1:
        h = fk(1) - fk(0)
        val = -N * tn ** (N - 1) * h
    else:
        h = fk(1) - fk(0)
        dh = fk(2) - fk(1)
        val = -N * tn ** (N - 2) * ((N - 1) * h - N * dh)
    if np.any(zero):
        limit = 0.0 if N > order else np.nan
        val = np.where(zero[..., None], limit, val)
    return val


def povm_fock_diagonal(detector: DetectorModel, n: int, m_max: int) -> np.ndarray:
    """Fock-basis diagonal ``<m|Pi(n)|m>`` for ``m = 0 .. m_max``."""
    if not 0 <= n <= detector.N:
        raise DomainError(f"outcome {n} outside 0..{detector.N}")
    return fock_diagonal_table(detector, m_max)[n]


def fock_diagonal_table(detector: DetectorModel, m_max: int) -> np.ndarray:
    """Matrix ``E[n, m] = <m|Pi(n)|m>`` of shape ``(N + 1, m_max + 1)``."""
    if m_max < detector.N:
        raise DomainError(f"m_max={m_max} must be at least N={detector.N}")
    return _fock_table(detector.kind, detector.N, int(m_max)).copy()


@lru_cache(maxsize=64)
def _fock_table(kind: str, N: int, m_max: int) -> np.ndarray:
    E = np.zeros((N + 1, m_max + 1))
    if kind == PNR:
        E[np.arange(N), np.arange(N)] = 1.0
        E[N, N:] = 1.0
        return E
    # occupancy chain: photon m+1 lands in one of k fired detectors or a fresh one
    k = np.arange(N + 1)
    E[0, 0] = 1.0
    for m in range(m_max):
        prev = E[:, m]
        E[:, m + 1] = prev * k / N
        E[1:, m + 1] += prev[:-1] * (N - k[:-1]) / N
    return E


def click_fock_closed_form(N: int, n: int, m) -> np.ndarray:
    """Inclusion-exclusion form ``C(N,n) sum_k C(n,k) (-1)^k ((n-k)/N)^m``."""
    m = np.asarray(m)
    total = np.zeros(m.shape)
    for k in range(n + 1):
        total = total + comb(n, k) * (-1) ** k * (((n - k) / N) ** m)
    return comb(N, n) * total


def pnr_q_symbol_intensity(n: int, u) -> np.ndarray:
    """``u^n e^{-u} / n!`` directly in the intensity ``u = |alpha|^2``."""
    u = np.asarray(u, dtype=float)
    return u**n * np.exp(-u) / factorial(n)
