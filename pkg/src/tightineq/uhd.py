"""Unbalanced homodyne detection with two local-oscillator settings.

An on-off detector behind a displacement by ``-gamma`` has the no-click
Q symbol ``exp(-|alpha - gamma|^2)``. With two settings the classical
region is bounded by the curve ``(exp(-(t+d)^2), exp(-(t-d)^2))``,
``t`` real, in the frame where ``gamma_2 - gamma_1 = 2d > 0``.

Detection efficiency ``eta`` acts after the displacement, so a coherent
input ``alpha`` gives ``exp(-eta |alpha - gamma|^2)``: the statistics are
those of an ideal detector with settings ``sqrt(eta) gamma`` on the lossy
state. Mode mismatch ``xi`` multiplies each no-click probability by
``g(gamma) = exp(-eta |gamma|^2 (1 - xi) / xi)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .geometry import HullVerdict, curve_hull_membership, golden_section_max
from .states import StateSpec, uhd_click_prob

D_MAX = 1.0 / math.sqrt(2.0)
T_PAD = 6.0
T_GRID = 8001

CLASSICAL = "classical"
NONCLASSICAL = "nonclassical"
# names of the three triangle inequalities
SUM = "sum"  # a + b >= 2d
SECOND_SIDE = "second"  # a + 2d >= b
FIRST_SIDE = "first"  # b + 2d >= a
TRIANGLE_NAMES = (SUM, SECOND_SIDE, FIRST_SIDE)
TRIANGLE_TOL = 1e-10


class ConvexityWarning(UserWarning):
    """``d > 1/sqrt(2)``: the boundary is not convex everywhere."""


@dataclass(frozen=True)
class UhdConfig:
    gamma1: complex
    gamma2: complex
    eta: float = 1.0
    xi: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        if not 0.0 < self.xi <= 1.0:
            raise ValueError(f"mode-mismatch xi must lie in (0, 1], got {self.xi}")
        if self.d <= 0:
            raise ValueError("the two settings must differ")

    @classmethod
    def symmetric(cls, d: float, eta: float = 1.0, xi: float = 1.0) -> "UhdConfig":
        """Settings ``-d`` and ``+d`` on the real axis."""
        return cls(-d, d, eta, xi)

    @property
    def d(self) -> float:
        return abs(complex(self.gamma2) - complex(self.gamma1)) / 2.0

    @property
    def d_eff(self) -> float:
        """Half-distance of the effective settings ``sqrt(eta) gamma_i``."""
        return math.sqrt(self.eta) * self.d

    def with_eta(self, eta: float) -> "UhdConfig":
        return UhdConfig(self.gamma1, self.gamma2, eta, self.xi)


def uhd_q_symbol(alpha, gamma):
    """No-click probability ``exp(-|alpha - gamma|^2)`` for a coherent input."""
    return np.exp(-np.abs(np.asarray(alpha, dtype=complex) - np.asarray(gamma, dtype=complex)) ** 2)


def boundary_curve(t, d: float) -> np.ndarray:
    """Boundary point(s) ``(exp(-(t+d)^2), exp(-(t-d)^2))``; ``t = +-inf`` gives (0, 0)."""
    t = np.asarray(t, dtype=float)
    return np.stack([np.exp(-(t + d) ** 2), np.exp(-(t - d) ** 2)], axis=-1)


def lambda_uhd(t, d: float) -> np.ndarray:
    """Outward normal ``((d - t) e^{-(t-d)^2}, (t + d) e^{-(t+d)^2})``.

    Half of ``(dPi_2/dt, -dPi_1/dt)``; the orientation puts the boundary
    point at ``t`` at the maximum of ``Pi . lam`` when ``d <= 1/sqrt(2)``.
    """
    t = np.asarray(t, dtype=float)
    return np.stack([(d - t) * np.exp(-(t - d) ** 2), (t + d) * np.exp(-(t + d) ** 2)], axis=-1)


def uhd_rhs(t, d: float):
    """``Pi(t) . lambda_uhd(t) = 2 d exp(-2 (t^2 + d^2))``."""
    t = np.asarray(t, dtype=float)
    return 2.0 * d * np.exp(-2.0 * (t * t + d * d))


def _check_d(d):
    if d <= 0:
        raise ValueError("d must be positive")
    if d > D_MAX:
        warnings.warn(f"d = {d:.4g} > 1/sqrt(2): the tangent family is not guaranteed tight; "
                      "use the hull oracle", ConvexityWarning, stacklevel=3)


def linear_tight_uhd(P, t, d: float, warn: bool = True):
    """Margin ``P . lambda_uhd(t) - 2 d exp(-2 (t^2 + d^2))``; positive is a violation."""
    if warn:
        _check_d(d)
    out = _tangent_margins(P, t, d)
    return out if np.ndim(t) else float(out)


def _tangent_margins(P, ts, d):
    return lambda_uhd(ts, d) @ np.asarray(P, dtype=float) - uhd_rhs(ts, d)


def _unit_family(ts, d):
    lam = lambda_uhd(ts, d)
    norm = np.linalg.norm(lam, axis=-1)
    return lam / norm[..., None], uhd_rhs(ts, d) / norm


def max_linear_margin(P, d: float, warn: bool = True, chunk: int = 2000):
    """Largest unit-norm tangent-family margin over ``t`` and its location ``t_star``.

    Normals are scaled to unit length, so the margin is a signed distance to
    the tangent line and classical points stay clearly negative instead of
    creeping up to 0 in the tails. ``t`` runs over ``[-(d + 6), d + 6]`` on a dense grid, then a batched
    golden-section refinement inside the best cell. ``P`` may be one point
    or a stack of rows; rows are processed ``chunk`` at a time.
    """
    if warn:
        _check_d(d)
    P = np.asarray(P, dtype=float)
    rows = np.atleast_2d(P)
    T = d + T_PAD
    ts = np.linspace(-T, T, T_GRID)
    lam, rhs = _unit_family(ts, d)
    best = np.empty(len(rows))
    t_best = np.empty(len(rows))
    for s in range(0, len(rows), chunk):
        R = rows[s:s + chunk]
        vals = R @ lam.T - rhs
        i = np.argmax(vals, axis=1)
        lo, hi = ts[np.maximum(i - 1, 0)], ts[np.minimum(i + 1, len(ts) - 1)]

        def f(t, R=R):
            u, r = _unit_family(t, d)
            return np.einsum("ij,ij->i", R, u) - r

        tm, fm = golden_section_max(f, lo, hi)
        grid_best = vals[np.arange(len(R)), i]
        better = fm > grid_best
        best[s:s + chunk] = np.where(better, fm, grid_best)
        t_best[s:s + chunk] = np.where(better, tm, ts[i])
    if P.ndim == 1:
        return float(best[0]), float(t_best[0])
    return best, t_best


@dataclass
class TriangleVerdict:
    verdict: str
    scores: dict  # amount by which each inequality is violated (> 0) or satisfied (< 0)
    violated: tuple
    saturated: tuple

    @property
    def nonclassical(self) -> bool:
        return self.verdict == NONCLASSICAL

    @property
    def margin(self) -> float:
        return max(self.scores.values())


def triangle_sides(P, d: float):
    """Sides ``(sqrt(-ln P_1), sqrt(-ln P_2), 2d)``; ``P = 1`` is a zero-length side."""
    P = np.asarray(P, dtype=float)
    if np.any(P <= 0) or np.any(P > 1):
        raise ValueError("no-click probabilities must lie in (0, 1]")
    a, b = np.sqrt(-np.log(P))
    return float(a), float(b), 2.0 * d


def triangle_test(P, d: float, tol: float = TRIANGLE_TOL) -> TriangleVerdict:
    """Classical iff the three sides can close a (possibly flat) triangle."""
    a, b, c = triangle_sides(P, d)
    scores = {SUM: c - a - b, SECOND_SIDE: b - a - c, FIRST_SIDE: a - b - c}
    violated = tuple(k for k in TRIANGLE_NAMES if scores[k] > tol)
    saturated = tuple(k for k in TRIANGLE_NAMES if abs(scores[k]) <= tol)
    verdict = NONCLASSICAL if violated else CLASSICAL
    return TriangleVerdict(verdict, scores, violated, saturated)


def hull_oracle(P, d: float, tol: float = 1e-9) -> HullVerdict:
    """LP membership of ``P`` in the hull of the boundary curve and its limit point."""
    T = d + T_PAD
    return curve_hull_membership(P, lambda t: boundary_curve(t, d), -T, T, n_init=201,
                                 tol=tol, extra_points=[[0.0, 0.0]], n_grid=T_GRID)


def curvature_sign(t, d: float):
    """``t^2 - d^2 + 1/2``, which shares its sign with the boundary curvature.

    Written as ``t^2 + (D - d)(D + d)`` with ``D = 1/sqrt(2)`` so that it
    vanishes exactly at ``t = 0, d = D``.
    """
    t = np.asarray(t, dtype=float)
    return t * t + (D_MAX - d) * (D_MAX + d)


def curvature_numerator(t, d: float):
    """``dPi_1 d2Pi_2 - dPi_2 d2Pi_1 = 16 d Pi_1 Pi_2 (t^2 - d^2 + 1/2)``."""
    P1, P2 = np.moveaxis(boundary_curve(t, d), -1, 0)
    return 16.0 * d * P1 * P2 * curvature_sign(t, d)


def _angle_rate(t, d):
    # numerator / |dPi/dt|^2 with the common factor Pi_1 Pi_2 cancelled
    e = min(max(4.0 * t * d, -700.0), 700.0)
    den = (t + d) ** 2 * math.exp(-e) + (t - d) ** 2 * math.exp(e)
    return 4.0 * d * float(curvature_sign(t, d)) / den


def tangential_angle(t, d: float) -> float:
    """Polar angle of ``dPi/dt``, integrated from ``theta(-inf) = 0``."""
    if t == -math.inf:
        return 0.0
    pieces = [-math.inf] + [x for x in (-d, 0.0, d) if x < t] + [t]
    total = 0.0
    for lo, hi in zip(pieces, pieces[1:]):
        val, _ = quad(_angle_rate, lo, hi, args=(d,), epsabs=1e-13, epsrel=1e-13, limit=200)
        total += val
    return total


def tangential_angle_direct(t, d: float) -> float:
    """Same angle from ``atan2`` of the tangent, unwrapped along a grid from far left."""
    T = max(abs(t), d) + T_PAD
    ts = np.linspace(-T, t, 20001)
    # dPi/dt divided by 2 Pi_2 > 0, which keeps the direction and avoids underflow
    vx = -(ts + d) * np.exp(-4.0 * ts * d)
    vy = -(ts - d)
    return float(np.unwrap(np.arctan2(vy, vx))[-1])


def mismatch_factor(gamma, eta: float, xi: float):
    """``g = exp(-eta |gamma|^2 (1 - xi) / xi)``."""
    if not 0.0 < xi <= 1.0:
        raise ValueError(f"mode-mismatch xi must lie in (0, 1], got {xi}")
    return np.exp(-eta * np.abs(np.asarray(gamma, dtype=complex)) ** 2 * (1.0 - xi) / xi)


def mode_mismatch_rescale(lam, config: UhdConfig) -> np.ndarray:
    """``(lam_1 / g(gamma_1), lam_2 / g(gamma_2))`` for mismatched statistics."""
    g = mismatch_factor([config.gamma1, config.gamma2], config.eta, config.xi)
    return np.asarray(lam, dtype=float) / g


def mismatched_q_symbol(beta, gamma, eta: float, xi: float):
    """No-click Q symbol in terms of ``beta = sqrt(eta) alpha``."""
    return uhd_q_symbol(beta, math.sqrt(eta) * np.asarray(gamma, dtype=complex)) * mismatch_factor(gamma, eta, xi)


def uhd_point(state: StateSpec, config: UhdConfig) -> np.ndarray:
    """No-click probabilities ``(P(0|gamma_1), P(0|gamma_2))`` for ``state``.

    The detector sees the lossy state displaced by ``-sqrt(eta) gamma_i``;
    mode mismatch then scales each probability by ``g(gamma_i)``.
    """
    lossy = state.with_eta(state.eta * config.eta)
    s = math.sqrt(config.eta)
    g = mismatch_factor([config.gamma1, config.gamma2], config.eta, config.xi)
    return np.array([uhd_click_prob(lossy, s * config.gamma1),
                     uhd_click_prob(lossy, s * config.gamma2)]) * g


@dataclass
class UhdReport:
    eta: float
    P: np.ndarray
    d_eff: float
    triangle: TriangleVerdict
    linear_margin: float
    t_star: float

    @property
    def nonclassical(self) -> bool:
        return self.triangle.nonclassical


def uhd_analyze(state: StateSpec, config: UhdConfig) -> UhdReport:
    """Statistics and verdicts for ``state`` measured with ``config``.

    Mismatch factors are divided out before the comparison with the
    ideal classical region at half-distance ``d_eff``.
    """
    P = uhd_point(state, config)
    g = mismatch_factor([config.gamma1, config.gamma2], config.eta, config.xi)
    Pid = np.minimum(P / g, 1.0)
    d = config.d_eff
    tri = triangle_test(Pid, d)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvexityWarning)
        margin, t_star = max_linear_margin(Pid, d)
    return UhdReport(config.eta, P, d, tri, margin, t_star)


def crossover_eta(state: StateSpec, config: UhdConfig, tol: float = 1e-4,
                  lo: float = 1e-3, hi: float = 1.0) -> Optional[float]:
    """Efficiency where the triangle verdict flips, by bisection on ``eta``.

    Returns ``None`` when both ends give the same verdict.
    """

    def score(eta):
        # shifted by the verdict tolerance so boundary states never flip on rounding
        return uhd_analyze(state, config.with_eta(eta)).triangle.margin - TRIANGLE_TOL

    f_lo, f_hi = score(lo), score(hi)
    if (f_lo > 0) == (f_hi > 0):
        return None
    return float(brentq(score, lo, hi, xtol=tol / 4))
