"""Tight nonclassicality inequalities for photocounting statistics.

A photocount distribution ``P`` is passed as the full vector of ``N + 1``
outcome probabilities; only ``P[:N]`` enters the linear forms. Every
margin follows one convention: positive means the inequality is violated,
i.e. the statistics are nonclassical.

For odd ``N = 2m + 1`` the tight test function with nodes
``t_1 < ... < t_m`` and endpoint ``tau`` is the common normal of
``Pi(t_i) - Pi(tau)`` and ``dPi/dt(t_i)``, oriented so that
``Pi(t) . lam`` attains its global maximum at the nodes and at ``tau``.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar

from .detectors import CLICK, DetectorModel
from .geometry import generalized_cross, golden_section_max

SIGN_GRID = 4001
LAMBDA_DOWN = np.array([0.0, -1.0])


class DegeneracyError(ValueError):
    """Constraint vectors are (numerically) linearly dependent."""


class DegenerateInputWarning(UserWarning):
    """A nonlinear form was evaluated through its continuous limit."""


@dataclass
class TestFunction:
    __test__ = False  # not a pytest class

    lam: np.ndarray
    nodes: tuple
    tau: Optional[float]
    detector: DetectorModel
    sign: int = 1

    @property
    def rhs(self) -> float:
        """``sup_t Pi(t) . lam``, attained at ``tau`` and at every node."""
        t0 = self.nodes[0] if self.tau is None else self.tau
        return float(self.detector.q_vector(t0) @ self.lam)

    def margin(self, P) -> float:
        P = np.asarray(P, dtype=float)
        return float(P[: self.detector.N] @ self.lam - self.rhs)

    def normalized(self) -> "TestFunction":
        return TestFunction(self.lam / np.linalg.norm(self.lam), self.nodes, self.tau,
                            self.detector, self.sign)

    def residuals(self) -> np.ndarray:
        """Relative orthogonality residuals against every constraint vector."""
        rows = _constraint_rows(self.detector, np.asarray(self.nodes, dtype=float),
                                self.tau if self.tau is not None else None)
        norms = np.linalg.norm(rows, axis=1) * np.linalg.norm(self.lam)
        return np.abs(rows @ self.lam) / np.where(norms > 0, norms, 1.0)


def _constraint_rows(detector, nodes, tau):
    d = detector.q_vector_deriv(nodes, 1)
    if tau is None:
        return np.atleast_2d(d)
    diff = detector.q_vector(nodes) - detector.q_vector(tau)
    return np.vstack([np.atleast_2d(diff), np.atleast_2d(d)])


def _interleaved_rows(detector, nodes, tau):
    """Constraint rows in wedge order ``Delta_1, dot_1, Delta_2, dot_2, ...``."""
    V = np.empty((2 * len(nodes), detector.N))
    V[0::2] = detector.q_vector(nodes) - detector.q_vector(tau)
    V[1::2] = detector.q_vector_deriv(nodes, 1)
    return V


def _grid(n=SIGN_GRID):
    return np.linspace(0.0, 1.0, n)


# --- N = 2 --------------------------------------------------------------------


def lambda_n2(detector: DetectorModel, t: float) -> TestFunction:
    """Normal ``(-dPi1/dt, dPi0/dt)`` to the classical curve at ``t``."""
    if detector.N != 2:
        raise ValueError("lambda_n2 needs N = 2")
    d = detector.q_vector_deriv(t, 1)
    lam = np.array([-d[1], d[0]])
    return TestFunction(lam, (float(t),), None, detector)


def nonlinear_n2(P, detector: DetectorModel) -> float:
    """Combined N = 2 inequality, positive when violated.

    PNR: ``P(1) + P(0) ln P(0)``. Click: ``(P(0) + P(1)/2)^2 - P(0)``,
    i.e. ``[2P(0) + P(1)]^2 - 4P(0)`` divided by four.
    """
    if detector.N != 2:
        raise ValueError("nonlinear_n2 needs N = 2")
    P = np.asarray(P, dtype=float)
    p0, p1 = P[0], P[1]
    if detector.kind == CLICK:
        return float((p0 + 0.5 * p1) ** 2 - p0)
    if p0 <= 0.0:
        warnings.warn("P(0) = 0: using the limit P(0) ln P(0) -> 0", DegenerateInputWarning)
        return float(p1)
    return float(p1 + p0 * math.log(p0))


# --- odd N ----------------------------------------------------------------------


def _tight_directions(detector: DetectorModel, nodes, tau: float):
    """Unit normals (rows) for a batch of node tuples, orientation not yet fixed.

    Returns ``(q, scale, cond)``: the unit normal, the signed formal Hodge
    value along it, and the reciprocal condition of the row-normalized
    constraint matrix.
    """
    nodes = np.atleast_2d(np.asarray(nodes, dtype=float))
    K, m = nodes.shape
    N = detector.N
    diff = detector.q_vector(nodes) - detector.q_vector(tau)
    deriv = detector.q_vector_deriv(nodes, 1)
    # interleave rows as Delta_1, dot_1, Delta_2, dot_2, ...
    V = np.empty((K, 2 * m, N))
    V[:, 0::2] = diff
    V[:, 1::2] = deriv
    norms = np.linalg.norm(V, axis=2, keepdims=True)
    Vn = V / np.where(norms > 0, norms, 1.0)
    Q, _ = np.linalg.qr(np.swapaxes(Vn, 1, 2), mode="complete")
    q = Q[:, :, -1]
    M = np.concatenate([q[:, None, :], V], axis=1)
    scale = np.linalg.det(M)
    s = np.linalg.svd(Vn, compute_uv=False)
    cond = s[:, -1] / s[:, 0]
    return q, scale, cond


def _orient(detector, q, tau, grid_vals=None):
    """Flip unit normals so ``Pi(t) . lam`` peaks at ``tau``; return overshoots."""
    if grid_vals is None:
        grid_vals = detector.q_vector(_grid())
    at_tau = q @ detector.q_vector(tau)
    proj = grid_vals @ q.T  # (grid, K)
    over_plus = proj.max(axis=0) - at_tau
    over_minus = (-proj).max(axis=0) + at_tau
    sign = np.where(over_plus <= over_minus, 1.0, -1.0)
    return sign, np.minimum(over_plus, over_minus)


def lambda_odd(detector: DetectorModel, nodes, tau: float, check: bool = True) -> TestFunction:
    """Tight test function for ``N = 2m + 1`` with ``m`` nodes and endpoint ``tau``.

    ``lam`` is a positive multiple of the formal Hodge dual of the
    ``2m`` constraint vectors (each rescaled to unit length, which only
    rescales the result), times the orientation sign.
    """
    N = detector.N
    nodes = tuple(float(x) for x in np.atleast_1d(nodes))
    m = len(nodes)
    if N != 2 * m + 1:
        raise ValueError(f"N = {N} needs {(N - 1) // 2} nodes, got {m}" if N % 2 else
                         f"tight construction needs odd N, got {N}")
    if tau not in (0, 1, 0.0, 1.0):
        raise ValueError("tau must be 0 or 1")
    if any(not 0.0 <= x <= 1.0 for x in nodes):
        raise ValueError("nodes must lie in [0, 1]")
    if any(b <= a for a, b in zip(nodes, nodes[1:])):
        raise DegeneracyError("nodes must be strictly increasing")
    if any(x == tau for x in nodes):
        raise DegeneracyError("nodes must differ from tau")
    tau = float(tau)
    q, scale, cond = _tight_directions(detector, [nodes], tau)
    if cond[0] < 1e-13:
        raise DegeneracyError(f"constraint vectors are dependent (cond {cond[0]:.2e})")
    V = _interleaved_rows(detector, np.array(nodes), tau)
    lam_formal = generalized_cross(V / np.linalg.norm(V, axis=1, keepdims=True))
    sign, over = _orient(detector, q, tau)
    formal_sign = 1 if lam_formal @ (sign[0] * q[0]) >= 0 else -1
    lam = formal_sign * lam_formal
    # overshoot is measured for the unit normal q
    if check and over[0] > 1e-9:
        raise DegeneracyError("neither orientation puts the global maximum at the nodes")
    return TestFunction(lam, nodes, tau, detector, formal_sign)


def lambda_n3(detector: DetectorModel, t1: float, tau: float) -> TestFunction:
    """N = 3 special case: ``+/- (Pi(t1) - Pi(tau)) x dPi/dt(t1)``."""
    if detector.N != 3:
        raise ValueError("lambda_n3 needs N = 3")
    return lambda_odd(detector, [t1], tau)


def nonlinear_n3(P, detector: DetectorModel):
    """Combined N = 3 inequalities ``(margin_tau0, margin_tau1)``.

    PNR:   ``P1^2 - 2 P0 P2`` and ``P0 + P1^2/(2 P2) (e^{2 P2/P1} - 1) - 1``.
    Click: ``P1^2 - 3 P0 P2`` and ``3 P1^2 + P2^2 + 3 P1 (P0 + P2 - 1)``.
    """
    if detector.N != 3:
        raise ValueError("nonlinear_n3 needs N = 3")
    P = np.asarray(P, dtype=float)
    p0, p1, p2 = P[0], P[1], P[2]
    if detector.kind == CLICK:
        return float(p1 * p1 - 3 * p0 * p2), float(3 * p1 * p1 + p2 * p2 + 3 * p1 * (p0 + p2 - 1))
    m0 = p1 * p1 - 2 * p0 * p2
    if p1 <= 0.0:
        warnings.warn("P(1) = 0: evaluating the tau = 1 form by its limit", DegenerateInputWarning)
        m1 = math.inf if p2 > 0 else p0 - 1.0
    else:
        x = 2 * p2 / p1
        # P1^2/(2 P2) (e^x - 1) = P1 (e^x - 1)/x, removable at x = 0
        ratio = 1.0 + x / 2 + x * x / 6 if x < 1e-8 else (math.expm1(x) / x if x < 700 else math.inf)
        if p2 <= 0.0:
            warnings.warn("P(2) = 0: evaluating the tau = 1 form by its limit", DegenerateInputWarning)
        m1 = p0 + p1 * ratio - 1.0
    return float(m0), float(m1)


def _family_grid(n_grid, exclude):
    # uniform in t plus a geometric tail toward t = 0 (large intensities)
    n_geo = n_grid // 4
    ts = np.unique(np.concatenate([np.linspace(0.0, 1.0, n_grid - n_geo),
                                   np.geomspace(1e-12, 1e-3, n_geo)]))
    return ts[(ts != exclude) & (ts != 0.0)]


def _scan(PN, ts, family, refine, on_grid=None):
    """Max over ``t`` of ``PN . lam(t) - rhs(t)`` for every row of ``PN``.

    ``family(t, idx)`` returns unit normals and right-hand sides; ``idx``
    is the grid index whose orientation the refinement inherits.
    ``on_grid`` optionally supplies ``family`` already evaluated on ``ts``.
    """
    lam, rhs = family(ts, np.arange(len(ts))) if on_grid is None else on_grid
    keep = np.all(np.isfinite(lam), axis=1)
    vals = np.where(keep[None, :], PN @ np.where(keep[:, None], lam, 0.0).T - rhs[None, :], -np.inf)
    idx = np.argmax(vals, axis=1)
    best = vals[np.arange(len(PN)), idx]
    t_best = ts[idx]
    if refine:
        lo = ts[np.maximum(idx - 1, 0)]
        hi = ts[np.minimum(idx + 1, len(ts) - 1)]

        def f(t):
            L, R = family(t, idx)
            out = np.einsum("ij,ij->i", PN, L) - R
            return np.where(np.isfinite(out), out, -np.inf)

        tm, fm = golden_section_max(f, lo, hi)
        better = fm > best
        best = np.where(better, fm, best)
        t_best = np.where(better, tm, t_best)
    return best, t_best


def linear_family_n2(P, detector: DetectorModel, n_grid: int = SIGN_GRID, refine: bool = True):
    """Largest normalized margin over the tangent family ``lambda_n2(t)``.

    ``P`` may be one distribution or a stack of rows. Returns ``(margin, t)``.
    """
    if detector.N != 2:
        raise ValueError("linear family needs N = 2")
    P = np.asarray(P, dtype=float)
    PN = np.atleast_2d(P)[:, :2]
    ts = _family_grid(n_grid, 1.0)

    def family(t, _idx):
        d = detector.q_vector_deriv(t, 1)
        lam = np.stack([-d[..., 1], d[..., 0]], axis=-1)
        lam = lam / np.linalg.norm(lam, axis=-1, keepdims=True)
        return lam, np.einsum("ij,ij->i", lam, detector.q_vector(t))

    best, t_best = _scan(PN, ts, family, refine)
    if P.ndim == 1:
        return float(best[0]), float(t_best[0])
    return best, t_best


def _n3_raw(detector, tau, t):
    lam = np.cross(detector.q_vector(t) - detector.q_vector(tau), detector.q_vector_deriv(t, 1))
    with np.errstate(invalid="ignore", divide="ignore"):
        return lam / np.linalg.norm(lam, axis=-1, keepdims=True)


@lru_cache(maxsize=16)
def _n3_family_grid(detector, tau, n_grid):
    # grid normals and their orientation do not depend on P; share them
    ts = _family_grid(n_grid, tau)
    lam0 = _n3_raw(detector, tau, ts)
    ok = np.all(np.isfinite(lam0), axis=1)
    sign = np.ones(len(ts))
    sign[ok], _ = _orient(detector, lam0[ok], tau)
    lam = lam0 * sign[:, None]
    rhs = lam @ detector.q_vector(tau)
    for a in (ts, sign, lam, rhs):
        a.flags.writeable = False
    return ts, sign, (lam, rhs)


def linear_family_n3(P, detector: DetectorModel, tau: float, n_grid: int = SIGN_GRID,
                     refine: bool = True):
    """Largest normalized margin over the ``lambda_n3(t1, tau)`` family.

    ``P`` may be one distribution or a stack of rows. Vectorized grid over
    ``t1`` followed by a batched golden-section refinement around the best
    cell. Returns ``(margin, t1)``.
    """
    if detector.N != 3:
        raise ValueError("linear family needs N = 3")
    P = np.asarray(P, dtype=float)
    PN = np.atleast_2d(P)[:, :3]
    ts, sign, on_grid = _n3_family_grid(detector, float(tau), n_grid)
    pi_tau = detector.q_vector(tau)

    def family(t, idx):
        lam = _n3_raw(detector, tau, t) * sign[idx][:, None]
        return lam, lam @ pi_tau

    best, t_best = _scan(PN, ts, family, refine, on_grid)
    if P.ndim == 1:
        return float(best[0]), float(t_best[0])
    return best, t_best


# --- Statement-2 structure ----------------------------------------------------


@dataclass
class Statement2Report:
    """Root structure of ``g(t) = Pi(t) . lam`` on the open interval.

    ``second_derivative_zeros`` counts inflection points in the detector's
    natural variable: ``s = t^N`` (i.e. ``exp(-|alpha|^2)``) for PNR and
    ``t`` for click arrays. Critical points do not depend on a monotone
    reparametrization but inflection points do; for PNR the count in ``t``
    (kept in ``second_derivative_zeros_t``) is one higher.
    """

    extra_critical: list
    node_critical: list
    second_derivative_zeros: list
    second_derivative_zeros_t: list
    interlaced: bool
    global_max_at_nodes: bool
    max_excess: float
    m: int

    @property
    def n_extra(self) -> int:
        return len(self.extra_critical)

    @property
    def n_second_zeros(self) -> int:
        return len(self.second_derivative_zeros)

    @property
    def holds(self) -> bool:
        return (self.n_extra == self.m and self.n_second_zeros == 2 * self.m - 1
                and self.interlaced and self.global_max_at_nodes
                and len(self.node_critical) == self.m)


def _roots(f, grid):
    vals = f(grid)
    roots = []
    s = np.sign(vals)
    scalar = lambda x: float(f(np.array([x]))[0])  # noqa: E731
    for i in np.nonzero(s[:-1] * s[1:] < 0)[0]:
        a, b = grid[i], grid[i + 1]
        if scalar(a) * scalar(b) >= 0:
            # rounding-level sign flip between batch and scalar evaluation
            continue
        roots.append(brentq(scalar, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps))
    for i in np.nonzero(s == 0)[0]:
        if 0 < grid[i] < 1:
            roots.append(float(grid[i]))
    return sorted(roots)


def natural_second_derivative(detector: DetectorModel, t) -> np.ndarray:
    """``d^2 Pi / dv^2`` in the natural variable ``v``, evaluated at curve parameter ``t``.

    PNR uses ``v = t^N`` where ``Pi(n|v) = v L^n / n!`` with ``L = -ln v``,
    so ``d^2/dv^2 = (L^{n-2}/(n-2)! - L^{n-1}/(n-1)!) / v``. Click arrays use ``t``.
    """
    if detector.kind == CLICK:
        return detector.q_vector_deriv(t, 2)
    t = np.asarray(t, dtype=float)
    v = t ** detector.N
    L = -np.log(v)
    n = np.arange(detector.N)
    fact = np.array([math.factorial(max(k, 0)) for k in range(-2, detector.N)], dtype=float)
    pw = lambda k: np.where(k >= 0, L[..., None] ** np.maximum(k, 0) / fact[np.maximum(k, -2) + 2], 0.0)  # noqa: E731
    return (pw(n - 2) - pw(n - 1)) / v[..., None]


def verify_statement2(detector: DetectorModel, tf: TestFunction, n_grid: int = 20001,
                      node_tol: float = 1e-6) -> Statement2Report:
    """Count critical points and inflection points of ``g(t) = Pi(t) . lam`` on (0, 1)."""
    lam = tf.lam
    m = len(tf.nodes)
    grid = np.unique(np.concatenate([np.linspace(0, 1, n_grid)[1:-1],
                                     np.geomspace(1e-12, 1e-2, 2000),
                                     1 - np.geomspace(1e-12, 1e-2, 2000)]))
    crit = _roots(lambda t: detector.q_vector_deriv(t, 1) @ lam, grid)
    # each node claims only its nearest root; others can sit closer than node_tol when a node is near 0
    claimed = set()
    for x in tf.nodes:
        if crit:
            i = int(np.argmin(np.abs(np.array(crit) - x)))
            if abs(crit[i] - x) < node_tol:
                claimed.add(i)
    node_hits = [c for i, c in enumerate(crit) if i in claimed]
    extra = [c for i, c in enumerate(crit) if i not in claimed]
    zeros_nat = _roots(lambda t: natural_second_derivative(detector, t) @ lam, grid)
    zeros_t = _roots(lambda t: detector.q_vector_deriv(t, 2) @ lam, grid)
    seq = sorted([(c, "c") for c in extra] + [(t, "t") for t in tf.nodes])
    labels = "".join(k for _, k in seq)
    want = ("ct" * m) if tf.tau == 0 else ("tc" * m)
    g = detector.q_vector(np.linspace(0, 1, SIGN_GRID * 5)) @ lam
    excess = float(g.max() - tf.rhs)
    scale = float(np.linalg.norm(lam))
    return Statement2Report(extra, node_hits, zeros_nat, zeros_t, labels == want,
                            excess <= 1e-9 * scale, excess, m)


# --- violation optimizer --------------------------------------------------------


@dataclass
class ViolationReport:
    margin: float
    nodes: tuple
    tau: Optional[float]
    t_sup: float
    test_function: Optional[TestFunction] = field(default=None, repr=False)
    std_error: float = 0.0
    n_samples: int = 0
    converged: bool = True


def _nodes_from_z(z):
    w = np.exp(np.append(z, 0.0) - np.max(np.append(z, 0.0)))
    w = w / w.sum()
    return np.cumsum(w)[:-1]


def _z_from_nodes(nodes):
    gaps = np.diff(np.concatenate([[0.0], nodes, [1.0]]))
    gaps = np.maximum(gaps, 1e-12)
    return np.log(gaps[:-1]) - np.log(gaps[-1])


class _OddObjective:
    def __init__(self, P, detector, tau):
        self.detector = detector
        self.tau = float(tau)
        self.PN = np.asarray(P, dtype=float)[: detector.N]
        self.grid_vals = detector.q_vector(_grid())
        self.pi_tau = detector.q_vector(self.tau)

    def batch(self, nodes):
        q, _, cond = _tight_directions(self.detector, nodes, self.tau)
        sign, over = _orient(self.detector, q, self.tau, self.grid_vals)
        lam = q * sign[:, None]
        margin = lam @ self.PN - lam @ self.pi_tau
        bad = (cond < 1e-13) | (over > 1e-9)
        return np.where(bad, -np.inf, margin), lam

    def __call__(self, z):
        # single-point fast path of ``batch`` for the local search
        nodes = _nodes_from_z(z)
        if np.any(np.diff(nodes) <= 0) or nodes[0] <= 0 or nodes[-1] >= 1:
            return np.inf
        det = self.detector
        V = np.empty((2 * len(nodes), det.N))
        V[0::2] = det.q_vector_deriv(nodes, 0, check=False) - self.pi_tau
        V[1::2] = det.q_vector_deriv(nodes, 1, check=False)
        norms = np.linalg.norm(V, axis=1)
        if norms.min() <= 1e-300:
            return np.inf
        V /= norms[:, None]
        sv = np.linalg.svd(V, compute_uv=False)
        if sv[-1] < 1e-13 * sv[0]:
            return np.inf
        q = np.linalg.qr(V.T, mode="complete")[0][:, -1]
        proj = self.grid_vals @ q
        at_tau = q @ self.pi_tau
        over_plus, over_minus = proj.max() - at_tau, at_tau - proj.min()
        s = 1.0 if over_plus <= over_minus else -1.0
        if min(over_plus, over_minus) > 1e-9:
            return np.inf
        return -s * (q @ self.PN - at_tau)


def max_violation(P, detector: DetectorModel, m: Optional[int] = None, n_restarts: int = 2,
                  seed: int = 0, n_coarse: int = 17, maxiter: int = 200) -> ViolationReport:
    """Largest tight-inequality margin for ``P`` with unit-norm test functions.

    ``N = 2`` scans the one-parameter family ``lambda_n2(t)``. Odd ``N``
    seeds each ``tau`` with a stratified ``n_coarse^m`` grid of ordered
    nodes and polishes the best ``n_restarts`` seeds (jittered by ``seed``)
    with Nelder-Mead in an unconstrained softmax parametrization.
    """
    N = detector.N
    P = np.asarray(P, dtype=float)
    if N == 2:
        return _max_violation_n2(P, detector)
    if N % 2 == 0:
        raise ValueError(f"tight construction covers odd N only, got N = {N}")
    if m is None:
        m = (N - 1) // 2
    if N != 2 * m + 1:
        raise ValueError(f"N = {N} does not match m = {m}")
    rng = np.random.default_rng(seed)
    cells = (np.arange(n_coarse) + 0.5) / n_coarse
    combos = np.array(list(itertools.combinations(cells, m)))
    best = None
    converged = True
    for tau in (0.0, 1.0):
        obj = _OddObjective(P, detector, tau)
        vals, lams = obj.batch(combos)
        order = np.argsort(-vals)[:n_restarts]
        for k, i in enumerate(order):
            if not np.isfinite(vals[i]):
                continue
            start = combos[i]
            if k:
                start = np.sort(np.clip(start + rng.normal(0, 0.25 / n_coarse, m), 1e-3, 1 - 1e-3))
            res = minimize(obj, _z_from_nodes(start), method="Nelder-Mead",
                           options={"maxiter": maxiter, "xatol": 1e-9, "fatol": 1e-10})
            cand_nodes = _nodes_from_z(res.x)
            cand = -res.fun if np.isfinite(res.fun) else -np.inf
            if cand < vals[i]:
                cand, cand_nodes = vals[i], combos[i]
            elif not res.success:
                converged = False
            if best is None or cand > best[0]:
                best = (cand, tuple(float(x) for x in cand_nodes), tau)
    if best is None or not np.isfinite(best[0]):
        raise DegeneracyError("no admissible node set found")
    margin, nodes, tau = best
    tf = lambda_odd(detector, nodes, tau, check=False).normalized()
    g = detector.q_vector(_grid()) @ tf.lam
    t_sup = float(_grid()[int(np.argmax(g))])
    return ViolationReport(float(tf.margin(P)), nodes, tau, t_sup, tf, converged=converged)


def _max_violation_n2(P, detector):
    PN = P[:2]
    ts = np.linspace(0.0, 1.0, SIGN_GRID)
    pts = detector.q_vector(ts)
    d = detector.q_vector_deriv(ts, 1)
    lam = np.stack([-d[:, 1], d[:, 0]], axis=1)
    nrm = np.linalg.norm(lam, axis=1)
    ok = nrm > 0
    vals = np.full(len(ts), -np.inf)
    vals[ok] = (lam[ok] @ PN - np.einsum("ij,ij->i", lam[ok], pts[ok])) / nrm[ok]

    def f(t):
        tf = lambda_n2(detector, t)
        n = np.linalg.norm(tf.lam)
        return -(tf.margin(P) / n) if n > 0 else np.inf

    i = int(np.argmax(vals))
    t_best = ts[i]
    a, b = ts[max(i - 1, 0)], ts[min(i + 1, len(ts) - 1)]
    res = minimize_scalar(f, bounds=(a, b), method="bounded", options={"xatol": 1e-13})
    if np.isfinite(res.fun) and -res.fun > vals[i]:
        t_best = float(res.x)
    tf = lambda_n2(detector, t_best).normalized()
    return ViolationReport(tf.margin(P), (float(t_best),), None, float(t_best), tf)
