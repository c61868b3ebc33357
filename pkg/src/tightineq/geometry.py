"""Convex-geometry core: generalized cross products, support-function margins
and convex-hull membership with certificates.

Hull membership is a linear program. Its primal solution certifies
membership with convex weights; its dual gives a separating vector
``lam`` with ``query . lam - max_i sample_i . lam > 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import linprog, minimize_scalar


class UsageError(ValueError):
    """Inconsistent dimensions or empty inputs."""


class HullLPError(RuntimeError):
    """The hull LP did not terminate cleanly."""

    def __init__(self, message, status=None, nit=None, iteration=None):
        super().__init__(message)
        self.status = status
        self.nit = nit
        self.iteration = iteration


def generalized_cross(vectors) -> np.ndarray:
    """Common normal of ``N - 1`` vectors in ``R^N``.

    Equals the formal determinant whose first row holds the basis vectors
    and whose remaining rows hold the inputs, i.e. component ``j`` is the
    cofactor ``(-1)^j det(V without column j)`` (0-based ``j``).

    The direction comes from a complete QR factorization, the scale and
    sign from one LU determinant, which keeps the orthogonality residual
    at rounding level even for badly conditioned inputs.
    """
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    k, n = V.shape
    if n < 2 or k != n - 1:
        raise UsageError(f"need N-1 vectors of length N >= 2, got {k} of length {n}")
    if not np.all(np.isfinite(V)):
        raise UsageError("vectors must be finite")
    Q, _ = np.linalg.qr(V.T, mode="complete")
    q = Q[:, -1]
    # cross(V) . x = det([x; V]) for every x, so cross(V) = det([q; V]) q
    scale = np.linalg.det(np.vstack([q, V]))
    return scale * q


def cofactor_cross(vectors) -> np.ndarray:
    """Reference cofactor expansion along the symbolic first row."""
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    k, n = V.shape
    if n < 2 or k != n - 1:
        raise UsageError(f"need N-1 vectors of length N >= 2, got {k} of length {n}")
    out = np.empty(n)
    for j in range(n):
        minor = np.delete(V, j, axis=1)
        out[j] = (-1) ** j * (np.linalg.det(minor) if n > 2 else minor[0, 0])
    return out


def evaluate_inequality(P, lam, curve_values) -> float:
    """Margin ``P . lam - max_k curve_k . lam``; positive means violated."""
    P = np.asarray(P, dtype=float)
    lam = np.asarray(lam, dtype=float)
    C = np.atleast_2d(np.asarray(curve_values, dtype=float))
    if C.size == 0:
        raise UsageError("curve_values must not be empty")
    if P.shape != lam.shape or C.shape[1] != lam.shape[0]:
        raise UsageError("P, lambda and curve values must share one dimension")
    return float(P @ lam - np.max(C @ lam))


def curve_support(curve: Callable, lam, lo: float, hi: float, n_grid: int = 2001,
                  extra_points=None, grid=None):
    """Maximum of ``curve(t) . lam`` over ``[lo, hi]`` and optional extra points.

    Dense grid then a bounded scalar refinement around the best grid
    cell. Returns ``(value, t_argmax)``; ``t_argmax`` is ``None`` when an
    extra point wins.
    """
    lam = np.asarray(lam, dtype=float)
    ts = np.linspace(lo, hi, n_grid) if grid is None else np.asarray(grid, dtype=float)
    vals = curve(ts) @ lam
    i = int(np.argmax(vals))
    best, t_best = float(vals[i]), float(ts[i])
    a = ts[max(i - 1, 0)]
    b = ts[min(i + 1, len(ts) - 1)]
    if b > a:
        res = minimize_scalar(lambda s: -float(curve(np.array([s]))[0] @ lam),
                              bounds=(a, b), method="bounded",
                              options={"xatol": 1e-12 * max(1.0, abs(b))})
        if -res.fun > best:
            best, t_best = float(-res.fun), float(res.x)
    if extra_points is not None:
        ev = np.atleast_2d(np.asarray(extra_points, dtype=float)) @ lam
        if ev.size and ev.max() > best:
            return float(ev.max()), None
    return best, t_best


def golden_section_max(f, a, b, n_iter: int = 60):
    """Batched golden-section search for the maximum of ``f`` on ``[a, b]``.

    ``a`` and ``b`` are arrays of bracket ends; ``f`` maps an array of
    abscissae to an array of values. Returns ``(t, f(t))``.
    """
    g = (math.sqrt(5.0) - 1.0) / 2.0
    for _ in range(n_iter):
        c = b - g * (b - a)
        d = a + g * (b - a)
        left = f(c) >= f(d)
        a, b = np.where(left, a, c), np.where(left, d, b)
    t = 0.5 * (a + b)
    return t, f(t)


@dataclass
class HullVerdict:
    """Outcome of a hull-membership query.

    Exactly one of ``weights`` (inside) or ``separator`` (outside) is set.
    ``margin`` is the separation ``query . lam - max_i sample_i . lam``
    for the unit-sup-norm separator, or minus the residual for inside.
    """

    inside: bool
    margin: float
    weights: Optional[np.ndarray] = None
    separator: Optional[np.ndarray] = None
    samples: Optional[np.ndarray] = field(default=None, repr=False)
    iterations: int = 1

    def __post_init__(self):
        if (self.weights is None) == (self.separator is None):
            raise ValueError("exactly one certificate kind must be present")


def hull_membership(query, samples, tol: float = 1e-9) -> HullVerdict:
    """Is ``query`` a convex combination of ``samples`` (rows) within ``tol``?

    Solves ``min sum(e+ + e-)`` s.t. ``S^T w + e+ - e- = query``,
    ``sum w = 1``, ``w, e >= 0``. The dual of that LP is
    ``max query . y + z`` s.t. ``S y + z <= 0``, ``|y| <= 1``, so a
    positive optimum hands back the separator ``y`` directly.
    """
    q = np.asarray(query, dtype=float)
    S = np.atleast_2d(np.asarray(samples, dtype=float))
    if tol <= 0:
        raise UsageError("tol must be positive")
    if S.shape[0] < 1 or S.shape[1] != q.shape[0] or S.size == 0:
        raise UsageError("need at least one sample with the query's dimension")
    k, n = S.shape
    A = np.zeros((n + 1, k + 2 * n))
    A[:n, :k] = S.T
    A[:n, k:k + n] = np.eye(n)
    A[:n, k + n:] = -np.eye(n)
    A[n, :k] = 1.0
    b = np.append(q, 1.0)
    c = np.concatenate([np.zeros(k), np.ones(2 * n)])
    res = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    if res.status != 0:
        raise HullLPError(f"hull LP failed: {res.message}", status=res.status, nit=res.nit)
    w = res.x[:k]
    resid = np.abs(S.T @ w - q)
    if np.max(resid) <= tol:
        return HullVerdict(True, -float(np.max(resid)), weights=w, samples=S)
    y = np.asarray(res.eqlin.marginals[:n], dtype=float)
    margin = float(q @ y - np.max(S @ y))
    if margin <= 0:
        # duals degenerate; fall back to the residual direction
        y = np.sign(q - S.T @ w)
        margin = float(q @ y - np.max(S @ y))
    return HullVerdict(False, margin, separator=y, samples=S)


def curve_hull_membership(query, curve: Callable, lo: float, hi: float,
                          n_init: int = 201, tol: float = 1e-9, extra_points=None,
                          n_grid: int = 2001, max_iter: int = 60) -> HullVerdict:
    """Hull membership against a continuous curve by column generation.

    Starts from ``n_init`` curve samples (plus ``extra_points``, e.g. limits
    at infinity). Whenever the discrete LP separates the query, the true
    curve support along the separator is located and, if it beats the
    discrete one, that curve point is added and the LP re-solved. An
    outside verdict is returned only once the separator clears the whole
    curve, so its margin is measured against the true support.
    """
    q = np.asarray(query, dtype=float)
    pts = [curve(np.linspace(lo, hi, n_init))]
    if extra_points is not None:
        pts.append(np.atleast_2d(np.asarray(extra_points, dtype=float)))
    S = np.vstack(pts)
    grid = np.linspace(lo, hi, n_grid)
    for it in range(1, max_iter + 1):
        v = hull_membership(q, S, tol)
        v.iterations = it
        if v.inside:
            return v
        y = v.separator
        sup, t_star = curve_support(curve, y, lo, hi, grid=grid, extra_points=extra_points)
        disc = float(np.max(S @ y))
        true_margin = float(q @ y - sup)
        if true_margin > 0 or sup <= disc + 1e-15 or t_star is None:
            # y separates the query from the whole curve, not just the samples
            v.margin = true_margin
            return v
        S = np.vstack([S, curve(np.array([t_star]))])
    raise HullLPError("column generation did not converge", iteration=max_iter)
