"""Cross-checks of tight-inequality verdicts against the hull LP."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .detectors import DetectorModel
from .geometry import curve_hull_membership
from .photocount import linear_family_n2, linear_family_n3, max_violation

BAND = 1e-7


def random_points(detector: DetectorModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """Full outcome vectors: half uniform on the simplex, half noisy mixtures of curve points.

    The second half concentrates trials near the classical region, where
    the two verdicts are most likely to disagree.
    """
    K = detector.outcomes
    n_mix = n // 2
    uni = rng.dirichlet(np.ones(K), n - n_mix)
    ts = rng.uniform(0.0, 1.0, (n_mix, 3))
    w = rng.dirichlet(np.ones(3), n_mix)
    mix = np.einsum("ij,ijk->ik", w, detector.q_symbols(ts))
    eps = rng.uniform(0.0, 0.1, (n_mix, 1))
    mix = (1 - eps) * mix + eps * rng.dirichlet(np.ones(K), n_mix)
    out = np.vstack([uni, mix])
    return out[rng.permutation(n)]


def tight_margins(detector: DetectorModel, P: np.ndarray, seed: int = 0,
                  n_restarts: int = 2) -> np.ndarray:
    """Best tight-inequality margin per row of ``P`` (unit-norm test functions)."""
    if detector.N == 2:
        return linear_family_n2(P, detector)[0]
    if detector.N == 3:
        m0, _ = linear_family_n3(P, detector, 0.0)
        m1, _ = linear_family_n3(P, detector, 1.0)
        return np.maximum(m0, m1)
    return np.array([max_violation(p, detector, seed=seed, n_restarts=n_restarts).margin for p in P])


def hull_verdict(detector: DetectorModel, p: np.ndarray, tol: float = 1e-9):
    return curve_hull_membership(p[: detector.N], detector.q_vector, 0.0, 1.0, tol=tol)


@dataclass
class OracleReport:
    detector: str
    trials: int
    mode: str  # "equivalence" or "implication"
    compared: int = 0
    agreed: int = 0
    in_band: int = 0
    disagreements: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.disagreements

    def as_dict(self) -> dict:
        return {"detector": self.detector, "trials": self.trials, "mode": self.mode,
                "compared": self.compared, "agreed": self.agreed, "in_band": self.in_band,
                "disagreements": len(self.disagreements)}


def oracle_check(detector: DetectorModel, trials: int, seed: int, band: float = BAND,
                 n_restarts: int = 2) -> OracleReport:
    """Compare tight verdicts with LP verdicts on random points.

    For ``N`` in {2, 3} the tight family is complete, so the verdicts must
    coincide. For larger odd ``N`` only "tight violation implies outside
    the hull" is checked. Trials with either margin inside ``band`` are
    skipped. ``n_restarts`` only affects odd ``N >= 5``; fewer restarts
    find fewer violations but every one found must still be confirmed.
    """
    rng = np.random.default_rng(seed)
    P = random_points(detector, trials, rng)
    tight = tight_margins(detector, P, seed, n_restarts)
    mode = "equivalence" if detector.N <= 3 else "implication"
    rep = OracleReport(detector.label, trials, mode)
    for p, m in zip(P, tight):
        v = hull_verdict(detector, p)
        # inside verdicts carry a residual-sized margin; only separations count
        if abs(m) < band or (not v.inside and v.margin < band):
            rep.in_band += 1
            continue
        rep.compared += 1
        tight_out = m > 0
        if mode == "equivalence":
            good = tight_out == (not v.inside)
        else:
            good = (not tight_out) or (not v.inside)
        if good:
            rep.agreed += 1
        else:
            rep.disagreements.append((p.tolist(), float(m), bool(v.inside), float(v.margin)))
    return rep
