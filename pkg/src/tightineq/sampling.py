"""Finite-sample estimates of inequality margins with delta-method errors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EmpiricalDist:
    counts: np.ndarray
    n_samples: int
    seed: int

    def __post_init__(self):
        if int(np.sum(self.counts)) != self.n_samples:
            raise ValueError("counts must sum to n_samples")

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.n_samples


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator from an explicit 64-bit seed."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def sample_counts(P, n_samples: int, seed: int) -> EmpiricalDist:
    """Multinomial draw of ``n_samples`` outcomes from ``P``."""
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    P = np.clip(np.asarray(P, dtype=float), 0.0, None)
    P = P / P.sum()
    counts = make_rng(seed).multinomial(n_samples, P)
    return EmpiricalDist(counts, int(n_samples), int(seed))


def estimate_margin(emp: EmpiricalDist, lam, rhs: float):
    """Plug-in margin ``P_hat . lam - rhs`` and its standard error.

    ``lam`` covers the first ``len(lam)`` outcomes; the remaining ones get
    weight zero. The variance ``(sum p l^2 - (sum p l)^2) / n`` is the
    multinomial covariance pushed through ``lam``; ``rhs`` is exact.
    """
    lam = np.asarray(lam, dtype=float)
    f = emp.frequencies
    if len(lam) > len(f):
        raise ValueError("test function longer than the outcome vector")
    w = np.zeros(len(f))
    w[: len(lam)] = lam
    mean = float(f @ w)
    var = max(float(f @ (w * w)) - mean * mean, 0.0) / emp.n_samples
    return mean - float(rhs), float(np.sqrt(var))


def estimate_test_function(emp: EmpiricalDist, tf):
    """``estimate_margin`` for a photocounting test function object."""
    return estimate_margin(emp, tf.lam, tf.rhs)
