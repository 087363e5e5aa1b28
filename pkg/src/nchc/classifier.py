"""Nearest-convex-hull decision rule, moment estimators and the Gaussian
accuracy approximation.

A test point known to come from user a produces two certified squared
distances: d_aa to its own hull (direct hull) and d_ab to the other
user's hull (cross hull). The decision metric is d = d_aa - d_ab; the
point is classified as a when d < 0 and as b otherwise (ties go to b).

The accuracy of the rule is approximated by matching a Gaussian to the
first two moments of d and integrating its mass below zero:

    predicted P(classify as a) = Phi(-mean_d / sqrt(var_d))

The variance of d also satisfies the decomposition

    Var(d) = 2 Var(d_aa) + 2 Var(d_ab) - Var(d_aa + d_ab)

which holds exactly for unbiased sample moments and is exposed through
``MomentSummary`` so the coupled term Var(d_aa + d_ab) can be reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import ndtri

from .hull import HullProblem, project_onto_hull

__all__ = [
    "DecisionSample",
    "MomentSummary",
    "decision_sample",
    "classify",
    "moment_summary",
    "gaussian_accuracy",
    "std_normal_cdf",
    "empirical_misclassification",
    "wilson_interval",
]


@dataclass
class DecisionSample:
    """One trial's distance pair, decision metric and assigned label."""

    d_aa: float
    d_ab: float
    d: float
    label: str
    flagged: bool = False  # True when either hull solve missed its certificate
    iterations: int = 0  # total Frank-Wolfe iterations across both solves

    def __post_init__(self):
        if self.label not in ("a", "b"):
            raise ValueError("label must be 'a' or 'b'")


@dataclass
class MomentSummary:
    """Unbiased sample moments of (d_aa, d_ab, d) over a trial batch."""

    n: int
    mean_daa: float
    mean_dab: float
    mean_d: float
    var_daa: float
    var_dab: float
    var_sum: float  # Var(d_aa + d_ab), the coupled term
    var_d: float
    se_mean_d: float


def classify(sample: DecisionSample) -> str:
    """'a' iff the decision metric is strictly negative, else 'b'."""
    return "a" if sample.d < 0.0 else "b"


def _received_block(block) -> np.ndarray:
    # accept a TrainingSet or a raw M x N array of received columns
    return np.asarray(getattr(block, "Y", block), dtype=np.float64)


def decision_sample(
    y0: np.ndarray,
    Ya,
    Yb,
    tol: float = 1e-6,
    max_iter: int | None = None,
) -> DecisionSample:
    """Solve both hull distances for one test point and apply the rule.

    ``Ya`` / ``Yb`` may be TrainingSet objects or plain received matrices.
    Both solves use identical solver options. A sample is flagged (not an
    error) when either solve returns without its dual-gap certificate.
    """
    y0 = np.asarray(y0, dtype=np.float64)
    proj_a = project_onto_hull(HullProblem(y0, _received_block(Ya), tol=tol, max_iter=max_iter))
    proj_b = project_onto_hull(HullProblem(y0, _received_block(Yb), tol=tol, max_iter=max_iter))
    d = proj_a.distance - proj_b.distance
    sample = DecisionSample(
        d_aa=proj_a.distance,
        d_ab=proj_b.distance,
        d=d,
        label="a" if d < 0.0 else "b",
        flagged=not (proj_a.converged and proj_b.converged),
        iterations=proj_a.iterations + proj_b.iterations,
    )
    return sample


def moment_summary(samples: Sequence[DecisionSample]) -> MomentSummary:
    """Unbiased moments of the distance pair; needs at least two samples."""
    n = len(samples)
    if n < 2:
        raise ValueError("moment_summary needs n >= 2 samples")
    daa = np.array([s.d_aa for s in samples])
    dab = np.array([s.d_ab for s in samples])
    d = np.array([s.d for s in samples])
    var_d = float(np.var(d, ddof=1))
    return MomentSummary(
        n=n,
        mean_daa=float(daa.mean()),
        mean_dab=float(dab.mean()),
        mean_d=float(d.mean()),
        var_daa=float(np.var(daa, ddof=1)),
        var_dab=float(np.var(dab, ddof=1)),
        var_sum=float(np.var(daa + dab, ddof=1)),
        var_d=var_d,
        se_mean_d=math.sqrt(var_d / n),
    )


def std_normal_cdf(x: float) -> float:
    """Phi(x) through the complementary error function: 0.5 erfc(-x/sqrt(2))."""
    if not math.isfinite(x):
        raise ValueError("x must be finite")
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def gaussian_accuracy(mean_d: float, var_d: float) -> float:
    """Mass of N(mean_d, var_d) below zero: the moment-matched probability
    of classifying as a."""
    if not var_d > 0.0:
        raise ValueError("var_d must be positive")
    return std_normal_cdf(-mean_d / math.sqrt(var_d))


def empirical_misclassification(
    samples: Iterable[DecisionSample], confidence: float = 0.95
) -> tuple[float, tuple[float, float]]:
    """Fraction of label-a-truth samples classified as b, with a Wilson
    score interval at the given confidence."""
    labels = [s.label for s in samples]
    n = len(labels)
    if n < 1:
        raise ValueError("need at least one sample")
    k = sum(1 for lab in labels if lab == "b")
    rate = k / n
    lo, hi = wilson_interval(k, n, confidence)
    return rate, (lo, hi)


def wilson_interval(k: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n < 1:
        raise ValueError("n must be positive")
    z = float(ndtri(0.5 + confidence / 2.0))
    p = k / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if k == 0 else max(center - half, 0.0)
    hi = 1.0 if k == n else min(center + half, 1.0)
    return lo, hi
