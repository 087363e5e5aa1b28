"""Random system realizations for the two-user blind identification model.

A training block for one user is

    Y = (1/sqrt(M)) H X + sigma * W

with H (M x M), X (M x N) and W (M x N) all i.i.d. standard normal. An
unseen test transmission from the user with channel H is

    y0 = (1/sqrt(M)) H x0 + sigma * n0

using the same 1/sqrt(M) normalization as the training block, so the test
point is a zero-mean Gaussian with covariance sigma^2 I + (1/M) H H'.

Randomness is drawn from counter-based Philox (4x64, 10 rounds) streams
keyed by a master seed plus an integer path, so every trial and every
object inside a trial owns a disjoint, platform-reproducible stream.
Normal variates come from numpy's ziggurat ``standard_normal``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ModelParams",
    "TrainingSet",
    "TestPoint",
    "SeedStream",
    "make_training_set",
    "make_test_point",
    "test_covariance",
    "norm_concentration_stat",
    "RNG_ALGORITHM",
]

RNG_ALGORITHM = "numpy.random.Philox (Philox4x64-10) / SeedSequence spawn keys / ziggurat standard_normal"


@dataclass(frozen=True)
class ModelParams:
    """System size: M antennas, N training transmissions, noise power sigma2."""

    M: int
    N: int
    sigma2: float

    def __post_init__(self):
        if self.M < 1 or self.N < 1:
            raise ValueError("M and N must be positive integers")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be nonnegative")

    @property
    def alpha(self) -> float:
        return self.M / self.N

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


@dataclass(frozen=True)
class SeedStream:
    """Reproducible RNG stream addressed by (master_seed, path).

    Identical (master_seed, path) pairs produce identical sample sequences
    across runs, platforms and worker layouts. ``child(i, j, ...)`` extends
    the path, giving statistically independent substreams.
    """

    master_seed: int
    path: tuple[int, ...] = ()

    def child(self, *indices: int) -> "SeedStream":
        return SeedStream(self.master_seed, self.path + tuple(int(i) for i in indices))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=self.path)
        return np.random.Generator(np.random.Philox(seq))


@dataclass
class TrainingSet:
    """One user's channel, transmit block, noise block and received block."""

    H: np.ndarray
    X: np.ndarray
    noise: np.ndarray
    Y: np.ndarray


@dataclass
class TestPoint:
    """Unseen transmission y0 from the user carrying ``true_label``."""

    y0: np.ndarray
    true_label: str
    x0: np.ndarray
    n0: np.ndarray


def make_training_set(params: ModelParams, stream: SeedStream) -> TrainingSet:
    """Draw H, X, noise (in that fixed order) and form the received block."""
    g = stream.generator()
    M, N = params.M, params.N
    H = g.standard_normal((M, M))
    X = g.standard_normal((M, N))
    noise = g.standard_normal((M, N))
    Y = (H @ X) / math.sqrt(M) + params.sigma * noise
    return TrainingSet(H=H, X=X, noise=noise, Y=Y)


def make_test_point(
    H: np.ndarray, sigma2: float, label: str, stream: SeedStream
) -> TestPoint:
    """Fresh test transmission through the channel of the labeled user."""
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("H must be a square channel matrix")
    if sigma2 < 0:
        raise ValueError("sigma2 must be nonnegative")
    if label not in ("a", "b"):
        raise ValueError("label must be 'a' or 'b'")
    g = stream.generator()
    M = H.shape[0]
    x0 = g.standard_normal(M)
    n0 = g.standard_normal(M)
    y0 = (H @ x0) / math.sqrt(M) + math.sqrt(sigma2) * n0
    return TestPoint(y0=y0, true_label=label, x0=x0, n0=n0)


def test_covariance(H: np.ndarray, sigma2: float) -> np.ndarray:
    """Covariance of the test point: sigma^2 I + (1/M) H H'."""
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("H must be a square channel matrix")
    M = H.shape[0]
    C = (H @ H.T) / M
    C[np.diag_indices(M)] += sigma2
    return 0.5 * (C + C.T)  # symmetrize away matmul roundoff


def norm_concentration_stat(X: np.ndarray) -> float:
    """Worst column deviation of (1/M)||x_i||^2 from 1.

    Columns of (1/sqrt(M)) X concentrate on the unit sphere for large M;
    this is the max over columns of |(1/M)||x_i||^2 - 1|.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.size == 0:
        raise ValueError("X must be a nonempty matrix")
    M = X.shape[0]
    col_norms = (X * X).sum(axis=0) / M
    return float(np.abs(col_norms - 1.0).max())
