"""Numerical free probability on empirical spectra.

Everything here works on the discrete spectrum of a finite symmetric
matrix (no kernel smoothing); deviations from the limiting laws are
O(dim^-1) for the transforms and absorbed by test tolerances.

Cauchy (Stieltjes) transform of a spectrum {l_1..l_n}:

    G(z) = (1/n) sum_i 1/(z - l_i),   z outside [min l, max l]

G is strictly decreasing in z on (-inf, min l) and maps that ray onto
(-inf, 0), so for w < 0 the functional inverse is found by bracketed
monotone root-finding below the spectrum, and

    R(w) = G^{-1}(w) - 1/w

is the R-transform. For |w| below a small cutoff the subtraction above
cancels catastrophically, so R is evaluated from its free-cumulant series
R(w) = k1 + k2 w + k3 w^2 computed from the first three spectral moments.

The rank-one spherical integral over the orthogonal group

    I = E_u[ exp(-N c t u' B u) ],  u uniform on the unit (N-1)-sphere,

has asymptotic rate (as N grows, with the ESD of B converging)

    (1/N) log I  ->  -c t  Int_0^1  R_B(-2 c t w) dw

``spherical_integral_mc`` estimates the left side by logsumexp Monte
Carlo with a jackknife standard error; ``free_fourier_prediction``
evaluates the right side by adaptive quadrature. The even N=2 case has a
one-dimensional angular quadrature oracle. Naive Monte Carlo is only
trustworthy for small c*t (large deviations dominate otherwise), which
is why verification sticks to c*t <= 0.25 and N <= 512.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize
from scipy.special import logsumexp

from .model import SeedStream

__all__ = [
    "SpectralSample",
    "SphericalIntegralSpec",
    "esd_eigenvalues",
    "cauchy_transform",
    "r_transform",
    "free_fourier_prediction",
    "spherical_integral_mc",
    "spherical_integral_exact_n2",
    "spectral_law_ks",
    "quarter_circle_cdf",
    "mp_unit_ratio_cdf",
    "sample_goe_matrix",
    "sample_wishart_unit_matrix",
    "haar_orthogonal",
]

_SYMMETRY_TOL = 1e-8
_R_SERIES_CUTOFF = 1e-6  # |w| below this: use the cumulant series
_MC_BLOCK = 4096  # spherical MC draws per sub-stream block


@dataclass(frozen=True)
class SpectralSample:
    """Sorted real spectrum of a symmetric matrix."""

    eigenvalues: np.ndarray
    dim: int

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=np.float64)
        if ev.ndim != 1 or ev.size != self.dim or self.dim < 1:
            raise ValueError("eigenvalues must be a vector of length dim")
        if not np.isfinite(ev).all():
            raise ValueError("non-finite eigenvalues")
        if (np.diff(ev) < 0).any():
            raise ValueError("eigenvalues must be sorted ascending")
        object.__setattr__(self, "eigenvalues", ev)


@dataclass(frozen=True)
class SphericalIntegralSpec:
    """Inputs of the rank-one spherical integral E_u exp(-N c theta u'Bu)."""

    B: np.ndarray
    theta: float
    c: float
    samples: int

    def __post_init__(self):
        B = np.asarray(self.B, dtype=np.float64)
        if B.ndim != 2 or B.shape[0] != B.shape[1]:
            raise ValueError("B must be square")
        if np.abs(B - B.T).max() > 1e-12:
            raise ValueError("B must be symmetric within 1e-12")
        if not (self.theta > 0 and self.c > 0):
            raise ValueError("theta and c must be positive")
        if self.samples < 1:
            raise ValueError("samples must be positive")
        object.__setattr__(self, "B", B)


def esd_eigenvalues(S: np.ndarray) -> SpectralSample:
    """Full sorted spectrum of a symmetric matrix (dense eigensolver)."""
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError("S must be square")
    scale = np.abs(S).max()
    if scale > 0 and np.abs(S - S.T).max() > _SYMMETRY_TOL * scale:
        raise ValueError("S is not symmetric within 1e-8")
    ev = np.linalg.eigvalsh(S)
    return SpectralSample(eigenvalues=np.sort(ev), dim=S.shape[0])


def cauchy_transform(spec: SpectralSample, z: float) -> float:
    """G(z) = (1/n) sum 1/(z - l_i) for z outside the spectral hull."""
    ev = spec.eigenvalues
    if ev[0] <= z <= ev[-1]:
        raise ValueError("z lies inside the spectral hull [min, max]")
    return float(np.mean(1.0 / (z - ev)))


def _r_series(spec: SpectralSample, w: float) -> float:
    """R(w) = k1 + k2 w + k3 w^2 from spectral moments; error O(k4 w^3)."""
    ev = spec.eigenvalues
    m1 = float(ev.mean())
    m2 = float((ev**2).mean())
    m3 = float((ev**3).mean())
    k2 = m2 - m1 * m1
    k3 = m3 - 3 * m1 * m2 + 2 * m1**3
    return m1 + k2 * w + k3 * w * w


def r_transform(spec: SpectralSample, w: float) -> float:
    """R(w) = G^{-1}(w) - 1/w on negative real arguments.

    G restricted to z < min(spectrum) decreases from 0- to -inf, so every
    w < 0 has a unique preimage; the bracket is found by expanding away
    from the spectral edge and the root polished by Brent's method to a
    residual |G(G^{-1}(w)) - w| <= 1e-10.
    """
    if not w < 0:
        raise ValueError("r_transform is defined on w < 0 only")
    if w > -_R_SERIES_CUTOFF:
        return _r_series(spec, w)
    ev = spec.eigenvalues
    lmin = float(ev[0])

    def g(z: float) -> float:
        return float(np.mean(1.0 / (z - ev)))

    # upper end: approach the edge until G <= w (G -> -inf at the edge)
    t = max(1.0, abs(lmin))
    z_hi = lmin - t
    for _ in range(200):
        if g(z_hi) <= w:
            break
        t *= 0.5
        z_hi = lmin - t
    else:
        raise ValueError("no upper bracket for the R-transform inversion")
    # lower end: move left until G >= w (G -> 0- far from the spectrum)
    s = 2.0 * t
    z_lo = lmin - s
    for _ in range(200):
        if g(z_lo) >= w:
            break
        s *= 2.0
        z_lo = lmin - s
    else:
        raise ValueError("no lower bracket for the R-transform inversion")

    z_star = optimize.brentq(lambda z: g(z) - w, z_lo, z_hi, xtol=1e-14, rtol=8.9e-16)
    resid = abs(g(z_star) - w)
    if resid > 1e-10:
        raise ValueError(f"R-transform inversion residual {resid:.3e} too large")
    return float(z_star - 1.0 / w)


def free_fourier_prediction(spec: SpectralSample, theta: float, c: float) -> float:
    """Asymptotic rate -c*t Int_0^1 R_B(-2 c t w) dw by adaptive quadrature."""
    if not (theta > 0 and c > 0):
        raise ValueError("theta and c must be positive")
    ct = c * theta
    val, err = integrate.quad(
        lambda w: r_transform(spec, -2.0 * ct * w),
        0.0,
        1.0,
        epsabs=1e-10,
        epsrel=1e-10,
        limit=200,
    )
    if err > 1e-8:
        raise ValueError(f"quadrature error estimate {err:.3e} exceeds 1e-8")
    return -ct * val


def spherical_integral_mc(
    spec: SphericalIntegralSpec, stream: SeedStream
) -> tuple[float, float]:
    """Monte Carlo estimate of (1/N) log E_u[exp(-N c t u'Bu)].

    Directions are Gaussians normalized to the unit sphere, drawn in fixed
    blocks with per-block substreams (worker-layout independent). The
    log-mean uses logsumexp; the standard error is a delete-one jackknife
    on the rate.
    """
    B, n_samples = spec.B, spec.samples
    N = B.shape[0]
    if N < 2:
        raise ValueError("need N >= 2")
    if N > 512:
        raise ValueError("spherical MC is limited to N <= 512")
    if n_samples < 1000:
        raise ValueError("need at least 10^3 samples")
    ct = spec.c * spec.theta

    exponents = np.empty(n_samples)
    pos = 0
    block_idx = 0
    while pos < n_samples:
        take = min(_MC_BLOCK, n_samples - pos)
        g = stream.child(block_idx).generator()
        U = g.standard_normal((take, N))
        U /= np.linalg.norm(U, axis=1, keepdims=True)
        quad_form = np.einsum("si,si->s", U @ B, U)
        exponents[pos : pos + take] = -N * ct * quad_form
        pos += take
        block_idx += 1

    log_total = float(logsumexp(exponents))
    rate = (log_total - math.log(n_samples)) / N

    # delete-one jackknife: log(T - e^{a_j}) = logT + log1p(-e^{a_j - logT})
    delta = np.exp(exponents - log_total)
    delta = np.clip(delta, None, 1.0 - 1e-15)
    loo = (log_total + np.log1p(-delta) - math.log(n_samples - 1)) / N
    se = math.sqrt((n_samples - 1) / n_samples * float(((loo - loo.mean()) ** 2).sum()))
    return rate, se


def spherical_integral_exact_n2(B: np.ndarray, theta: float, c: float) -> float:
    """N=2 oracle: (1/2) log (1/2pi) Int_0^2pi exp(-2 c t u(phi)'B u(phi)) dphi."""
    B = np.asarray(B, dtype=np.float64)
    if B.shape != (2, 2):
        raise ValueError("B must be 2x2")
    ct = c * theta

    def integrand(phi: float) -> float:
        u = np.array([math.cos(phi), math.sin(phi)])
        return math.exp(-2.0 * ct * float(u @ B @ u))

    val, _ = integrate.quad(integrand, 0.0, 2.0 * math.pi, epsabs=1e-12, epsrel=1e-12, limit=400)
    return 0.5 * math.log(val / (2.0 * math.pi))


# ---------------------------------------------------------------------------
# limiting spectral laws (aspect ratio 1) and goodness of fit
# ---------------------------------------------------------------------------

def quarter_circle_cdf(s: np.ndarray) -> np.ndarray:
    """CDF of the quarter-circle law on [0, 2]: density sqrt(4 - s^2)/pi.

    Limit of the singular values of (1/sqrt(M)) H with H square i.i.d.
    standard normal.
    """
    s = np.clip(np.asarray(s, dtype=np.float64), 0.0, 2.0)
    return (s * np.sqrt(4.0 - s * s) / 2.0 + 2.0 * np.arcsin(s / 2.0)) / np.pi


def mp_unit_ratio_cdf(x: np.ndarray) -> np.ndarray:
    """CDF of the Marchenko-Pastur law at ratio 1 on [0, 4].

    With u = 2 arcsin(sqrt(x)/2) the closed form is (u + sin u)/pi; the
    density is sqrt((4 - x)/x)/(2 pi). Limit of the eigenvalues of
    (1/M) H H' with H square i.i.d. standard normal.
    """
    x = np.clip(np.asarray(x, dtype=np.float64), 0.0, 4.0)
    u = 2.0 * np.arcsin(np.sqrt(x) / 2.0)
    return (u + np.sin(u)) / np.pi


_LAWS = {
    "quarter_circle_singular": quarter_circle_cdf,
    "mp_unit_ratio_eigen": mp_unit_ratio_cdf,
}


def spectral_law_ks(spec: SpectralSample, law: str) -> float:
    """Kolmogorov-Smirnov statistic of the sample against a limiting law."""
    try:
        cdf = _LAWS[law]
    except KeyError:
        raise ValueError(f"unknown law {law!r}; choose from {sorted(_LAWS)}") from None
    ev = spec.eigenvalues
    n = spec.dim
    F = cdf(ev)
    steps_hi = np.arange(1, n + 1) / n
    steps_lo = np.arange(0, n) / n
    return float(max(np.abs(steps_hi - F).max(), np.abs(steps_lo - F).max()))


# ---------------------------------------------------------------------------
# ensemble constructors used by verification runs
# ---------------------------------------------------------------------------

def sample_goe_matrix(dim: int, stream: SeedStream) -> np.ndarray:
    """GOE-normalized Wigner matrix (A + A')/sqrt(2 dim): semicircle on [-2, 2]."""
    A = stream.generator().standard_normal((dim, dim))
    return (A + A.T) / math.sqrt(2.0 * dim)


def sample_wishart_unit_matrix(dim: int, stream: SeedStream) -> np.ndarray:
    """(1/dim) H H' with H square i.i.d. normal: MP law at ratio 1 on [0, 4]."""
    H = stream.generator().standard_normal((dim, dim))
    return (H @ H.T) / dim


def haar_orthogonal(dim: int, stream: SeedStream) -> np.ndarray:
    """Haar-distributed orthogonal matrix via QR with sign-fixed diagonal."""
    A = stream.generator().standard_normal((dim, dim))
    Q, R = np.linalg.qr(A)
    return Q * np.sign(np.diag(R))
