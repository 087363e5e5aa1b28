"""Squared distance from a point to the convex hull of a column set.

Solves

    D = min_v ||y0 - Y v||_2^2   s.t.  v >= 0, sum(v) = 1

with an away-step Frank-Wolfe method. The linear minimization oracle over
the simplex is a plain argmin over the gradient, and away steps restore
linear convergence on this quadratic, so each iteration costs O(N) once
the Gram matrix G = Y'Y is formed. Exact line search is closed form.

Optimality is certified through the Frank-Wolfe dual gap

    g(v) = max_s grad(v)' (v - s) = grad(v)'v - min_i grad_i(v)

which upper-bounds f(v) - f(v*) for any feasible v. A solve stops when
g(v) <= tol * (1 + f(v)), a scale-free rule (distances in the experiments
span roughly 0.004 to 10 per dimension).

``reference_distance_small`` is an exact oracle for small instances: it
enumerates every nonempty support subset, solves the equality-constrained
least squares on the affine hull of that subset, and keeps the feasible
candidates. Used to validate the iterative path, never in production runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

__all__ = [
    "HullProblem",
    "HullProjection",
    "project_onto_hull",
    "fw_dual_gap",
    "reference_distance_small",
]

SIMPLEX_TOL = 1e-12  # feasibility slack on sum(v) = 1

# recompute tracked quantities from Y every this many iterations to stop
# incremental float drift
_REFRESH_EVERY = 512


@dataclass
class HullProblem:
    """Instance data: test point y0 (M,), vertex columns Y (M, N)."""

    y0: np.ndarray
    Y: np.ndarray
    tol: float = 1e-6
    max_iter: int | None = None  # default 50 * N

    def __post_init__(self):
        self.y0 = np.ascontiguousarray(self.y0, dtype=np.float64)
        self.Y = np.ascontiguousarray(self.Y, dtype=np.float64)
        if self.y0.ndim != 1 or self.Y.ndim != 2:
            raise ValueError("y0 must be a vector and Y a matrix")
        if self.Y.shape[0] != self.y0.shape[0]:
            raise ValueError(
                f"dimension mismatch: y0 has {self.y0.shape[0]} rows, Y has {self.Y.shape[0]}"
            )
        if self.Y.shape[0] < 1 or self.Y.shape[1] < 1:
            raise ValueError("need M >= 1 and N >= 1")
        if not np.isfinite(self.y0).all() or not np.isfinite(self.Y).all():
            raise ValueError("non-finite entries in hull problem")
        if not (self.tol > 0):
            raise ValueError("tol must be positive")
        if self.max_iter is None:
            self.max_iter = 50 * self.Y.shape[1]
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")


@dataclass
class HullProjection:
    """Solver output; ``distance`` is the squared Euclidean distance."""

    v: np.ndarray
    distance: float
    dual_gap: float
    iterations: int
    converged: bool
    objective_trace: np.ndarray | None = field(default=None, repr=False)


def _check_simplex(v: np.ndarray, n: int) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (n,):
        raise ValueError(f"v must have shape ({n},)")
    if (v < -SIMPLEX_TOL).any() or abs(v.sum() - 1.0) > 1e-9:
        raise ValueError("v is not on the unit simplex")
    return v


def fw_dual_gap(problem: HullProblem, v: np.ndarray) -> float:
    """Frank-Wolfe gap g(v) = grad'v - min_i grad_i for f(v) = ||y0 - Yv||^2.

    g(v) >= f(v) - f(v*) >= 0 for any feasible v.
    """
    v = _check_simplex(v, problem.Y.shape[1])
    resid = problem.y0 - problem.Y @ v
    grad = -2.0 * (problem.Y.T @ resid)
    return float(grad @ v - grad.min())


def project_onto_hull(
    problem: HullProblem,
    v0: np.ndarray | None = None,
    keep_trace: bool = False,
) -> HullProjection:
    """Away-step Frank-Wolfe solve of the hull-distance program.

    Starts from the uniform weight vector (or ``v0``). Vertex argmins break
    ties toward the lowest index. The returned weights are feasible and the
    objective is non-increasing across iterations; ``converged`` means the
    exact residual-based dual gap was certified below tol * (1 + distance).
    """
    Y, y0, tol = problem.Y, problem.y0, problem.tol
    N = Y.shape[1]

    G = Y.T @ Y
    b = Y.T @ y0
    c = float(y0 @ y0)
    gdiag = np.diag(G).copy()

    if v0 is None:
        v = np.full(N, 1.0 / N)
    else:
        v = _check_simplex(v0, N).copy()
        v[v < 0.0] = 0.0
        v /= v.sum()

    w = G @ v  # tracked G v

    trace: list[float] = []
    n_iter = 0
    converged = False

    for n_iter in range(problem.max_iter + 1):
        q = float(v @ w)  # v'Gv
        p = float(b @ v)
        grad = 2.0 * (w - b)
        grad_v = 2.0 * (q - p)
        f_cur = q - 2.0 * p + c

        if keep_trace:
            trace.append(f_cur)

        s = int(np.argmin(grad))  # FW vertex, lowest index on ties
        gap_fw = grad_v - grad[s]

        if gap_fw <= tol * (1.0 + f_cur):
            # certify on exact residual-based quantities before accepting
            resid = y0 - Y @ v
            f_cur = float(resid @ resid)
            grad_exact = -2.0 * (Y.T @ resid)
            gap_exact = float(grad_exact @ v) - float(grad_exact.min())
            if gap_exact <= tol * (1.0 + f_cur):
                converged = True
                break
            w = G @ v  # tracked state had drifted; refresh and continue
            continue

        if n_iter == problem.max_iter:
            break

        # away vertex over the current support, lowest index on ties
        support = np.flatnonzero(v > 0.0)
        a = int(support[np.argmax(grad[support])])
        gap_away = grad[a] - grad_v

        use_away = gap_away > gap_fw and support.size > 1
        if use_away:
            # direction d = v - e_a; step is capped where v_a hits zero
            gamma_max = v[a] / (1.0 - v[a]) if v[a] < 1.0 else np.inf
            slope = grad_v - grad[a]
            curv = q - 2.0 * w[a] + gdiag[a]  # d'Gd
        else:
            # direction d = e_s - v
            gamma_max = 1.0
            slope = grad[s] - grad_v
            curv = gdiag[s] - 2.0 * w[s] + q

        if curv > 0.0:
            gamma = min(max(-slope / (2.0 * curv), 0.0), gamma_max)
        else:
            gamma = gamma_max if slope < 0.0 else 0.0

        if use_away:
            if not np.isfinite(gamma):
                gamma = 0.0
            drop = gamma >= gamma_max * (1.0 - 1e-15)
            v *= 1.0 + gamma
            v[a] -= gamma
            if drop:
                v[a] = 0.0
            w *= 1.0 + gamma
            w -= gamma * G[:, a]
        else:
            v *= 1.0 - gamma
            v[s] += gamma
            if gamma >= 1.0:
                v[:] = 0.0
                v[s] = 1.0
            w *= 1.0 - gamma
            w += gamma * G[:, s]

        if (n_iter + 1) % _REFRESH_EVERY == 0:
            w = G @ v

    # final values reported from a fresh residual so the distance and gap
    # are recomputable from (v, y0, Y) alone
    v[v < 0.0] = 0.0
    v /= v.sum()
    resid = y0 - Y @ v
    distance = float(resid @ resid)
    grad = -2.0 * (Y.T @ resid)
    dual_gap = max(float(grad @ v - grad.min()), 0.0)
    converged = converged and dual_gap <= tol * (1.0 + distance)

    return HullProjection(
        v=v,
        distance=distance,
        dual_gap=dual_gap,
        iterations=n_iter,
        converged=converged,
        objective_trace=np.asarray(trace) if keep_trace else None,
    )


def reference_distance_small(problem: HullProblem) -> HullProjection:
    """Exact small-instance oracle by support enumeration.

    For every nonempty subset S of columns, solves

        min ||y0 - Y_S u||^2   s.t.  sum(u) = 1

    through the KKT system (pseudo-inverse on rank-deficient subsets),
    keeps solutions with u >= 0, and returns the best. Every vertex of the
    optimal face has affinely independent support columns, so the global
    optimum is always found. Only for N <= 12.
    """
    Y, y0 = problem.Y, problem.y0
    N = Y.shape[1]
    if N > 12:
        raise ValueError("reference oracle is limited to N <= 12 columns")

    best_d = np.inf
    best_v = None
    for size in range(1, N + 1):
        for subset in combinations(range(N), size):
            A = Y[:, subset]
            # KKT system of min ||y0 - A u||^2 s.t. 1'u = 1
            K = np.zeros((size + 1, size + 1))
            K[:size, :size] = 2.0 * (A.T @ A)
            K[:size, size] = 1.0
            K[size, :size] = 1.0
            rhs = np.concatenate([2.0 * (A.T @ y0), [1.0]])
            sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
            u = sol[:size]
            if (u < -1e-10).any() or abs(u.sum() - 1.0) > 1e-8:
                continue
            u = np.clip(u, 0.0, None)
            u /= u.sum()
            r = y0 - A @ u
            d = float(r @ r)
            if d < best_d:
                best_d = d
                best_v = np.zeros(N)
                best_v[list(subset)] = u

    assert best_v is not None  # every singleton subset gives a feasible u = (1,)

    return HullProjection(
        v=best_v,
        distance=best_d,
        dual_gap=0.0,
        iterations=0,
        converged=True,
    )
