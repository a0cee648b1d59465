"""The interpolators that reconstruction estimators plug in.

Four families: barycentric Lagrange polynomials, cubic splines, the
plain kernel interpolator, and the kriging-style interpolator with
regression terms.  All are linear in the knot values, so each exposes
an evaluation that is exact at the knots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded, solveh_banded

from .errors import (
    DimensionMismatch,
    DuplicateKnots,
    RankDeficientRegression,
    UnsortedKnots,
)
from .kernels import KernelSpec, kernel_matrix
from .numerics import SpdFactorization, spd_factor

G_KINDS = ("none", "constant", "constant+linear")


@dataclass(frozen=True)
class KnotSet:
    """m distinct points in the unit hypercube carrying the model parameters."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.ndim != 2 or pts.size == 0:
            raise DimensionMismatch("knots must form a nonempty (m, d) array")
        if np.min(pts) < -1e-9 or np.max(pts) > 1.0 + 1e-9:
            raise ValueError("knot coordinates must lie in [0, 1]")
        if np.unique(pts, axis=0).shape[0] != pts.shape[0]:
            raise DuplicateKnots("knot rows must be pairwise distinct")
        object.__setattr__(self, "points", pts)

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


def as_knots(points) -> KnotSet:
    """Coerce an array (1-D allowed) or KnotSet to a KnotSet."""
    if isinstance(points, KnotSet):
        return points
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    return KnotSet(pts)


def regression_matrix(g_kind: str, X: np.ndarray) -> np.ndarray:
    """Evaluate the regression functions g at each row of X: (n, q)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0]
    if g_kind == "none":
        return np.zeros((n, 0))
    if g_kind == "constant":
        return np.ones((n, 1))
    if g_kind == "constant+linear":
        return np.hstack([np.ones((n, 1)), X])
    raise ValueError(f"unknown g_kind {g_kind!r}; choose from {G_KINDS}")


# ---------------------------------------------------------------------------
# barycentric Lagrange
# ---------------------------------------------------------------------------


def _barycentric_weights(knots: np.ndarray) -> np.ndarray:
    m = knots.shape[0]
    w = np.ones(m)
    for j in range(m):
        diff = knots[j] - np.delete(knots, j)
        if np.any(diff == 0.0):
            raise DuplicateKnots("lagrange knots must be distinct")
        w[j] = 1.0 / np.prod(diff)
    return w / np.max(np.abs(w))


def lagrange_eval(knots, gamma, x):
    """Polynomial through (knots, gamma), second barycentric form.

    Exact hits on a knot short-circuit to the stored value; elsewhere the
    weight ratio keeps the evaluation stable near the knots.
    """
    knots = np.asarray(knots, dtype=float).ravel()
    gamma = np.asarray(gamma, dtype=float).ravel()
    if knots.shape[0] != gamma.shape[0]:
        raise DimensionMismatch("knots and gamma must have equal length")
    w = _barycentric_weights(knots)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(xs.shape[0])
    for i, xi in enumerate(xs):
        diff = xi - knots
        hit = np.nonzero(diff == 0.0)[0]
        if hit.size:
            out[i] = gamma[hit[0]]
            continue
        t = w / diff
        out[i] = np.dot(t, gamma) / np.sum(t)
    return float(out[0]) if np.isscalar(x) or np.asarray(x).ndim == 0 else out


# ---------------------------------------------------------------------------
# cubic splines
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SplineCoefficients:
    """Piecewise cubic s(x) = a + b t + c t^2 + d t^3 on each interval, t = x - knot."""

    knots: np.ndarray
    coeffs: np.ndarray  # (m - 1, 4) rows of (a, b, c, d)
    boundary: str


def _second_derivatives(knots, gamma, boundary):
    m = knots.shape[0]
    h = np.diff(knots)
    if m == 2:
        return np.zeros(2)
    rhs = (gamma[2:] - gamma[1:-1]) / h[1:] - (gamma[1:-1] - gamma[:-2]) / h[:-1]
    if boundary == "natural":
        # tridiagonal SPD system on the interior second derivatives
        if m == 3:
            interior = rhs / ((h[0] + h[1]) / 3.0)
        else:
            ab = np.zeros((2, m - 2))
            ab[1, :] = (h[:-1] + h[1:]) / 3.0
            ab[0, 1:] = h[1:-1] / 6.0
            interior = solveh_banded(ab, rhs)
        return np.concatenate([[0.0], interior, [0.0]])
    if boundary == "not-a-knot":
        if m == 3:
            # both end conditions collapse; the spline is the parabola
            M = 2.0 * rhs[0] / (h[0] + h[1])
            return np.full(3, M)
        # end rows equate third derivatives across the first and last
        # interior knots; interior rows are the standard continuity ones
        ab = np.zeros((5, m))
        b = np.zeros(m)
        u = 2  # band coordinates: ab[u + i - j, j] with l = u = 2

        def put(i, j, v):
            ab[u + i - j, j] = v

        put(0, 0, h[1])
        put(0, 1, -(h[0] + h[1]))
        put(0, 2, h[0])
        for i in range(1, m - 1):
            put(i, i - 1, h[i - 1] / 6.0)
            put(i, i, (h[i - 1] + h[i]) / 3.0)
            put(i, i + 1, h[i] / 6.0)
            b[i] = rhs[i - 1]
        put(m - 1, m - 3, h[-1])
        put(m - 1, m - 2, -(h[-2] + h[-1]))
        put(m - 1, m - 1, h[-2])
        return solve_banded((2, 2), ab, b)
    raise ValueError(f"unknown boundary {boundary!r}")


def fit_cubic_spline(knots, gamma, boundary: str = "natural") -> SplineCoefficients:
    """Interpolating cubic spline through (knots, gamma), O(m) construction."""
    knots = np.asarray(knots, dtype=float).ravel()
    gamma = np.asarray(gamma, dtype=float).ravel()
    if knots.shape[0] != gamma.shape[0]:
        raise DimensionMismatch("knots and gamma must have equal length")
    if knots.shape[0] < 2:
        raise DimensionMismatch("a spline needs at least two knots")
    d = np.diff(knots)
    if np.any(d == 0.0):
        raise DuplicateKnots("spline knots must be distinct")
    if np.any(d < 0.0):
        raise UnsortedKnots("spline knots must be strictly increasing")
    M = _second_derivatives(knots, gamma, boundary)
    h = d
    a = gamma[:-1]
    b = (gamma[1:] - gamma[:-1]) / h - h * (2.0 * M[:-1] + M[1:]) / 6.0
    c = M[:-1] / 2.0
    e = (M[1:] - M[:-1]) / (6.0 * h)
    return SplineCoefficients(
        knots=knots, coeffs=np.column_stack([a, b, c, e]), boundary=boundary
    )


def fit_natural_spline(knots, gamma) -> SplineCoefficients:
    """Natural cubic spline (zero second derivative at both ends)."""
    return fit_cubic_spline(knots, gamma, boundary="natural")


def spline_eval(coeffs: SplineCoefficients, x):
    """Evaluate a fitted spline; ends extrapolate with the boundary cubic."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    idx = np.clip(np.searchsorted(coeffs.knots, xs, side="right") - 1, 0,
                  coeffs.knots.shape[0] - 2)
    t = xs - coeffs.knots[idx]
    a, b, c, e = (coeffs.coeffs[idx, k] for k in range(4))
    out = a + t * (b + t * (c + t * e))
    return float(out[0]) if np.isscalar(x) or np.asarray(x).ndim == 0 else out


# ---------------------------------------------------------------------------
# kernel and kriging interpolators
# ---------------------------------------------------------------------------


def kernel_interp_eval(A, gamma, spec: KernelSpec, x):
    """Minimum-norm kernel interpolant gamma' R_A^{-1} r_A(x)."""
    A = as_knots(A)
    gamma = np.asarray(gamma, dtype=float).ravel()
    if gamma.shape[0] != A.m:
        raise DimensionMismatch("gamma length must equal the number of knots")
    fac = spd_factor(kernel_matrix(spec, A.points, A.points))
    w = fac.solve(gamma)
    xs = np.asarray(x, dtype=float)
    single = xs.ndim == 1
    xs = np.atleast_2d(xs)
    vals = kernel_matrix(spec, xs, A.points) @ w
    return float(vals[0]) if single else vals


@dataclass(frozen=True)
class GPBasis:
    """Precomputed machinery of the kriging interpolator b(x) = U g(x) + V r_A(x)."""

    knots: KnotSet
    spec: KernelSpec
    g_kind: str
    U: np.ndarray  # (m, q)
    V: np.ndarray  # (m, m), symmetric, V G_A = 0
    R_A_factor: SpdFactorization
    G_A: np.ndarray  # (m, q)

    @property
    def m(self) -> int:
        return self.knots.m

    @property
    def q(self) -> int:
        return self.G_A.shape[1]


def gp_basis_build(A, spec: KernelSpec, g_kind: str = "constant+linear") -> GPBasis:
    """Build U, V and the knot-correlation factorization for a knot set."""
    A = as_knots(A)
    G = regression_matrix(g_kind, A.points)
    q = G.shape[1]
    if A.m <= q:
        raise RankDeficientRegression(
            f"need more knots ({A.m}) than regression functions ({q})"
        )
    fac = spd_factor(kernel_matrix(spec, A.points, A.points))
    Rinv = fac.solve(np.eye(A.m))
    if q == 0:
        U = np.zeros((A.m, 0))
        V = 0.5 * (Rinv + Rinv.T)
        return GPBasis(A, spec, g_kind, U, V, fac, G)
    RinvG = fac.solve(G)
    C = G.T @ RinvG
    cond = np.linalg.cond(C)
    if not np.isfinite(cond) or cond > 1e12:
        raise RankDeficientRegression(
            f"regression functions are numerically rank deficient (cond={cond:.2e})"
        )
    U = np.linalg.solve(C.T, RinvG.T).T
    V = Rinv - U @ RinvG.T
    V = 0.5 * (V + V.T)
    return GPBasis(A, spec, g_kind, U, V, fac, G)


def gp_basis_eval(basis: GPBasis, x) -> np.ndarray:
    """The m basis functions b(x) at a single point x."""
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != basis.knots.d:
        raise DimensionMismatch(
            f"point has {x.shape[0]} coordinates, knots have {basis.knots.d}"
        )
    g = regression_matrix(basis.g_kind, x[None, :])[0]
    r = kernel_matrix(basis.spec, x[None, :], basis.knots.points)[0]
    return basis.U @ g + basis.V @ r


def design_matrix(basis: GPBasis, X) -> np.ndarray:
    """Rows b(x_i)' for the points of X: G_X U' + R_XA V."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != basis.knots.d:
        raise DimensionMismatch(
            f"points have {X.shape[1]} coordinates, knots have {basis.knots.d}"
        )
    G = regression_matrix(basis.g_kind, X)
    R = kernel_matrix(basis.spec, X, basis.knots.points)
    return G @ basis.U.T + R @ basis.V


def gp_interp_eval(basis: GPBasis, gamma, X) -> np.ndarray:
    """Kriging interpolant gamma' b(x) at each row of X."""
    gamma = np.asarray(gamma, dtype=float).ravel()
    return design_matrix(basis, X) @ gamma


# ---------------------------------------------------------------------------
# interpolation-error diagnostic
# ---------------------------------------------------------------------------


def interpolation_error(
    interp,
    truth,
    d: int,
    grid_size: int = 401,
    mc_points: int = 100_000,
    seed: int = 20_240,
) -> float:
    """Worst-case absolute error of an interpolant against an oracle.

    Dense tensor grids up to d = 2; beyond that the maximum over a seeded
    uniform sample, with the seed fixed so the diagnostic is reproducible.
    """
    if d <= 2:
        axes = [np.linspace(0.0, 1.0, grid_size)] * d
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.column_stack([m.ravel() for m in mesh])
    else:
        rng = np.random.default_rng(seed)
        pts = rng.random((mc_points, d))
    return float(np.max(np.abs(np.asarray(interp(pts)) - np.asarray(truth(pts)))))
