"""Comparator methods: full GPR with regression terms, the Nystrom
low-rank speed-up, the sparse pseudo-input GP, and the quasi-posterior
estimator that coincides with reconstruction regression.

The low-rank paths (Nystrom, SPGP, quasi-posterior, variance search)
work entirely with n x m and m x m arrays; no n x n matrix is formed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from .errors import DegenerateData, SingularSystem, NotPositiveDefinite
from .estimators import (
    DEFAULT_LAMBDA_GRID,
    FitDiagnostics,
    FittedModel,
    _kriging_full_fit,
    _plateau_argmin,
)
from .interpolators import KnotSet, as_knots, regression_matrix
from .kernels import KernelSpec, kernel_matrix
from .numerics import spd_factor

# Beyond this many training points the n-vector of fitted values is not
# materialized for the full-coefficient Nystrom model (it would cost an
# n x n kernel sweep); prediction does not need it.
_GAMMA_MATERIALIZE_LIMIT = 4096


@dataclass(frozen=True)
class VarianceParams:
    """Process and noise variances of the working GP model."""

    tau2: float
    sigma2: float

    def __post_init__(self):
        if self.tau2 <= 0 or self.sigma2 <= 0:
            raise ValueError("variances must be strictly positive")

    @property
    def ridge_weight(self) -> float:
        """The equivalent penalty weight sigma^2 / tau^2 (before the 1/n)."""
        return self.sigma2 / self.tau2


def fit_gpr(
    X,
    y,
    spec: KernelSpec,
    g_kind: str = "constant+linear",
    lambda_policy="gcv",
    grid=None,
) -> FittedModel:
    """Kriging smoother with GLS trend on all n points, lambda by GCV."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    lam, beta, c, gamma, jitter, gval, _ = _kriging_full_fit(
        X, y, spec, g_kind, lambda_policy, grid
    )
    return FittedModel(
        interpolator="gp",
        knots=KnotSet(X),
        gamma_hat=gamma,
        lam=lam,
        kernel=spec,
        g_kind=g_kind,
        beta=beta,
        w=c,
        method="gpr",
        diagnostics=FitDiagnostics(gcv=gval, jitter=jitter),
    )


def _nystrom_workspace(X, A, spec, g_kind):
    Ak = as_knots(A)
    RXA = kernel_matrix(spec, X, Ak.points)
    RA = kernel_matrix(spec, Ak.points, Ak.points)
    G = regression_matrix(g_kind, X)
    return Ak, RXA, RA, G


def fit_nystrom(
    X,
    y,
    A,
    spec: KernelSpec,
    g_kind: str = "constant+linear",
    lambda_policy="gcv",
    grid=None,
) -> FittedModel:
    """Low-rank GPR: the Gram matrix is replaced by its m-rank surrogate
    R_XA R_A^{-1} R_XA', all solves go through the Woodbury identity in
    O(m^2 n), and prediction keeps the exact cross-kernel values.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n = X.shape[0]
    Ak, RXA, RA, G = _nystrom_workspace(X, A, spec, g_kind)
    q = G.shape[1]
    C = RXA.T @ RXA
    Ry = RXA.T @ y
    RG = RXA.T @ G

    def solve_at(lam):
        """Woodbury pieces at one lambda; returns None when unusable."""
        dl = n * lam
        if dl <= 0.0:
            return None
        S = RA + C / dl
        try:
            facS = spd_factor(S)
        except NotPositiveDefinite:
            return None
        Kinv_y = (y - RXA @ facS.solve(Ry) / dl) / dl
        if q:
            Kinv_G = (G - RXA @ facS.solve(RG) / dl) / dl
            M = G.T @ Kinv_G
            try:
                beta = np.linalg.solve(M, G.T @ Kinv_y)
                corr = float(np.trace(np.linalg.solve(M, Kinv_G.T @ Kinv_G)))
            except np.linalg.LinAlgError:
                return None
            alpha = Kinv_y - Kinv_G @ beta
        else:
            beta = np.zeros(0)
            corr = 0.0
            alpha = Kinv_y
        trK = (n - float(np.trace(facS.solve(C))) / dl) / dl
        trH = n - dl * (trK - corr)
        rss = float(np.sum((dl * alpha) ** 2))
        ratio = trH / n
        gval = (
            math.inf if ratio >= 1.0 - 1e-12 else rss / (n * (1.0 - ratio) ** 2)
        )
        return beta, alpha, gval, facS.jitter_applied

    gval = None
    if isinstance(lambda_policy, str) and lambda_policy == "gcv":
        lam_grid = DEFAULT_LAMBDA_GRID if grid is None else np.atleast_1d(grid)
        if lam_grid.size == 1:
            lam = float(lam_grid[0])
        else:
            curve = np.empty(len(lam_grid))
            for i, lam_i in enumerate(lam_grid):
                out = solve_at(lam_i)
                curve[i] = math.inf if out is None else out[2]
            idx = _plateau_argmin(lam_grid, curve)
            lam = float(lam_grid[idx])
            gval = float(curve[idx]) if np.isfinite(curve[idx]) else None
    else:
        lam = float(lambda_policy)
    out = solve_at(lam)
    if out is None:
        raise SingularSystem(f"low-rank system unsolvable at lambda={lam}")
    beta, alpha, _, jitter = out
    gamma = None
    if n <= _GAMMA_MATERIALIZE_LIMIT:
        gamma = np.zeros(n)
        if q:
            gamma += G @ beta
        chunk = max(1, 2_000_000 // n)
        for s in range(0, n, chunk):
            gamma[s : s + chunk] += kernel_matrix(spec, X[s : s + chunk], X) @ alpha
    return FittedModel(
        interpolator="gp",
        knots=KnotSet(X),
        gamma_hat=gamma,
        lam=lam,
        kernel=spec,
        g_kind=g_kind,
        beta=beta,
        w=alpha,
        method="nystrom",
        diagnostics=FitDiagnostics(gcv=gval, jitter=jitter),
    )


def _low_rank_pieces(X, A, spec):
    Ak = as_knots(A)
    RXA = kernel_matrix(spec, X, Ak.points)
    RA = kernel_matrix(spec, Ak.points, Ak.points)
    facA = spd_factor(RA)
    Bm = facA.solve(RXA.T).T  # R_XA R_A^{-1}
    # diagonal of the discarded low-rank residual, clamped at zero
    lam_diag = np.clip(1.0 - np.einsum("ij,ij->i", RXA, Bm), 0.0, None)
    return Ak, RXA, RA, facA, Bm, lam_diag


def fit_spgp(X, y, A, spec: KernelSpec, vp: VarianceParams) -> FittedModel:
    """Sparse pseudo-input GP with the diagonal residual correction.

    Knot values minimize the residual-weighted least squares plus the
    kernel-norm penalty scaled by the noise-to-signal ratio; prediction
    is the kernel interpolant through the estimated knot values.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    Ak, RXA, RA, facA, Bm, lam_diag = _low_rank_pieces(X, A, spec)
    weights = 1.0 / (vp.tau2 * lam_diag + vp.sigma2)
    RAinv = facA.solve(np.eye(Ak.m))
    S = Bm.T @ (weights[:, None] * Bm) + RAinv / vp.tau2
    try:
        facS = spd_factor(0.5 * (S + S.T))
    except NotPositiveDefinite as exc:
        raise SingularSystem(str(exc)) from exc
    gamma = facS.solve(Bm.T @ (weights * y))
    return FittedModel(
        interpolator="kernel",
        knots=Ak,
        gamma_hat=gamma,
        lam=vp.ridge_weight / X.shape[0],
        kernel=spec,
        g_kind="none",
        beta=None,
        w=facA.solve(gamma),
        method="spgp",
        diagnostics=FitDiagnostics(jitter=max(facA.jitter_applied, facS.jitter_applied)),
    )


def fit_empirical_bayes(X, y, A, spec: KernelSpec, vp: VarianceParams) -> FittedModel:
    """Quasi-posterior mode: like the sparse GP but without the diagonal
    correction, so the residual weight is constant 1/sigma^2."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    Ak, RXA, RA, facA, Bm, _ = _low_rank_pieces(X, A, spec)
    RAinv = facA.solve(np.eye(Ak.m))
    S = Bm.T @ Bm + vp.ridge_weight * RAinv
    try:
        facS = spd_factor(0.5 * (S + S.T))
    except NotPositiveDefinite as exc:
        raise SingularSystem(str(exc)) from exc
    gamma = facS.solve(Bm.T @ y)
    return FittedModel(
        interpolator="kernel",
        knots=Ak,
        gamma_hat=gamma,
        lam=vp.ridge_weight / X.shape[0],
        kernel=spec,
        g_kind="none",
        beta=None,
        w=facA.solve(gamma),
        method="eb",
        diagnostics=FitDiagnostics(jitter=max(facA.jitter_applied, facS.jitter_applied)),
    )


def estimate_variances(X, y, A, spec: KernelSpec, grid_points: int = 20) -> VarianceParams:
    """Grid search maximizing the sparse-GP marginal likelihood of y.

    Both variances run over ``grid_points`` log-spaced values spanning
    [1e-4, 1e4] times var(y).  The likelihood depends on the noise-to-
    signal ratio through one m x m system per distinct ratio, so the
    400-cell grid costs only 2 * grid_points - 1 such systems.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n = X.shape[0]
    vy = float(np.var(y))
    if vy <= 0.0:
        raise DegenerateData("response has zero variance")
    Ak = as_knots(A)
    m = Ak.m
    RXA = kernel_matrix(spec, X, Ak.points)
    RA = kernel_matrix(spec, Ak.points, Ak.points)
    facA = spd_factor(RA)
    P = solve_triangular(facA.factor, RXA.T, lower=True).T  # R_XA L^{-T}
    lam_diag = np.clip(1.0 - np.einsum("ij,ij->i", P, P), 0.0, None)
    grid = np.logspace(-4.0, 4.0, grid_points) * vy
    # cache per distinct ratio index difference: rho = grid[i] / grid[j]
    cache: dict[int, tuple[float, float]] = {}
    best = (-math.inf, 0, 0)
    for i, t2 in enumerate(grid):  # tau^2
        for j, s2 in enumerate(grid):  # sigma^2
            key = j - i
            if key not in cache:
                rho = s2 / t2
                u = 1.0 / (lam_diag + rho)
                Gm = (P * u[:, None]).T @ P
                h = P.T @ (u * y)
                try:
                    cf = cho_factor(np.eye(m) + Gm, lower=True)
                except np.linalg.LinAlgError:
                    cache[key] = (math.inf, math.inf)
                else:
                    quad = float(y * u @ y) - float(h @ cho_solve(cf, h))
                    logdet = float(np.sum(np.log(lam_diag + rho))) + 2.0 * float(
                        np.sum(np.log(np.diag(cf[0])))
                    )
                    cache[key] = (quad, logdet)
            quad, logdet = cache[key]
            if not np.isfinite(quad):
                continue
            ll = -0.5 * (n * math.log(2.0 * math.pi) + n * math.log(t2) + logdet + quad / t2)
            if ll > best[0]:
                best = (ll, i, j)
    if not np.isfinite(best[0]):
        raise SingularSystem("marginal likelihood undefined on the whole grid")
    return VarianceParams(tau2=float(grid[best[1]]), sigma2=float(grid[best[2]]))
