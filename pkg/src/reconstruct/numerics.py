"""Dense and banded SPD linear algebra with an explicit jitter policy.

Every solve in the package funnels through here so that conditioning
behaviour is uniform: a factorization is attempted with no jitter first,
then with 1e-10 and 1e-8 times the mean diagonal added to the diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import (
    cho_factor,
    cho_solve,
    cho_solve_banded,
    cholesky_banded,
)

from .errors import DimensionMismatch, NotPositiveDefinite, SingularSystem

JITTER_LADDER = (0.0, 1e-10, 1e-8)

# Fixed seed for the stochastic trace estimator so GCV stays reproducible.
_HUTCHINSON_SEED = 181351
_HUTCHINSON_PROBES = 64
_EXACT_TRACE_LIMIT = 10_000


class TraceEstimate(float):
    """A trace value that knows whether it was estimated stochastically."""

    stochastic: bool
    n_probes: int | None

    def __new__(cls, value, stochastic=False, n_probes=None):
        obj = super().__new__(cls, value)
        obj.stochastic = stochastic
        obj.n_probes = n_probes
        return obj


@dataclass(frozen=True)
class SpdFactorization:
    """Lower-triangular Cholesky factor of a (possibly jittered) SPD matrix."""

    dimension: int
    factor: np.ndarray
    jitter_applied: float

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape[0] != self.dimension:
            raise DimensionMismatch(
                f"rhs has {rhs.shape[0]} rows, factorization is {self.dimension}-dimensional"
            )
        return cho_solve((self.factor, True), rhs)

    def logdet(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self.factor))))


def spd_factor(A: np.ndarray) -> SpdFactorization:
    """Cholesky-factor a symmetric matrix, escalating jitter as needed."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
    n = A.shape[0]
    scale = float(np.mean(np.diag(A)))
    if not np.isfinite(scale) or scale <= 0.0:
        scale = 1.0
    for level in JITTER_LADDER:
        jitter = level * scale
        try:
            M = A if jitter == 0.0 else A + jitter * np.eye(n)
            c, _ = cho_factor(M, lower=True)
            # cho_factor leaves the unused triangle as-is; keep a clean factor
            return SpdFactorization(dimension=n, factor=np.tril(c), jitter_applied=jitter)
        except np.linalg.LinAlgError:
            continue
    raise NotPositiveDefinite(
        f"matrix of dimension {n} failed Cholesky at all jitter levels {JITTER_LADDER}"
    )


def spd_solve(A: np.ndarray, rhs: np.ndarray, return_jitter: bool = False):
    """Solve (A + jitter*I) X = rhs for symmetric positive definite A."""
    A = np.asarray(A, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
    if rhs.shape[0] != A.shape[0]:
        raise DimensionMismatch(
            f"rhs has {rhs.shape[0]} rows but matrix is {A.shape[0]}x{A.shape[1]}"
        )
    fac = spd_factor(A)
    X = fac.solve(rhs)
    if return_jitter:
        return X, fac.jitter_applied
    return X


@dataclass(frozen=True)
class BandedSpdMatrix:
    """Symmetric banded matrix in upper-banded storage.

    ``ab`` has shape (bandwidth + 1, n) in the LAPACK upper form used by
    :func:`scipy.linalg.solveh_banded`: ``ab[bandwidth - k, j]`` holds the
    k-th superdiagonal entry ``A[j - k, j]``.
    """

    dimension: int
    bandwidth: int
    ab: np.ndarray

    def dense(self) -> np.ndarray:
        A = np.zeros((self.dimension, self.dimension))
        for k in range(self.bandwidth + 1):
            for j in range(k, self.dimension):
                v = self.ab[self.bandwidth - k, j]
                A[j - k, j] = v
                A[j, j - k] = v
        return A


def second_difference_gram(n: int) -> BandedSpdMatrix:
    """Gram matrix M'M of the (n-2) x n second-difference operator M."""
    if n < 3:
        raise DimensionMismatch("second differences need at least 3 points")
    ab = np.zeros((3, n))
    d = np.full(n, 6.0)
    d[0] = d[-1] = 1.0
    if n >= 2:
        d[1] = d[-2] = 5.0
    if n == 3:
        d[1] = 4.0
    o1 = np.full(n - 1, -4.0)
    o1[0] = o1[-1] = -2.0
    o2 = np.full(n - 2, 1.0)
    ab[2, :] = d
    ab[1, 1:] = o1
    ab[0, 2:] = o2
    return BandedSpdMatrix(dimension=n, bandwidth=2, ab=ab)


def fdp_system(n: int, lam: float) -> BandedSpdMatrix:
    """The pentadiagonal system n*lam*M'M + I on an n-point grid."""
    gram = second_difference_gram(n)
    ab = n * lam * gram.ab
    ab[2, :] += 1.0
    return BandedSpdMatrix(dimension=n, bandwidth=2, ab=ab)


def banded_spd_solve(M: BandedSpdMatrix, rhs: np.ndarray) -> np.ndarray:
    """Solve M x = rhs in O(n) for a banded SPD matrix."""
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != M.dimension:
        raise DimensionMismatch(
            f"rhs has {rhs.shape[0]} rows but matrix dimension is {M.dimension}"
        )
    try:
        cb = cholesky_banded(M.ab)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"banded factorization failed: {exc}") from exc
    return cho_solve_banded((cb, False), rhs)


def banded_inverse_diagonal(M: BandedSpdMatrix) -> np.ndarray:
    """Diagonal of M^{-1} by the Takahashi recurrences, O(n * bandwidth^2).

    Only entries of the inverse on the band are ever formed; the recursion
    runs over columns from right to left using the banded Cholesky factor.
    """
    try:
        U = cholesky_banded(M.ab)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"banded factorization failed: {exc}") from exc
    n = M.dimension
    b = M.bandwidth
    dU = U[b, :]
    Dinv = 1.0 / dU**2

    # unit lower-triangular factor entries L[i, j] = U[j, i] / U[j, j], i > j
    def lval(i: int, j: int) -> float:
        r = b - (i - j)
        if r < 0 or i >= n:
            return 0.0
        return U[r, i] / dU[j]

    # Zu[r, j] stores Z[j - r, j] for the symmetric inverse Z
    Zu = np.zeros((b + 1, n))
    for j in range(n - 1, -1, -1):
        kmax = min(j + b, n - 1)
        s = 0.0
        for k in range(j + 1, kmax + 1):
            s += lval(k, j) * Zu[k - j, k]
        Zu[0, j] = Dinv[j] - s
        for i in range(j - 1, max(j - b, 0) - 1, -1):
            s = 0.0
            for k in range(i + 1, min(i + b, n - 1) + 1):
                zkj = Zu[j - k, j] if k <= j else Zu[k - j, k]
                s += lval(k, i) * zkj
            Zu[j - i, j] = -s
    return Zu[0, :]


def hat_trace(B: np.ndarray, Sigma: np.ndarray, lam: float) -> TraceEstimate:
    """trace(B (B'B + n*lam*Sigma)^{-1} B') for dense B and Sigma."""
    B = np.asarray(B, dtype=float)
    Sigma = np.asarray(Sigma, dtype=float)
    if B.ndim != 2:
        raise DimensionMismatch("B must be a 2-D array")
    n, m = B.shape
    if Sigma.shape != (m, m):
        raise DimensionMismatch(
            f"Sigma has shape {Sigma.shape}, expected ({m}, {m})"
        )
    C = B.T @ B
    S = C + n * lam * Sigma
    try:
        fac = spd_factor(S)
    except NotPositiveDefinite as exc:
        raise SingularSystem(str(exc)) from exc
    return TraceEstimate(float(np.trace(fac.solve(C))))


def fdp_hat_trace(
    n: int,
    lam: float,
    exact_limit: int = _EXACT_TRACE_LIMIT,
    n_probes: int = _HUTCHINSON_PROBES,
) -> TraceEstimate:
    """trace((n*lam*M'M + I)^{-1}) for the pentadiagonal smoothing system.

    Exact via the banded inverse diagonal up to ``exact_limit`` points;
    beyond that a fixed-seed Hutchinson estimator with Rademacher probes
    is used and the result is flagged as stochastic.
    """
    system = fdp_system(n, lam)
    if n <= exact_limit:
        return TraceEstimate(float(np.sum(banded_inverse_diagonal(system))))
    try:
        cb = cholesky_banded(system.ab)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"banded factorization failed: {exc}") from exc
    rng = np.random.default_rng(_HUTCHINSON_SEED)
    total = 0.0
    chunk = 16
    done = 0
    while done < n_probes:
        k = min(chunk, n_probes - done)
        Z = rng.integers(0, 2, size=(n, k)).astype(float) * 2.0 - 1.0
        W = cho_solve_banded((cb, False), Z)
        total += float(np.einsum("ij,ij->", Z, W))
        done += k
    return TraceEstimate(total / n_probes, stochastic=True, n_probes=n_probes)
