"""Knot placement: classical 1-D node sets, replication designs, subset
selection by the pairwise inverse-distance criterion, and sequential
knot addition by largest squared residual."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import LengthMismatch, NoCandidatesLeft
from .interpolators import KnotSet, as_knots

# Coincident coordinates would make the criterion infinite; clamping keeps
# "avoid this subset" semantics on data with repeated feature values.
_COORD_CLAMP = 1e-12

DEFAULT_SUBSET_TRIALS = 20_000


def default_knot_count(d: int) -> int:
    """The 10-per-dimension default knot budget."""
    return 10 * d


def chebyshev_knots(m: int) -> np.ndarray:
    """Chebyshev nodes mapped to (0, 1), sorted ascending."""
    if m < 1:
        raise ValueError("m must be >= 1")
    j = np.arange(1, m + 1)
    return np.sort(0.5 - np.cos((2 * j - 1) * np.pi / (2 * m)) / 2.0)


def equispaced_knots(m: int) -> np.ndarray:
    """m equally spaced points including both endpoints of [0, 1]."""
    if m < 2:
        raise ValueError("m must be >= 2")
    return np.linspace(0.0, 1.0, m)


def knot_criterion(A) -> float:
    """max over knot pairs of the coordinatewise inverse-distance sum.

    Small values indicate sets that fill space without collapsing in any
    single coordinate projection.
    """
    pts = as_knots(A).points if not isinstance(A, np.ndarray) else np.atleast_2d(A)
    if pts.ndim == 1:
        pts = pts[:, None]
    m = pts.shape[0]
    if m < 2:
        raise ValueError("criterion needs at least two knots")
    diff = np.abs(pts[:, None, :] - pts[None, :, :])
    np.clip(diff, _COORD_CLAMP, None, out=diff)
    scores = np.sum(1.0 / diff, axis=2)
    iu = np.triu_indices(m, k=1)
    return float(np.max(scores[iu]))


class KnotSelection(NamedTuple):
    knots: KnotSet
    indices: np.ndarray
    criterion: float


def select_knots(X, m: int, trials: int = DEFAULT_SUBSET_TRIALS, seed=None) -> KnotSelection:
    """Best of `trials` random m-subsets of X under the pairwise criterion.

    The subset stream is drawn sequentially from the seed, so the result is
    reproducible; scoring order is irrelevant to the outcome.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0]
    if m > n:
        raise ValueError(f"cannot select {m} knots from {n} candidates")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    best_idx = None
    best_score = np.inf
    for _ in range(trials):
        idx = np.sort(rng.choice(n, size=m, replace=False))
        score = knot_criterion(X[idx])
        if score < best_score:
            best_score = score
            best_idx = idx
    return KnotSelection(knots=KnotSet(X[best_idx]), indices=best_idx,
                         criterion=best_score)


def next_knot(X, A, y, model=None, predictions=None, exclude_indices=None) -> int:
    """Index into X of the unused candidate with the largest squared residual.

    Either a fitted model or precomputed predictions at the rows of X must
    be supplied.  Membership in A is decided by exact row equality unless
    explicit indices are given; ties go to the lowest index.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if predictions is None:
        if model is None:
            raise ValueError("supply either a model or precomputed predictions")
        from .estimators import predict  # deferred: estimators imports designs

        predictions = predict(model, X)
    predictions = np.asarray(predictions, dtype=float).ravel()
    if predictions.shape[0] != X.shape[0] or y.shape[0] != X.shape[0]:
        raise LengthMismatch("X, y and predictions must have matching lengths")
    used = np.zeros(X.shape[0], dtype=bool)
    if exclude_indices is not None:
        used[np.asarray(exclude_indices, dtype=int)] = True
    else:
        pts = as_knots(A).points
        for row in pts:
            used |= np.all(X == row, axis=1)
    if np.all(used):
        raise NoCandidatesLeft("every candidate already belongs to the knot set")
    sq = (y - predictions) ** 2
    sq[used] = -np.inf
    return int(np.argmax(sq))


@dataclass(frozen=True)
class ReplicationDesign:
    """l repeated observations at each of m ordered 1-D knots."""

    knots: np.ndarray
    replications: int

    def __post_init__(self):
        kn = np.asarray(self.knots, dtype=float).ravel()
        object.__setattr__(self, "knots", kn)
        if self.replications < 1:
            raise ValueError("replications must be >= 1")

    @property
    def m(self) -> int:
        return self.knots.shape[0]

    @property
    def n(self) -> int:
        return self.m * self.replications

    def design_points(self) -> np.ndarray:
        """The n design locations, grouped by knot."""
        return np.repeat(self.knots, self.replications)


def replication_design(knots, l: int) -> ReplicationDesign:
    """Assign l replications to each knot."""
    return ReplicationDesign(knots=np.asarray(knots, dtype=float), replications=l)
